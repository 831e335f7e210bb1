fn main() {
    std::process::exit(hsio::run(std::env::args_os()));
}
