//! Angle expressions such as `pi/3`, `0.25`, `2*pi/7`.

/// Parses one product/quotient of numbers and `pi`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err("empty angle expression".into());
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut factor = String::new();
    for c in compact.chars().chain(std::iter::once('\0')) {
        if c == '*' || c == '/' || c == '\0' {
            let f = parse_factor(&factor).ok_or_else(|| format!("bad factor `{factor}` in `{text}`"))?;
            value = if op == '*' { value * f } else { value / f };
            op = c;
            factor.clear();
        } else {
            factor.push(c);
        }
    }
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

fn parse_factor(f: &str) -> Option<f64> {
    if f.eq_ignore_ascii_case("pi") {
        Some(std::f64::consts::PI)
    } else {
        f.parse().ok()
    }
}

/// Comma-separated list of angle expressions.
pub fn parse_angle_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(parse_angle).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn expressions() {
        assert_eq!(parse_angle("pi/3").unwrap(), PI / 3.0);
        assert_eq!(parse_angle(" 2 * pi / 7 ").unwrap(), 2.0 * PI / 7.0);
        assert_eq!(parse_angle("0.125").unwrap(), 0.125);
        assert_eq!(parse_angle_list("pi/3,pi/6").unwrap(), vec![PI / 3.0, PI / 6.0]);
        assert!(parse_angle("pi/").is_err());
        assert!(parse_angle("tau").is_err());
        assert!(parse_angle("1/0").is_err());
    }
}
