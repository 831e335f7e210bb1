use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Experiments on singular integrals, curvature and regularity in the
/// first Heisenberg group.
#[derive(Debug, Parser)]
#[command(name = "hsio", version)]
pub struct Cli {
    /// TOML config; top-level keys apply to every command, a `[command]`
    /// table overrides them, flags override both
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism); results do not depend on it
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Result table path (default `<command>.csv`); the manifest goes next to it
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a Koch polygon stage and export its vertices
    KochBuild(KochBuildArgs),
    /// Export a horizontally lifted point cloud
    Lift(LiftArgs),
    /// Audit mu(B(p, r)) / r on a discrete measure
    Regularity(RegularityArgs),
    /// Truncated quadratic form, row-sum supremum and L2 estimate
    Quadform(QuadformArgs),
    /// Per-interval K_4 integrals along the log-oscillation curve
    L1scan(L1scanArgs),
    /// Lower bound scan for the vertical chord component on Koch lifts
    Lemma54(Lemma54Args),
    /// Stage-by-stage quadratic form on a lifted Koch curve
    Stagewise(StagewiseArgs),
    /// Supremum of K_b row sums on lifted Cantor sets
    CantorRowsup(CantorRowsupArgs),
    /// Curvature energy over admissible triples in dyadic balls
    Curvature(CurvatureArgs),
    /// Sampled growth, Holder and homogeneity audits of a kernel
    Czcheck(CzcheckArgs),
}

#[derive(Debug, Args, Default)]
pub struct ScheduleArgs {
    /// Explicit angles, e.g. "pi/3,pi/6" (overrides the power law)
    #[arg(long)]
    pub theta: Option<String>,
    /// Power-law constant c in theta_n = c / n^e
    #[arg(long)]
    pub theta_c: Option<f64>,
    /// Power-law exponent e
    #[arg(long)]
    pub theta_exp: Option<f64>,
    /// Stage-0 segment as "x0,y0,x1,y1"
    #[arg(long)]
    pub j0: Option<String>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// koch, cantor or line
    #[arg(long)]
    pub curve: Option<String>,
    /// Koch stage
    #[arg(long)]
    pub stages: Option<usize>,
    /// Cantor depth
    #[arg(long)]
    pub depth: Option<usize>,
    /// Atoms per segment (koch) or in total (line)
    #[arg(long)]
    pub subdivisions: Option<usize>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args)]
pub struct KochBuildArgs {
    #[arg(long)]
    pub stages: Option<usize>,
    /// Maximum number of vertices
    #[arg(long)]
    pub budget: Option<usize>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args)]
pub struct LiftArgs {
    /// koch, log or cantor
    #[arg(long)]
    pub curve: Option<String>,
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub z0: Option<f64>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Sample count along the log curve
    #[arg(long)]
    pub points: Option<usize>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args)]
pub struct RegularityArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// Number of sampled centers, 0 for every atom
    #[arg(long)]
    pub centers: Option<usize>,
    /// Comma-separated radii (default: dyadic fractions of the diameter above the floor)
    #[arg(long)]
    pub radii: Option<String>,
    /// Smallest admissible radius (default: four times the point spacing)
    #[arg(long)]
    pub floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QuadformArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// "alpha:<a>" or "b"
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Relative tolerance of the power iteration
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct L1scanArgs {
    /// Base parameter on the curve
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Gauss-Legendre nodes per panel
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Lemma54Args {
    /// Largest stage scanned
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub n_min: Option<usize>,
    /// Pairs drawn per stage when a stage exceeds the budget
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest pair count scanned exhaustively
    #[arg(long)]
    pub budget: Option<usize>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args)]
pub struct StagewiseArgs {
    /// The kernel is K_{2 alpha}; comparators are theta_n^alpha
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub stages: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
}

#[derive(Debug, Args)]
pub struct CantorRowsupArgs {
    /// Deepest level
    #[arg(long)]
    pub depth: Option<usize>,
    /// Shallowest level (default 1)
    #[arg(long)]
    pub depth_min: Option<usize>,
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Atom used as the ball center (default: the middle atom)
    #[arg(long)]
    pub center_index: Option<usize>,
    /// Comma-separated radius caps
    #[arg(long)]
    pub radii: Option<String>,
    /// Largest number of triples evaluated exhaustively per radius
    #[arg(long)]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CzcheckArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub ck: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// growth, hoelder, homogeneity or all
    #[arg(long)]
    pub check: Option<String>,
}
