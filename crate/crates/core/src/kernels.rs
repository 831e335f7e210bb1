//! The nonnegative kernels `K_alpha(p) = |z|^(alpha/2) / ||p||^(alpha+1)` and
//! `K_b(p) = |x| / ||p||^2`, and seeded audits of the Calderon-Zygmund
//! growth and Holder conditions and of `-1`-homogeneity.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::RngExt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heis::HPoint;
use crate::numeric::{seeded_rng, ExperimentRng};

/// Anything that can be evaluated as a kernel on `H \ {0}`.
pub trait Kernel: Sync {
    fn eval(&self, p: HPoint) -> Result<f64>;

    /// `K(p^-1 . q)`.
    fn pair_eval(&self, p: HPoint, q: HPoint) -> Result<f64> {
        self.eval(p.inverse().mul(q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `K_alpha` with `alpha > 0`.
    Alpha(f64),
    /// `K_b`.
    B,
}

impl KernelSpec {
    pub fn alpha(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha.is_finite() {
            Ok(KernelSpec::Alpha(alpha))
        } else {
            Err(Error::invalid(format!("kernel exponent must be positive, got {alpha}")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Alpha(a) => KernelSpec::alpha(a).map(|_| ()),
            KernelSpec::B => Ok(()),
        }
    }

    /// Kernel value without the identity check. Returns NaN at the identity.
    #[inline]
    pub fn value(&self, p: HPoint) -> f64 {
        let norm = p.koranyi_norm();
        match *self {
            KernelSpec::Alpha(alpha) => {
                if alpha == 4.0 {
                    (p.z * p.z) / (norm * norm * norm * norm * norm)
                } else {
                    (p.nh() / norm).powf(alpha) / norm
                }
            }
            KernelSpec::B => p.x.abs() / (norm * norm),
        }
    }

    #[inline]
    pub fn pair_value(&self, p: HPoint, q: HPoint) -> f64 {
        self.value(p.inverse().mul(q))
    }
}

impl Kernel for KernelSpec {
    fn eval(&self, p: HPoint) -> Result<f64> {
        if p.is_identity() {
            return Err(Error::Singularity);
        }
        Ok(self.value(p))
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Alpha(a) => write!(f, "alpha:{a}"),
            KernelSpec::B => write!(f, "b"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Accepts `b`, `alpha:<a>` or `alpha=<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "b" || s == "kb" {
            return Ok(KernelSpec::B);
        }
        let rest = s
            .strip_prefix("alpha:")
            .or_else(|| s.strip_prefix("alpha="))
            .ok_or_else(|| Error::invalid(format!("unknown kernel '{s}', expected 'b' or 'alpha:<a>'")))?;
        let a: f64 = rest
            .parse()
            .map_err(|_| Error::invalid(format!("bad kernel exponent '{rest}'")))?;
        KernelSpec::alpha(a)
    }
}

/// Calderon-Zygmund constants `(kappa, beta, C_K)`.
///
/// `kappa` must lie in `(0, 1)` and `beta` in `(0, 1]`. The bound `c_k` is
/// only required to be positive so that audits can be run against bounds
/// below 1 as negative controls; [`CzParams::is_admissible`] reports whether
/// it also meets `c_k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CzParams {
    pub kappa: f64,
    pub beta: f64,
    pub c_k: f64,
}

impl CzParams {
    pub fn new(kappa: f64, beta: f64, c_k: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(Error::invalid(format!("kappa must lie in (0,1), got {kappa}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0,1], got {beta}")));
        }
        if !(c_k > 0.0 && c_k.is_finite()) {
            return Err(Error::invalid(format!("C_K must be positive, got {c_k}")));
        }
        Ok(Self { kappa, beta, c_k })
    }

    pub fn is_admissible(&self) -> bool {
        self.c_k >= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub p1: HPoint,
    /// Second point of the pair for Holder audits.
    pub p2: Option<HPoint>,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuditKind {
    Growth,
    Hoelder,
}

impl fmt::Display for AuditKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditKind::Growth => "growth",
            AuditKind::Hoelder => "hoelder",
        })
    }
}

/// Outcome of a sampling audit against a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub kind: AuditKind,
    pub samples: usize,
    pub bound: f64,
    pub max_ratio: f64,
    pub argmax: Violation,
    pub violation_count: usize,
    /// The first [`MAX_RECORDED_VIOLATIONS`] violations in sample order.
    pub violations: Vec<Violation>,
}

pub const MAX_RECORDED_VIOLATIONS: usize = 10_000;

impl AuditReport {
    pub fn violated(&self) -> bool {
        self.violation_count > 0
    }

    /// One line per recorded violation:
    /// `check,x1,y1,z1,x2,y2,z2,ratio,bound` (pair columns empty for growth).
    pub fn write_records<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "check,x1,y1,z1,x2,y2,z2,ratio,bound")?;
        for v in &self.violations {
            let (x2, y2, z2) = match v.p2 {
                Some(q) => (q.x.to_string(), q.y.to_string(), q.z.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                self.kind, v.p1.x, v.p1.y, v.p1.z, x2, y2, z2, v.ratio, v.bound
            )?;
        }
        Ok(())
    }
}

const AUDIT_CHUNK: usize = 1 << 16;

/// Random point: uniform in the cube `[-1,1]^3`, then dilated by a factor
/// drawn log-uniformly from `[1e-3, 1e3]`.
fn sample_point(rng: &mut ExperimentRng) -> HPoint {
    loop {
        let p = HPoint::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if !p.is_identity() {
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            return p.dilate_unchecked(scale);
        }
    }
}

/// Maximum of `|t K(delta_t p) - K(p)| / K(p)` over seeded samples with
/// `K(p) > 0`, with `t` log-uniform in `scale_range`.
pub fn check_homogeneity<K: Kernel>(
    kernel: &K,
    sample_count: usize,
    scale_range: (f64, f64),
    seed: u64,
) -> Result<f64> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count must be positive"));
    }
    let (lo, hi) = scale_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::invalid(format!("bad scale range [{lo}, {hi}]")));
    }
    let mut rng = seeded_rng(seed);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut worst = 0.0f64;
    let mut remaining = sample_count;
    while remaining > 0 {
        let n = remaining.min(AUDIT_CHUNK);
        remaining -= n;
        let batch: Vec<(HPoint, f64)> = (0..n)
            .map(|_| {
                let p = sample_point(&mut rng);
                let t = if lhi > llo { rng.random_range(llo..lhi).exp() } else { lo };
                (p, t)
            })
            .collect();
        let devs: Vec<f64> = batch
            .par_iter()
            .map(|&(p, t)| -> Result<f64> {
                let k = kernel.eval(p)?;
                if k > 0.0 {
                    let scaled = kernel.eval(p.dilate_unchecked(t))?;
                    Ok((t * scaled - k).abs() / k)
                } else {
                    Ok(0.0)
                }
            })
            .collect::<Result<_>>()?;
        worst = devs.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}

fn fixed_probes() -> [HPoint; 9] {
    [
        HPoint::new(0.0, 0.0, 1.0),
        HPoint::new(0.0, 0.0, -1.0),
        HPoint::new(1.0, 0.0, 0.0),
        HPoint::new(-1.0, 0.0, 0.0),
        HPoint::new(0.0, 1.0, 0.0),
        HPoint::new(1.0, 0.0, 1.0),
        HPoint::new(1.0, 1.0, 1.0),
        HPoint::new(1.0, 0.0, -0.5),
        HPoint::new(0.5, -0.5, 2.0),
    ]
}

fn collect_report(kind: AuditKind, bound: f64, records: Vec<Violation>) -> AuditReport {
    let samples = records.len();
    let mut argmax = records[0];
    let mut violation_count = 0;
    let mut violations = Vec::new();
    for v in records {
        if v.ratio > argmax.ratio {
            argmax = v;
        }
        if v.ratio > bound {
            violation_count += 1;
            if violations.len() < MAX_RECORDED_VIOLATIONS {
                violations.push(v);
            }
        }
    }
    AuditReport {
        kind,
        samples,
        bound,
        max_ratio: argmax.ratio,
        argmax,
        violation_count,
        violations,
    }
}

/// Audits `K(p) ||p|| <= C_K` on a fixed set of probe points (the axes and a
/// few diagonals) followed by `sample_count` seeded random points.
pub fn check_growth<K: Kernel>(
    kernel: &K,
    params: CzParams,
    sample_count: usize,
    seed: u64,
) -> Result<AuditReport> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count must be positive"));
    }
    let mut rng = seeded_rng(seed);
    let mut points: Vec<HPoint> = fixed_probes().to_vec();
    points.extend((0..sample_count).map(|_| sample_point(&mut rng)));
    let records: Vec<Violation> = points
        .par_iter()
        .map(|&p| -> Result<Violation> {
            Ok(Violation {
                p1: p,
                p2: None,
                ratio: kernel.eval(p)? * p.koranyi_norm(),
                bound: params.c_k,
            })
        })
        .collect::<Result<_>>()?;
    Ok(collect_report(AuditKind::Growth, params.c_k, records))
}

/// The Holder quotient `|K(p1) - K(p2)| ||p1||^(1+beta) / ||p2^-1 p1||^beta`,
/// defined as 0 when `p1 == p2`.
pub fn hoelder_ratio<K: Kernel>(kernel: &K, p1: HPoint, p2: HPoint, beta: f64) -> Result<f64> {
    if p1 == p2 {
        return Ok(0.0);
    }
    let diff = (kernel.eval(p1)? - kernel.eval(p2)?).abs();
    let gap = p2.inverse().mul(p1).koranyi_norm();
    Ok(diff * p1.koranyi_norm().powf(1.0 + beta) / gap.powf(beta))
}

/// Audits the Holder condition on seeded pairs `p2 = p1 . h` where
/// `||h|| = u kappa ||p1||` with `u` log-uniform in `[1e-6, 1]`, so every
/// pair satisfies `d(p1, p2) <= kappa ||p1||`.
pub fn check_hoelder<K: Kernel>(
    kernel: &K,
    params: CzParams,
    sample_count: usize,
    seed: u64,
) -> Result<AuditReport> {
    if sample_count == 0 {
        return Err(Error::invalid("sample_count must be positive"));
    }
    let mut rng = seeded_rng(seed);
    let mut records = Vec::with_capacity(sample_count);
    let mut remaining = sample_count;
    while remaining > 0 {
        let n = remaining.min(AUDIT_CHUNK);
        remaining -= n;
        let pairs: Vec<(HPoint, HPoint)> = (0..n)
            .map(|_| {
                let p1 = sample_point(&mut rng);
                let dir = sample_point(&mut rng);
                let u = 10f64.powf(rng.random_range(-6.0..0.0));
                let len = u * params.kappa * p1.koranyi_norm();
                let h = dir.dilate_unchecked(len / dir.koranyi_norm());
                (p1, p1.mul(h))
            })
            .collect();
        let batch: Vec<Violation> = pairs
            .par_iter()
            .map(|&(p1, p2)| -> Result<Violation> {
                Ok(Violation {
                    p1,
                    p2: Some(p2),
                    ratio: hoelder_ratio(kernel, p1, p2, params.beta)?,
                    bound: params.c_k,
                })
            })
            .collect::<Result<_>>()?;
        records.extend(batch);
    }
    Ok(collect_report(AuditKind::Hoelder, params.c_k, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    const K4: KernelSpec = KernelSpec::Alpha(4.0);

    fn p(x: f64, y: f64, z: f64) -> HPoint {
        HPoint::new(x, y, z)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(K4.eval(p(0.0, 0.0, 1.0)).unwrap(), 1.0);
        assert_eq!(K4.eval(p(0.0, 0.0, 4.0)).unwrap(), 0.5);
        for a in [0.5, 1.0, 2.0, 4.0, 7.3] {
            assert_eq!(KernelSpec::Alpha(a).eval(p(1.0, 0.0, 0.0)).unwrap(), 0.0);
        }
        assert!((KernelSpec::B.eval(p(1.0, 1.0, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(KernelSpec::B.eval(p(0.0, 0.0, 1.0)).unwrap(), 0.0);
    }

    #[test]
    fn generic_alpha_matches_the_closed_form() {
        let q = p(0.3, -0.4, 0.7);
        let n = q.koranyi_norm();
        for a in [0.5, 1.0, 3.0] {
            let expected = q.z.abs().powf(a / 2.0) / n.powf(a + 1.0);
            let got = KernelSpec::Alpha(a).eval(q).unwrap();
            assert!((got - expected).abs() <= 1e-14 * expected);
        }
        let expected = q.z * q.z / n.powi(5);
        assert!((K4.eval(q).unwrap() - expected).abs() <= 1e-14 * expected);
    }

    #[test]
    fn identity_is_a_singularity() {
        assert_eq!(K4.eval(HPoint::IDENTITY), Err(Error::Singularity));
        assert_eq!(KernelSpec::B.pair_eval(p(1.0, 2.0, 3.0), p(1.0, 2.0, 3.0)), Err(Error::Singularity));
        assert!(KernelSpec::alpha(0.0).is_err());
        assert!(KernelSpec::alpha(-2.0).is_err());
    }

    #[test]
    fn pair_eval_on_horizontal_line_vanishes() {
        // both points on the horizontal line through (1,2,0) in direction (3,-1)
        let base = p(1.0, 2.0, 0.0);
        let a = base.mul(p(0.5, -0.5 / 3.0, 0.0));
        let b = base.mul(p(3.0, -1.0, 0.0));
        let v = K4.pair_eval(a, b).unwrap();
        assert!(v < 1e-28, "{v}");
    }

    #[test]
    fn pair_eval_on_the_cantor_line() {
        let f = |t: f64| p(t, 0.0, t);
        for (t, s) in [(0.1, 0.6), (0.9, 0.25), (0.0, 1.0)] {
            let d: f64 = s - t;
            let expected = d.abs() / (d.powi(4) + d * d).sqrt();
            let got = KernelSpec::B.pair_eval(f(t), f(s)).unwrap();
            assert!(got > 0.0);
            assert!((got - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_spec_parses() {
        assert_eq!("b".parse::<KernelSpec>().unwrap(), KernelSpec::B);
        assert_eq!("alpha:4".parse::<KernelSpec>().unwrap(), KernelSpec::Alpha(4.0));
        assert_eq!("Alpha=0.5".parse::<KernelSpec>().unwrap(), KernelSpec::Alpha(0.5));
        assert!("alpha:-1".parse::<KernelSpec>().is_err());
        assert!("gamma".parse::<KernelSpec>().is_err());
        assert_eq!(KernelSpec::Alpha(4.0).to_string().parse::<KernelSpec>().unwrap(), K4);
    }

    #[test]
    fn homogeneity_audit() {
        assert!(check_homogeneity(&K4, 20_000, (1e-3, 1e3), 1).unwrap() <= 1e-12);
        assert!(check_homogeneity(&KernelSpec::B, 20_000, (1e-3, 1e3), 2).unwrap() <= 1e-12);
    }

    struct Constant;
    impl Kernel for Constant {
        fn eval(&self, p: HPoint) -> Result<f64> {
            if p.is_identity() {
                Err(Error::Singularity)
            } else {
                Ok(1.0)
            }
        }
    }

    #[test]
    fn homogeneity_audit_flags_a_constant_kernel() {
        // t K(delta_t p) - K(p) = t - 1 for the constant kernel
        let dev = check_homogeneity(&Constant, 1000, (2.0, 3.0), 5).unwrap();
        assert!(dev >= 1.0 && dev <= 2.0, "{dev}");
    }

    #[test]
    fn growth_audit() {
        let ok = CzParams::new(0.5, 1.0, 1.0).unwrap();
        let r = check_growth(&K4, ok, 50_000, 3).unwrap();
        assert!(!r.violated() && r.max_ratio <= 1.0);
        let r = check_growth(&KernelSpec::B, ok, 50_000, 3).unwrap();
        assert!(!r.violated() && r.max_ratio <= 1.0);

        let tight = CzParams::new(0.5, 1.0, 0.5).unwrap();
        assert!(!tight.is_admissible());
        let r = check_growth(&K4, tight, 100, 3).unwrap();
        assert!(r.violated());
        assert!(r
            .violations
            .iter()
            .any(|v| v.p1 == p(0.0, 0.0, 1.0) && (v.ratio - 1.0).abs() < 1e-15));
    }

    #[test]
    fn hoelder_ratio_of_identical_points_is_zero() {
        let q = p(0.2, 0.1, -0.3);
        assert_eq!(hoelder_ratio(&K4, q, q, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn cz_params_validation() {
        assert!(CzParams::new(0.0, 1.0, 1.0).is_err());
        assert!(CzParams::new(0.5, 1.5, 1.0).is_err());
        assert!(CzParams::new(0.5, 1.0, 0.0).is_err());
    }

    #[test]
    fn violation_records_serialize_one_per_line() {
        let tight = CzParams::new(0.5, 1.0, 0.5).unwrap();
        let r = check_growth(&K4, tight, 200, 8).unwrap();
        let mut out = Vec::new();
        r.write_records(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), r.violations.len() + 1);
        assert!(text.lines().nth(1).unwrap().starts_with("growth,"));
    }
}
