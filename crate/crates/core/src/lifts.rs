//! Horizontal lifts of planar curves into the group.
//!
//! A planar path `(x(s), y(s))` lifts to the horizontal curve whose third
//! coordinate satisfies `z' = (x y' - y x') / 2`. Along a straight segment
//! from `(x_k, y_k)` to `(x_{k+1}, y_{k+1})` this integrates exactly to
//! `(x_k y_{k+1} - y_k x_{k+1}) / 2`, so polylines lift without quadrature.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::RngExt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heis::HPoint;
use crate::koch::{local_refinement, segment_length, segment_vector, AngleSchedule, PlanarPoint, PolygonStage, Word};
use crate::numeric::seeded_rng;

/// Largest Cantor depth accepted by [`cantor_build`] (`2^24` atoms).
pub const DEFAULT_CANTOR_MAX_DEPTH: usize = 24;

/// Exhaustive scans visiting more pairs than this fail with a budget error.
pub const EXHAUSTIVE_PAIR_BUDGET: u128 = 4_000_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPolyline {
    pub vertices: Vec<HPoint>,
    /// Address of each segment when the polyline is a Koch stage.
    pub words: Option<Vec<Word>>,
}

impl LiftedPolyline {
    pub fn segment_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    /// Point at parameter `s` in `[0, 1]` along segment `k`, on the lift.
    pub fn point_on_segment(&self, k: usize, s: f64) -> HPoint {
        let a = self.vertices[k];
        let b = self.vertices[k + 1];
        let x = a.x + s * (b.x - a.x);
        let y = a.y + s * (b.y - a.y);
        HPoint::new(x, y, a.z + segment_increment(a.x, a.y, x, y))
    }

    /// Vertex table with an empty weight column. Vertex `i` carries the word
    /// of segment `i`.
    pub fn write_table<W: Write>(&self, w: W) -> io::Result<()> {
        let words = self.words.as_deref();
        write_point_cloud(
            w,
            self.vertices.iter().enumerate().map(|(i, p)| {
                let word = words.and_then(|ws| ws.get(i)).map(|w| w.to_string()).unwrap_or_default();
                (*p, None, word)
            }),
        )
    }
}

/// `index,x,y,z,weight,word` rows for a point cloud.
pub fn write_point_cloud<W: Write, I>(mut w: W, rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = (HPoint, Option<f64>, String)>,
{
    writeln!(w, "index,x,y,z,weight,word")?;
    for (i, (p, weight, word)) in rows.into_iter().enumerate() {
        let weight = weight.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{i},{},{},{},{weight},{word}", p.x, p.y, p.z)?;
    }
    Ok(())
}

#[inline]
fn segment_increment(x0: f64, y0: f64, x1: f64, y1: f64) -> f64 {
    0.5 * (x0 * y1 - y0 * x1)
}

pub fn horizontal_lift(polyline: &[PlanarPoint], z0: f64) -> Result<LiftedPolyline> {
    if polyline.len() < 2 {
        return Err(Error::invalid("a polyline needs at least two points"));
    }
    let mut z = z0;
    let mut vertices = Vec::with_capacity(polyline.len());
    vertices.push(HPoint::new(polyline[0].x, polyline[0].y, z));
    for w in polyline.windows(2) {
        z += segment_increment(w[0].x, w[0].y, w[1].x, w[1].y);
        vertices.push(HPoint::new(w[1].x, w[1].y, z));
    }
    Ok(LiftedPolyline { vertices, words: None })
}

/// Lift of a Koch stage, carrying the segment words.
pub fn lift_stage(stage: &PolygonStage, z0: f64) -> Result<LiftedPolyline> {
    let mut lifted = horizontal_lift(&stage.vertices, z0)?;
    lifted.words = Some(stage.segment_words().collect());
    Ok(lifted)
}

/// Third coordinate of `p^{-1} q`: the signed area swept between the chord
/// and the curve when both points lie on one horizontal lift.
pub fn chord_vertical(p: HPoint, q: HPoint) -> f64 {
    p.inverse().mul(q).z
}

/// Closed-form horizontal lift of `t -> (t, t sin log t)` with `z -> 0` as `t -> 0`.
pub fn log_curve_point(t: f64) -> Result<HPoint> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("log curve parameter must be positive and finite, got {t}")));
    }
    let (s, c) = t.ln().sin_cos();
    let p = HPoint::new(t, t * s, t * t * (2.0 * c + s) / 10.0);
    if !p.z.is_finite() {
        return Err(Error::invalid(format!("log curve point at t = {t} overflows")));
    }
    Ok(p)
}

/// `I_n = [exp(2 pi n + pi/2), exp(2 pi n + 3 pi/4)]`.
pub fn log_curve_interval(n: i64) -> Result<(f64, f64)> {
    if n < 0 {
        return Err(Error::invalid("interval index must be nonnegative"));
    }
    let base = 2.0 * PI * n as f64;
    let (a, b) = ((base + PI / 2.0).exp(), (base + 0.75 * PI).exp());
    if !b.is_finite() {
        return Err(Error::invalid(format!("interval I_{n} is not representable")));
    }
    Ok((a, b))
}

/// Quaternary Cantor set at depth `k`: the `2^k` surviving intervals of
/// length `4^-k`, represented by their midpoints with weight `2^-k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CantorLift {
    pub depth: usize,
    pub representatives: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn cantor_build(k: usize) -> Result<CantorLift> {
    cantor_build_with_budget(k, DEFAULT_CANTOR_MAX_DEPTH)
}

pub fn cantor_build_with_budget(k: usize, max_depth: usize) -> Result<CantorLift> {
    if k > max_depth || k > 60 {
        return Err(Error::Budget {
            what: "cantor atoms",
            required: 1u128 << k.min(127),
            limit: 1u128 << max_depth.min(127),
        });
    }
    // Left endpoints are sums of digits in {0, 3} times powers of 1/4, exact in binary.
    let mut lefts = vec![0.0f64];
    let mut len = 1.0f64;
    for _ in 0..k {
        len *= 0.25;
        lefts = lefts.iter().flat_map(|&a| [a, a + 3.0 * len]).collect();
    }
    let half = 0.5 * len;
    let weight = 0.5f64.powi(k as i32);
    Ok(CantorLift {
        depth: k,
        representatives: lefts.iter().map(|a| a + half).collect(),
        weights: vec![weight; 1 << k],
    })
}

/// `f(t) = (t, 0, t)` applied to each representative.
pub fn cantor_points(c: &CantorLift) -> Vec<(HPoint, f64)> {
    c.representatives
        .iter()
        .zip(&c.weights)
        .map(|(&t, &w)| (HPoint::new(t, 0.0, t), w))
        .collect()
}

/// How a scan chooses the cells it visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Exhaustive,
    Sampled { samples: usize, seed: u64 },
    /// Exhaustive when the work fits `budget`, otherwise `samples` draws.
    Auto { budget: usize, samples: usize, seed: u64 },
}

impl Sampling {
    /// Resolves to `None` (exhaustive) or `Some((samples, seed))`.
    pub(crate) fn resolve(self, total: u128) -> Result<Option<(usize, u64)>> {
        match self {
            Sampling::Exhaustive => {
                if total > EXHAUSTIVE_PAIR_BUDGET {
                    Err(Error::Budget { what: "exhaustive pairs", required: total, limit: EXHAUSTIVE_PAIR_BUDGET })
                } else {
                    Ok(None)
                }
            }
            Sampling::Sampled { samples, seed } => {
                if samples == 0 {
                    Err(Error::invalid("sample count must be positive"))
                } else {
                    Ok(Some((samples, seed)))
                }
            }
            Sampling::Auto { budget, samples, seed } => {
                if total <= budget as u128 {
                    Ok(None)
                } else if samples == 0 {
                    Err(Error::invalid("sample count must be positive"))
                } else {
                    Ok(Some((samples, seed)))
                }
            }
        }
    }
}

/// Segments of the stage-`n + 2` refinement of one stage-`n - 1` segment,
/// lifted in the frame where that segment starts at the origin.
pub(crate) struct LocalPatch {
    pub vertices: Vec<HPoint>,
}

/// Children `1` and `4` of the parent segment occupy these vertex ranges
/// of a two-level-deeper patch (36 grandchildren each).
pub(crate) const CHILD1: std::ops::Range<usize> = 0..36;
pub(crate) const CHILD4: std::ops::Range<usize> = 108..144;

pub(crate) fn local_patch(
    prefix: &Word,
    schedule: &AngleSchedule,
    j0: (PlanarPoint, PlanarPoint),
) -> Result<LocalPatch> {
    let n = prefix.len() + 1;
    let v = segment_vector(prefix, schedule, j0)?;
    let planar = local_refinement(v, &schedule.thetas(n, 3)?)?;
    Ok(LocalPatch { vertices: horizontal_lift(&planar, 0.0)?.vertices })
}

pub(crate) fn validate_j0(j0: (PlanarPoint, PlanarPoint)) -> Result<()> {
    let ok = [j0.0.x, j0.0.y, j0.1.x, j0.1.y].iter().all(|v| v.is_finite());
    if !ok || j0.0 == j0.1 {
        return Err(Error::invalid("stage-0 segment must have distinct finite endpoints"));
    }
    Ok(())
}

pub(crate) fn prefix_count(n: usize) -> Result<u128> {
    u32::try_from(n - 1)
        .ok()
        .and_then(|e| 6u128.checked_pow(e))
        .ok_or_else(|| Error::Budget { what: "stage prefixes", required: u128::MAX, limit: EXHAUSTIVE_PAIR_BUDGET })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma54Report {
    pub n: usize,
    pub min_ratio: f64,
    pub pairs: u128,
    pub exhaustive: bool,
    /// Words of the stage-`n + 2` segments whose left endpoints attain the minimum.
    pub argmin: (Word, Word),
    pub segment_length: f64,
    pub theta: f64,
}

/// Minimum of `|chord_vertical(p, q)| / (R_n^2 theta_n)` over pairs of
/// stage-`n + 2` vertices (left endpoints) under a common stage-`n - 1`
/// prefix, with `p` in child 1 and `q` in child 4 of that prefix.
pub fn lemma54_scan(
    schedule: &AngleSchedule,
    j0: (PlanarPoint, PlanarPoint),
    n: usize,
    sampling: Sampling,
) -> Result<Lemma54Report> {
    if n == 0 {
        return Err(Error::invalid("stage index must be at least 1"));
    }
    validate_j0(j0)?;
    let theta = schedule.theta(n)?;
    if theta <= 0.0 {
        return Err(Error::invalid(format!("theta_{n} must be positive for the ratio to be defined")));
    }
    schedule.thetas(n, 3)?;
    let r_n = segment_length(n, schedule, (j0.1 - j0.0).norm())?;
    let scale = r_n * r_n * theta;
    let prefixes = prefix_count(n)?;
    let total = prefixes * 1296;

    let ratio = |patch: &LocalPatch, i: usize, j: usize| chord_vertical(patch.vertices[i], patch.vertices[j]).abs() / scale;
    // (ratio, prefix index, p index, q index); ties resolved toward the earliest cell.
    type Best = (f64, usize, usize, usize);
    let better = |a: Best, b: Best| if b.0 < a.0 { b } else { a };

    let (best, exhaustive, pairs) = match sampling.resolve(total)? {
        None => {
            let best = (0..prefixes as usize)
                .into_par_iter()
                .map(|idx| -> Result<Best> {
                    let patch = local_patch(&Word::from_index(idx, n - 1), schedule, j0)?;
                    let mut best = (f64::INFINITY, idx, 0, 0);
                    for i in CHILD1 {
                        for j in CHILD4 {
                            best = better(best, (ratio(&patch, i, j), idx, i, j));
                        }
                    }
                    Ok(best)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold((f64::INFINITY, 0, 0, 0), better);
            (best, true, total)
        }
        Some((samples, seed)) => {
            let mut rng = seeded_rng(seed);
            let draws: Vec<(usize, usize, usize)> = (0..samples)
                .map(|_| {
                    let idx = rng.random_range(0..prefixes) as usize;
                    (idx, rng.random_range(CHILD1), rng.random_range(CHILD4))
                })
                .collect();
            let best = draws
                .par_iter()
                .map(|&(idx, i, j)| -> Result<Best> {
                    let patch = local_patch(&Word::from_index(idx, n - 1), schedule, j0)?;
                    Ok((ratio(&patch, i, j), idx, i, j))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold((f64::INFINITY, 0, 0, 0), better);
            (best, false, samples as u128)
        }
    };
    let prefix = Word::from_index(best.1, n - 1);
    let tail = |k: usize| Word::from_index(k, 3);
    Ok(Lemma54Report {
        n,
        min_ratio: best.0,
        pairs,
        exhaustive,
        argmin: (prefix.extended(tail(best.2).digits())?, prefix.extended(tail(best.3).digits())?),
        segment_length: r_n,
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::koch::build_stage;

    const UNIT: (PlanarPoint, PlanarPoint) = (PlanarPoint::ORIGIN, PlanarPoint { x: 1.0, y: 0.0 });

    #[test]
    fn lift_of_axis_segment_is_flat() {
        let line: Vec<PlanarPoint> = (0..5).map(|k| PlanarPoint::new(k as f64 * 0.3 - 0.4, 0.0)).collect();
        let l = horizontal_lift(&line, 1.25).unwrap();
        assert!(l.vertices.iter().all(|p| p.z == 1.25));
        assert!(horizontal_lift(&line[..1], 0.0).is_err());
    }

    #[test]
    fn square_loop_encloses_unit_area() {
        let sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.0, 0.0)].map(|(x, y)| PlanarPoint::new(x, y));
        let l = horizontal_lift(&sq, -0.5).unwrap();
        assert_eq!(l.vertices.last().unwrap().z, 0.5);
    }

    #[test]
    fn stage_one_lift_sequence() {
        let s = AngleSchedule::explicit(vec![PI / 3.0]).unwrap();
        let l = lift_stage(&build_stage(1, &s, UNIT).unwrap(), 0.0).unwrap();
        let r = 3f64.sqrt() / 64.0;
        let expected = [0.0, 0.0, r, -r, -3.0 * r, 0.0, 0.0];
        for (p, e) in l.vertices.iter().zip(expected) {
            assert!((p.z - e).abs() < 1e-14, "{} vs {e}", p.z);
        }
        assert_eq!(l.words.as_ref().unwrap().len(), 6);
        let cv = chord_vertical(l.vertices[1], l.vertices[3]);
        assert!((cv + r).abs() < 1e-15);
    }

    #[test]
    fn chord_vertical_is_antisymmetric() {
        let p = HPoint::new(0.3, -1.2, 0.7);
        let q = HPoint::new(-2.0, 0.4, 1.9);
        assert_eq!(chord_vertical(p, q), -chord_vertical(q, p));
        assert_eq!(chord_vertical(p, p), 0.0);
    }

    #[test]
    fn log_curve_values() {
        let p = log_curve_point(1.0).unwrap();
        assert_eq!((p.x, p.y), (1.0, 0.0));
        assert!((p.z - 0.2).abs() < 1e-15);
        assert!(log_curve_point(0.0).is_err());
        assert!(log_curve_point(-1.0).is_err());
    }

    #[test]
    fn log_intervals() {
        let (a, b) = log_curve_interval(0).unwrap();
        assert!((a - 4.8105).abs() < 1e-4 && (b - 10.5507).abs() < 1e-4);
        assert!(log_curve_interval(112).is_ok());
        assert!(log_curve_interval(113).is_err());
        assert!(log_curve_interval(-1).is_err());
        let width = (0.75 * PI).exp() - (0.5 * PI).exp();
        let mut prev_end = 0.0;
        for n in 0..40 {
            let (a, b) = log_curve_interval(n).unwrap();
            assert!(a > prev_end);
            prev_end = b;
            assert!(((b - a) / (2.0 * PI * n as f64).exp() - width).abs() < 1e-12 * width);
        }
    }

    #[test]
    fn cantor_small_depths() {
        let c = cantor_build(0).unwrap();
        assert_eq!((c.representatives.clone(), c.weights.clone()), (vec![0.5], vec![1.0]));
        let c = cantor_build(1).unwrap();
        assert_eq!(c.representatives, vec![0.125, 0.875]);
        assert_eq!(c.weights, vec![0.5, 0.5]);
        assert!(matches!(cantor_build(25), Err(Error::Budget { .. })));
        let c = cantor_build(6).unwrap();
        let gap = 2.0 * 0.25f64.powi(6);
        assert!(c.representatives.windows(2).all(|w| w[1] - w[0] >= gap));
        assert_eq!(c.weights.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn lemma54_exhaustive_stage_one_positive() {
        let s = AngleSchedule::explicit(vec![PI / 3.0; 4]).unwrap();
        let r = lemma54_scan(&s, UNIT, 1, Sampling::Exhaustive).unwrap();
        assert!(r.min_ratio > 0.0);
        assert_eq!(r.pairs, 1296);
        assert_eq!(r.argmin.0.digits()[0], 1);
        assert_eq!(r.argmin.1.digits()[0], 4);
    }

    #[test]
    fn lemma54_is_scale_invariant() {
        let s = AngleSchedule::power_law(0.2, 2.0).unwrap();
        let a = lemma54_scan(&s, UNIT, 2, Sampling::Exhaustive).unwrap();
        let big = (PlanarPoint::new(3.0, -1.0), PlanarPoint::new(3.0 + 7.0 * 0.6, -1.0 + 7.0 * 0.8));
        let b = lemma54_scan(&s, big, 2, Sampling::Exhaustive).unwrap();
        assert!((a.min_ratio - b.min_ratio).abs() < 1e-9 * a.min_ratio);
    }

    #[test]
    fn lemma54_sampling_is_reproducible_and_bounded_below_by_exhaustive() {
        let s = AngleSchedule::power_law(0.2, 2.0).unwrap();
        let ex = lemma54_scan(&s, UNIT, 3, Sampling::Exhaustive).unwrap();
        let a = lemma54_scan(&s, UNIT, 3, Sampling::Sampled { samples: 500, seed: 9 }).unwrap();
        let b = lemma54_scan(&s, UNIT, 3, Sampling::Sampled { samples: 500, seed: 9 }).unwrap();
        assert_eq!(a, b);
        assert!(a.min_ratio >= ex.min_ratio);
        assert!(!a.exhaustive && ex.exhaustive);
        let auto = lemma54_scan(&s, UNIT, 3, Sampling::Auto { budget: 100_000, samples: 10, seed: 1 }).unwrap();
        assert!(auto.exhaustive);
    }
}
