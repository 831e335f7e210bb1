//! Truncated singular integrals on discrete measures.
//!
//! For a measure `mu = sum_j w_j delta_{p_j}` the truncated operator is
//! `T_eps f(p_i) = sum_{j : d(p_i, p_j) > eps} K(p_i^-1 p_j) f(p_j) w_j`.
//! [`KernelMatrix`] stores exactly these coefficients, so `w_j` sits inside
//! entry `(i, j)`. Spectral estimates use the symmetric form with entries
//! `K(p_i^-1 p_j) sqrt(w_i w_j)`, which has the same spectrum.

use std::io::{self, Write};

use rand::RngExt;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heis::HPoint;
use crate::kernels::KernelSpec;
use crate::koch::{AngleSchedule, PlanarPoint, Word};
use crate::lifts::{local_patch, log_curve_interval, log_curve_point, prefix_count, validate_j0, Sampling, CHILD1, CHILD4};
use crate::measure::DiscreteMeasure;
use crate::numeric::{compensated_sum, seeded_rng, CompensatedSum, CompositeGaussLegendre};

/// Panels of the composite rule used by [`l1_divergence_scan`].
pub const L1_SCAN_PANELS: usize = 8;

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 && !epsilon.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("truncation radius must be nonnegative, got {epsilon}")))
    }
}

/// `K(p_i^-1 p_j)` if the atoms are farther apart than `epsilon`, else 0.
#[inline]
fn truncated(kernel: &KernelSpec, points: &[HPoint], i: usize, j: usize, epsilon: f64) -> Result<f64> {
    let g = points[i].inverse().mul(points[j]);
    if g.is_identity() {
        return Err(Error::DuplicateAtom(i.min(j), i.max(j)));
    }
    Ok(if g.koranyi_norm() > epsilon { kernel.value(g) } else { 0.0 })
}

fn check_inputs(kernel: &KernelSpec, epsilon: f64) -> Result<()> {
    kernel.validate()?;
    check_epsilon(epsilon)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    size: usize,
    entries: Vec<f64>,
    weights: Vec<f64>,
    pub epsilon: f64,
    pub kernel: KernelSpec,
}

impl KernelMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.size..(i + 1) * self.size]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size).map(|i| compensated_sum(self.row(i).iter().copied())).collect()
    }

    /// `sum_i w_i sum_j A_ij`, the quadratic form of the constant function 1.
    pub fn bilinear_ones(&self) -> f64 {
        compensated_sum((0..self.size).map(|i| self.weights[i] * compensated_sum(self.row(i).iter().copied())))
    }

    /// Row-major entries `A_ij sqrt(w_i / w_j)`.
    pub fn symmetrized(&self) -> Vec<f64> {
        let n = self.size;
        let mut s = vec![0.0; n * n];
        s.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.entries[i * n + j] * (self.weights[i] / self.weights[j]).sqrt();
            }
        });
        s
    }
}

pub fn kernel_matrix(kernel: KernelSpec, m: &DiscreteMeasure, epsilon: f64) -> Result<KernelMatrix> {
    check_inputs(&kernel, epsilon)?;
    let n = m.len();
    let (points, weights) = (m.points(), m.weights());
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Ok(0.0) } else { Ok(truncated(&kernel, points, i, j, epsilon)? * weights[j]) })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(KernelMatrix {
        size: n,
        entries: rows.into_iter().flatten().collect(),
        weights: weights.to_vec(),
        epsilon,
        kernel,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadFormResult {
    pub value: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
    pub measure: String,
    pub point_count: usize,
}

/// `sum_{i != j, d > eps} w_i w_j K(p_i^-1 p_j)`, summed over `i < j` and
/// doubled (both kernels are even under inversion).
pub fn quadratic_form(kernel: KernelSpec, m: &DiscreteMeasure, epsilon: f64) -> Result<QuadFormResult> {
    check_inputs(&kernel, epsilon)?;
    let n = m.len();
    let (points, weights) = (m.points(), m.weights());
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut acc = CompensatedSum::new();
            for j in i + 1..n {
                acc.add(weights[j] * truncated(&kernel, points, i, j, epsilon)?);
            }
            Ok(weights[i] * acc.value())
        })
        .collect::<Result<_>>()?;
    Ok(QuadFormResult {
        value: 2.0 * compensated_sum(rows),
        epsilon,
        kernel,
        measure: format!("atoms={},mass={},diameter={}", n, m.total_mass(), m.diameter()),
        point_count: n,
    })
}

/// `sum_{j != i, d > eps} K(p_i^-1 p_j) w_j` for every atom.
pub fn row_sums(kernel: KernelSpec, m: &DiscreteMeasure, epsilon: f64) -> Result<Vec<f64>> {
    check_inputs(&kernel, epsilon)?;
    let n = m.len();
    let (points, weights) = (m.points(), m.weights());
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for j in (0..n).filter(|&j| j != i) {
                acc.add(truncated(&kernel, points, i, j, epsilon)? * weights[j]);
            }
            Ok(acc.value())
        })
        .collect()
}

pub fn row_sup(kernel: KernelSpec, m: &DiscreteMeasure, epsilon: f64) -> Result<f64> {
    Ok(row_sums(kernel, m, epsilon)?.into_iter().fold(0.0, f64::max))
}

/// Smallest kernel value over distinct atom pairs, without truncation.
pub fn min_offdiagonal(kernel: KernelSpec, m: &DiscreteMeasure) -> Result<f64> {
    kernel.validate()?;
    let points = m.points();
    let n = points.len();
    let mins: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in (0..n).filter(|&j| j != i) {
                best = best.min(truncated(&kernel, points, i, j, -1.0)?);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    Ok(mins.into_iter().fold(f64::INFINITY, f64::min))
}

fn mat_vec(s: &[f64], n: usize, v: &[f64]) -> Vec<f64> {
    s.par_chunks(n)
        .map(|row| compensated_sum(row.iter().zip(v).map(|(a, b)| a * b)))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Largest eigenvalue of the symmetrized operator by power iteration.
///
/// The iteration runs on `S + sigma I` with `sigma` the largest row sum of
/// `S`; the shift makes the spectrum nonnegative so the iterate cannot
/// oscillate between `+-lambda`. Converged once successive Rayleigh
/// estimates differ by less than `tolerance` relative.
pub fn l2_norm_estimate(a: &KernelMatrix, tolerance: f64, max_iterations: usize, seed: u64) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n = a.size();
    let s = a.symmetrized();
    let sigma = s.chunks(n.max(1)).map(|r| compensated_sum(r.iter().copied())).fold(0.0, f64::max);
    if n == 0 || sigma == 0.0 {
        return Ok(0.0);
    }
    let mut rng = seeded_rng(seed);
    let mut v: Vec<f64> = (0..n).map(|_| 0.5 + rng.random::<f64>()).collect();
    let mut last = f64::NAN;
    for _ in 0..max_iterations {
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let sv = mat_vec(&s, n, &v);
        let estimate = dot(&v, &sv);
        if (estimate - last).abs() <= tolerance * estimate.abs() {
            return Ok(estimate);
        }
        last = estimate;
        v = sv.iter().zip(&v).map(|(x, y)| x + sigma * y).collect();
    }
    Err(Error::NonConvergence { iterations: max_iterations, last_estimate: last })
}

/// One row of a per-stage series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub n: usize,
    pub value: f64,
    pub partial_sum: f64,
    pub comparator: f64,
    /// Monte Carlo standard error; `None` for exact rows.
    pub std_error: Option<f64>,
}

pub fn write_series<W: Write>(rows: &[SeriesRow], mut w: W) -> io::Result<()> {
    writeln!(w, "n,value,partial_sum,comparator,std_error")?;
    for r in rows {
        let se = r.std_error.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{se}", r.n, r.value, r.partial_sum, r.comparator)?;
    }
    Ok(())
}

fn with_partial_sums(mut rows: Vec<SeriesRow>) -> Vec<SeriesRow> {
    let mut acc = CompensatedSum::new();
    for r in rows.iter_mut() {
        acc.add(r.value);
        r.partial_sum = acc.value();
    }
    rows
}

/// `int_{I_n} K_4(gamma(s)^-1 gamma(t)) dt` for `n` in `n_min..=n_max`,
/// with `quadrature_points` Gauss-Legendre nodes on each of
/// [`L1_SCAN_PANELS`] panels. The comparator is `e^{-2 pi n} |I_n|`.
pub fn l1_divergence_scan(s: f64, n_min: usize, n_max: usize, quadrature_points: usize) -> Result<Vec<SeriesRow>> {
    if quadrature_points < 16 {
        return Err(Error::invalid("at least 16 quadrature points are required"));
    }
    if n_min > n_max {
        return Err(Error::invalid("empty interval range"));
    }
    let base = log_curve_point(s)?;
    let rule = CompositeGaussLegendre::new(quadrature_points, L1_SCAN_PANELS)?;
    let intervals: Vec<(usize, f64, f64)> = (n_min..=n_max)
        .map(|n| {
            let (a, b) = log_curve_interval(n as i64)?;
            log_curve_point(b)?;
            if (a..=b).contains(&s) {
                return Err(Error::invalid(format!("s = {s} lies inside I_{n}; the integrand is singular there")));
            }
            Ok((n, a, b))
        })
        .collect::<Result<_>>()?;
    let kernel = KernelSpec::Alpha(4.0);
    let inv = base.inverse();
    let rows: Vec<SeriesRow> = intervals
        .par_iter()
        .map(|&(n, a, b)| {
            let value = rule.integrate(a, b, |t| {
                let p = log_curve_point(t).expect("t lies in a validated interval");
                kernel.value(inv.mul(p))
            });
            if !value.is_finite() {
                return Err(Error::invalid(format!("integral over I_{n} is not finite")));
            }
            Ok(SeriesRow {
                n,
                value,
                partial_sum: 0.0,
                comparator: (b - a) * (-2.0 * std::f64::consts::PI * n as f64).exp(),
                std_error: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(with_partial_sums(rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagewiseReport {
    pub alpha: f64,
    pub rows: Vec<SeriesRow>,
    pub exhaustive: Vec<bool>,
    /// Word pairs evaluated at each stage (sampled stages only).
    pub sampled_pairs: Vec<Vec<(Word, Word)>>,
}

/// Lifted midpoints and Koranyi chord weights of the 216 segments of a patch.
fn patch_atoms(prefix: &Word, schedule: &AngleSchedule, j0: (PlanarPoint, PlanarPoint)) -> Result<Vec<(HPoint, f64)>> {
    let v = local_patch(prefix, schedule, j0)?.vertices;
    Ok(v.windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let (mx, my) = (0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
            let mid = HPoint::new(mx, my, a.z + 0.5 * (a.x * my - a.y * mx));
            (mid, a.dist(b))
        })
        .collect())
}

/// Stage-by-stage pieces of `<T chi_E, chi_E>` for the kernel `K_{2 alpha}`
/// on a lifted Koch curve.
///
/// Stage `n` collects the pairs `(p, q)` whose words agree through position
/// `n - 1` and have `p_n = 1`, `q_n = 4`. Both sides are discretized by the
/// stage-`n + 2` segment midpoints with chord weights, so every stage is a
/// disjoint block of pairs. The comparator is `theta_n^alpha`.
pub fn koch_stagewise_form(
    schedule: &AngleSchedule,
    j0: (PlanarPoint, PlanarPoint),
    alpha: f64,
    stages: usize,
    sampling: Sampling,
) -> Result<StagewiseReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if stages == 0 {
        return Err(Error::invalid("at least one stage is required"));
    }
    validate_j0(j0)?;
    schedule.require_angle_condition()?;
    schedule.thetas(1, stages + 2)?;
    let kernel = KernelSpec::Alpha(2.0 * alpha);
    let block = (CHILD1.len() * CHILD4.len()) as u128;
    // One generator serves all sampled stages, drawn in stage order.
    let mut rng = None;

    let mut rows = Vec::with_capacity(stages);
    let mut exhaustive = Vec::with_capacity(stages);
    let mut sampled_pairs = Vec::with_capacity(stages);
    for n in 1..=stages {
        let prefixes = prefix_count(n)?;
        let total = prefixes * block;
        let comparator = schedule.theta(n)?.powf(alpha);
        match sampling.resolve(total)? {
            None => {
                let parts: Vec<f64> = (0..prefixes as usize)
                    .into_par_iter()
                    .map(|idx| {
                        let atoms = patch_atoms(&Word::from_index(idx, n - 1), schedule, j0)?;
                        let mut acc = CompensatedSum::new();
                        for i in CHILD1 {
                            for j in CHILD4 {
                                let (p, wp) = atoms[i];
                                let (q, wq) = atoms[j];
                                acc.add(wp * wq * kernel.value(p.inverse().mul(q)));
                            }
                        }
                        Ok(acc.value())
                    })
                    .collect::<Result<_>>()?;
                rows.push(SeriesRow { n, value: compensated_sum(parts), partial_sum: 0.0, comparator, std_error: None });
                exhaustive.push(true);
                sampled_pairs.push(Vec::new());
            }
            Some((samples, seed)) => {
                let rng = rng.get_or_insert_with(|| seeded_rng(seed));
                let draws: Vec<(usize, usize, usize)> = (0..samples)
                    .map(|_| {
                        let idx = rng.random_range(0..prefixes) as usize;
                        (idx, rng.random_range(CHILD1), rng.random_range(CHILD4))
                    })
                    .collect();
                let values: Vec<f64> = draws
                    .par_iter()
                    .map(|&(idx, i, j)| {
                        let atoms = patch_atoms(&Word::from_index(idx, n - 1), schedule, j0)?;
                        let (p, wp) = atoms[i];
                        let (q, wq) = atoms[j];
                        Ok(wp * wq * kernel.value(p.inverse().mul(q)))
                    })
                    .collect::<Result<_>>()?;
                let k = samples as f64;
                let mean = compensated_sum(values.iter().copied()) / k;
                let var = if samples > 1 {
                    compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (k - 1.0)
                } else {
                    0.0
                };
                let scale = total as f64;
                rows.push(SeriesRow {
                    n,
                    value: scale * mean,
                    partial_sum: 0.0,
                    comparator,
                    std_error: Some(scale * (var / k).sqrt()),
                });
                exhaustive.push(false);
                let pairs = draws
                    .iter()
                    .map(|&(idx, i, j)| {
                        let prefix = Word::from_index(idx, n - 1);
                        Ok((
                            prefix.extended(Word::from_index(i, 3).digits())?,
                            prefix.extended(Word::from_index(j, 3).digits())?,
                        ))
                    })
                    .collect::<Result<_>>()?;
                sampled_pairs.push(pairs);
            }
        }
    }
    Ok(StagewiseReport { alpha, rows: with_partial_sums(rows), exhaustive, sampled_pairs })
}
