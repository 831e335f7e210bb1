//! Menger curvature of triples in the metric `d(p, q) = ||q^-1 p||` and
//! curvature energies over the triples `Sigma(alpha)` of a discrete measure.
//!
//! `c(p1, p2, p3)` is the reciprocal circumradius of a Euclidean triangle
//! with the same three side lengths. A triple lies in `Sigma(alpha)` when
//! all pairwise distances fit in one window `[alpha r, r]`, that is when
//! the shortest side is at least `alpha` times the longest.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heis::HPoint;
use crate::measure::DiscreteMeasure;
use crate::numeric::{compensated_sum, seeded_rng};

/// Balls holding more atoms than this are rejected (pairwise tables are dense).
pub const MAX_BALL_ATOMS: usize = 8192;

/// Heron factors this close to zero (relative to the longest side) are
/// treated as exact degeneracy.
const DEGENERACY_TOL: f64 = 8.0 * f64::EPSILON;

/// Curvature from side lengths with Kahan's ordering of Heron's formula.
pub fn menger_from_sides(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let gap = c - (a - b);
    if gap <= DEGENERACY_TOL * a {
        return 0.0;
    }
    let radicand = (a + (b + c)) * gap * (c + (a - b)) * (a + (b - c));
    if radicand <= 0.0 {
        return 0.0;
    }
    radicand.sqrt() / (a * b * c)
}

pub fn menger(p1: HPoint, p2: HPoint, p3: HPoint) -> Result<f64> {
    if p1 == p2 || p1 == p3 || p2 == p3 {
        return Err(Error::CoincidentPoints);
    }
    Ok(menger_from_sides(p2.dist(p3), p1.dist(p3), p1.dist(p2)))
}

#[inline]
pub fn in_sigma(alpha: f64, a: f64, b: f64, c: f64) -> bool {
    a.min(b).min(c) >= alpha * a.max(b).max(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleFamily {
    pub alpha: f64,
    pub center: HPoint,
    pub radius_cap: f64,
    /// Atom indices inside the closed ball `B(center, radius_cap)`.
    pub members: Vec<usize>,
    /// Unordered triples `i < j < k` of atom indices.
    pub triples: Vec<[usize; 3]>,
    /// Number of admissible unordered triples in the ball.
    pub admissible: u64,
    /// Probability with which each admissible triple was kept (1 when exhaustive).
    pub inclusion_probability: f64,
    pub seed: u64,
}

impl TripleFamily {
    pub fn is_exhaustive(&self) -> bool {
        self.triples.len() as u64 == self.admissible
    }
}

struct BallTables {
    members: Vec<usize>,
    dist: Vec<f64>,
    /// Per member, the other members sorted by distance.
    neighbours: Vec<Vec<(f64, u32)>>,
}

impl BallTables {
    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.members.len() + j]
    }

    /// Calls `f(j, k)` for each admissible triple `(i, j, k)` with `i < j < k`.
    fn for_each_from(&self, i: usize, alpha: f64, mut f: impl FnMut(usize, usize)) {
        let list = &self.neighbours[i];
        for j in i + 1..self.members.len() {
            let dij = self.d(i, j);
            let lo = list.partition_point(|(d, _)| *d < alpha * dij);
            let hi = list.partition_point(|(d, _)| *d <= dij / alpha);
            for &(dik, k) in &list[lo..hi] {
                let k = k as usize;
                if k > j && in_sigma(alpha, dij, dik, self.d(j, k)) {
                    f(j, k);
                }
            }
        }
    }
}

fn ball_tables(m: &DiscreteMeasure, center: HPoint, radius_cap: f64) -> Result<BallTables> {
    let members: Vec<usize> = (0..m.len()).filter(|&i| center.dist(m.points()[i]) <= radius_cap).collect();
    let n = members.len();
    if n > MAX_BALL_ATOMS {
        return Err(Error::Budget { what: "atoms in ball", required: n as u128, limit: MAX_BALL_ATOMS as u128 });
    }
    let pts: Vec<HPoint> = members.iter().map(|&i| m.points()[i]).collect();
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|i| (0..n).map(|j| pts[i].dist(pts[j])).collect()).collect();
    for (i, row) in rows.iter().enumerate() {
        if let Some(j) = (0..n).find(|&j| j != i && row[j] == 0.0) {
            return Err(Error::DuplicateAtom(members[i.min(j)], members[i.max(j)]));
        }
    }
    let neighbours = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut l: Vec<(f64, u32)> = (0..n).filter(|&j| j != i).map(|j| (row[j], j as u32)).collect();
            l.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            l
        })
        .collect();
    Ok(BallTables { members, dist: rows.into_iter().flatten().collect(), neighbours })
}

fn check_params(alpha: f64, center: HPoint, radius_cap: f64, budget: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(radius_cap > 0.0 && radius_cap.is_finite()) {
        return Err(Error::invalid("radius cap must be positive and finite"));
    }
    if ![center.x, center.y, center.z].iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("center must be finite"));
    }
    if budget == 0 {
        return Err(Error::invalid("triple budget must be positive"));
    }
    Ok(())
}

/// Admissible triples of atoms in `B(center, radius_cap)`.
///
/// All of them when there are at most `budget`; otherwise `budget` of them
/// drawn uniformly without replacement, each kept with probability
/// `budget / admissible`.
pub fn sigma_enumerate(
    m: &DiscreteMeasure,
    alpha: f64,
    center: HPoint,
    radius_cap: f64,
    budget: usize,
    seed: u64,
) -> Result<TripleFamily> {
    check_params(alpha, center, radius_cap, budget)?;
    let t = ball_tables(m, center, radius_cap)?;
    let n = t.members.len();
    let counts: Vec<u64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut c = 0u64;
            t.for_each_from(i, alpha, |_, _| c += 1);
            c
        })
        .collect();
    let admissible: u64 = counts.iter().sum();
    let map = |i: usize, j: usize, k: usize| [t.members[i], t.members[j], t.members[k]];

    let (triples, inclusion_probability) = if admissible <= budget as u64 {
        let per_i: Vec<Vec<[usize; 3]>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut v = Vec::with_capacity(counts[i] as usize);
                t.for_each_from(i, alpha, |j, k| v.push(map(i, j, k)));
                v
            })
            .collect();
        (per_i.into_iter().flatten().collect(), 1.0)
    } else {
        let mut rng = seeded_rng(seed);
        let mut ranks = rand::seq::index::sample(&mut rng, admissible as usize, budget).into_vec();
        ranks.sort_unstable();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let per_i: Vec<Vec<[usize; 3]>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let lo = ranks.partition_point(|&r| (r as u64) < offsets[i]);
                let hi = ranks.partition_point(|&r| (r as u64) < offsets[i + 1]);
                let wanted = &ranks[lo..hi];
                let mut v = Vec::with_capacity(wanted.len());
                let (mut rank, mut next) = (offsets[i], 0);
                t.for_each_from(i, alpha, |j, k| {
                    if next < wanted.len() && wanted[next] as u64 == rank {
                        v.push(map(i, j, k));
                        next += 1;
                    }
                    rank += 1;
                });
                v
            })
            .collect();
        (per_i.into_iter().flatten().collect(), budget as f64 / admissible as f64)
    };
    Ok(TripleFamily {
        alpha,
        center,
        radius_cap,
        members: t.members,
        triples,
        admissible,
        inclusion_probability,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSumReport {
    /// Energy over ordered triples (six times the unordered sum).
    pub energy: f64,
    /// Standard error of the sampled estimate; `None` when exhaustive.
    pub std_error: Option<f64>,
    pub radius_cap: f64,
    pub alpha: f64,
    pub center: HPoint,
    pub atoms_in_ball: usize,
    pub triple_count: u64,
    pub evaluated: usize,
    pub exhaustive: bool,
    pub seed: u64,
}

impl CurvatureSumReport {
    pub const HEADER: &'static str =
        "radius_cap,alpha,center_x,center_y,center_z,atoms_in_ball,triple_count,evaluated,mode,seed,energy,std_error";

    pub fn write_row<W: Write>(&self, mut w: W) -> io::Result<()> {
        let mode = if self.exhaustive { "exhaustive" } else { "sampled" };
        let se = self.std_error.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{mode},{},{},{se}",
            self.radius_cap,
            self.alpha,
            self.center.x,
            self.center.y,
            self.center.z,
            self.atoms_in_ball,
            self.triple_count,
            self.evaluated,
            self.seed,
            self.energy
        )
    }
}

/// `sum w_i w_j w_k c(p_i, p_j, p_k)^2` over ordered admissible triples in
/// the ball, exact or as an unbiased sampled estimate.
pub fn curvature_energy(
    m: &DiscreteMeasure,
    alpha: f64,
    center: HPoint,
    radius_cap: f64,
    budget: usize,
    seed: u64,
) -> Result<CurvatureSumReport> {
    let family = sigma_enumerate(m, alpha, center, radius_cap, budget, seed)?;
    let (p, w) = (m.points(), m.weights());
    let terms: Vec<f64> = family
        .triples
        .par_iter()
        .map(|&[i, j, k]| {
            let c = menger_from_sides(p[j].dist(p[k]), p[i].dist(p[k]), p[i].dist(p[j]));
            6.0 * w[i] * w[j] * w[k] * c * c
        })
        .collect();
    let exhaustive = family.is_exhaustive();
    let (energy, std_error) = if exhaustive {
        (compensated_sum(terms.iter().copied()), None)
    } else {
        let s = terms.len() as f64;
        let total = family.admissible as f64;
        let mean = compensated_sum(terms.iter().copied()) / s;
        let var = if terms.len() > 1 {
            compensated_sum(terms.iter().map(|v| (v - mean) * (v - mean))) / (s - 1.0)
        } else {
            0.0
        };
        (total * mean, Some(total * ((1.0 - s / total) * var / s).sqrt()))
    };
    Ok(CurvatureSumReport {
        energy,
        std_error,
        radius_cap,
        alpha,
        center,
        atoms_in_ball: family.members.len(),
        triple_count: family.admissible,
        evaluated: family.triples.len(),
        exhaustive,
        seed,
    })
}
