//! Weighted point clouds standing in for one-dimensional Hausdorff measure
//! on a set, and an audit of the Ahlfors ratio `mu(B(p, r)) / r`.

use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heis::HPoint;
use crate::koch::Word;
use crate::lifts::{cantor_points, write_point_cloud, CantorLift, LiftedPolyline};
use crate::numeric::{compensated_sum, seeded_rng, CompensatedSum};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<HPoint>,
    weights: Vec<f64>,
    words: Option<Vec<Word>>,
    diameter: f64,
}

fn max_pairwise<F>(n: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| f(i, j)).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max)
}

impl DiscreteMeasure {
    pub fn new(points: Vec<HPoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a measure needs at least one atom"));
        }
        if points.len() != weights.len() {
            return Err(Error::invalid(format!("{} points but {} weights", points.len(), weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::invalid(format!("weights must be positive and finite, got {w}")));
        }
        if points.iter().any(|p| ![p.x, p.y, p.z].iter().all(|v| v.is_finite())) {
            return Err(Error::invalid("atom coordinates must be finite"));
        }
        let diameter = max_pairwise(points.len(), |i, j| points[i].dist(points[j]));
        Ok(DiscreteMeasure { points, weights, words: None, diameter })
    }

    /// Attaches one word per atom (used for export only).
    pub fn with_words(mut self, words: Vec<Word>) -> Result<Self> {
        if words.len() != self.points.len() {
            return Err(Error::invalid("one word per atom required"));
        }
        self.words = Some(words);
        Ok(self)
    }

    pub fn points(&self) -> &[HPoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn words(&self) -> Option<&[Word]> {
        self.words.as_deref()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.weights.iter().copied())
    }

    /// Largest nearest-neighbour distance over all atoms (0 for one atom).
    pub fn point_spacing(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| self.points[i].dist(self.points[j]))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Mass of the closed ball of radius `r` about `center`.
    pub fn ball_mass(&self, center: HPoint, r: f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| center.dist(**p) <= r)
            .map(|(_, w)| *w)
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        let weights = self.weights.iter().map(|w| w * lambda).collect();
        let mut m = DiscreteMeasure::new(self.points.clone(), weights)?;
        m.words = self.words.clone();
        Ok(m)
    }

    /// Image under left translation by `g`.
    pub fn left_translated(&self, g: HPoint) -> Result<Self> {
        let points = self.points.iter().map(|p| g.mul(*p)).collect();
        let mut m = DiscreteMeasure::new(points, self.weights.clone())?;
        m.words = self.words.clone();
        Ok(m)
    }

    pub fn write_table<W: Write>(&self, w: W) -> io::Result<()> {
        let words = self.words.as_deref();
        write_point_cloud(
            w,
            self.points.iter().zip(&self.weights).enumerate().map(|(i, (p, wt))| {
                (*p, Some(*wt), words.map(|ws| ws[i].to_string()).unwrap_or_default())
            }),
        )
    }
}

/// Atoms at the midpoints of `subdivisions` equal pieces of every segment,
/// each weighted by the Koranyi length of its piece's chord.
pub fn from_polyline(p: &LiftedPolyline, subdivisions: usize) -> Result<DiscreteMeasure> {
    if subdivisions == 0 {
        return Err(Error::invalid("subdivisions must be at least 1"));
    }
    if p.segment_count() == 0 {
        return Err(Error::invalid("polyline has no segments"));
    }
    let m = subdivisions as f64;
    let mut points = Vec::with_capacity(p.segment_count() * subdivisions);
    let mut weights = Vec::with_capacity(points.capacity());
    let mut words = p.words.as_ref().map(|_| Vec::with_capacity(points.capacity()));
    for k in 0..p.segment_count() {
        for j in 0..subdivisions {
            let start = p.point_on_segment(k, j as f64 / m);
            let end = p.point_on_segment(k, (j + 1) as f64 / m);
            points.push(p.point_on_segment(k, (j as f64 + 0.5) / m));
            weights.push(start.dist(end));
            if let (Some(ws), Some(src)) = (words.as_mut(), p.words.as_ref()) {
                ws.push(src[k].clone());
            }
        }
    }
    let measure = DiscreteMeasure::new(points, weights)?;
    match words {
        Some(ws) => measure.with_words(ws),
        None => Ok(measure),
    }
}

pub fn from_cantor(c: &CantorLift) -> Result<DiscreteMeasure> {
    let (points, weights) = cantor_points(c).into_iter().unzip();
    DiscreteMeasure::new(points, weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub centers: Vec<usize>,
    pub radii: Vec<f64>,
    /// `ratios[c][r]` for center `centers[c]` and radius `radii[r]`.
    pub ratios: Vec<Vec<f64>>,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub radius_floor: f64,
    pub point_spacing: f64,
}

impl RegularityReport {
    pub fn write_table<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "center_index,radius,ratio")?;
        for (c, row) in self.centers.iter().zip(&self.ratios) {
            for (r, ratio) in self.radii.iter().zip(row) {
                writeln!(w, "{c},{r},{ratio}")?;
            }
        }
        Ok(())
    }
}

/// Audits `mu(B(p, r)) / r` over sampled atom centers and the given radii.
///
/// `min_radius_floor` must be at least four times the largest
/// nearest-neighbour distance; smaller balls only see discreteness. Every
/// radius must lie in `[min_radius_floor, diameter]`. When `center_sample`
/// is at least the atom count every atom is a center.
pub fn ahlfors_check(
    m: &DiscreteMeasure,
    center_sample: usize,
    radii: &[f64],
    min_radius_floor: f64,
    seed: u64,
) -> Result<RegularityReport> {
    if center_sample == 0 || radii.is_empty() {
        return Err(Error::invalid("need at least one center and one radius"));
    }
    let spacing = m.point_spacing();
    let floor = 4.0 * spacing;
    if !(min_radius_floor >= floor) || !min_radius_floor.is_finite() {
        return Err(Error::RadiusBelowFloor { radius: min_radius_floor, floor });
    }
    for &r in radii {
        if !(r >= min_radius_floor) {
            return Err(Error::RadiusBelowFloor { radius: r, floor: min_radius_floor });
        }
        if r > m.diameter() {
            return Err(Error::invalid(format!("radius {r} exceeds the diameter {}", m.diameter())));
        }
    }
    let n = m.len();
    let centers: Vec<usize> = if center_sample >= n {
        (0..n).collect()
    } else {
        let mut rng = seeded_rng(seed);
        let mut c = rand::seq::index::sample(&mut rng, n, center_sample).into_vec();
        c.sort_unstable();
        c
    };
    let ratios: Vec<Vec<f64>> = centers
        .par_iter()
        .map(|&c| {
            let p = m.points[c];
            let mut by_dist: Vec<(f64, f64)> = m.points.iter().zip(&m.weights).map(|(q, w)| (p.dist(*q), *w)).collect();
            by_dist.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut acc = CompensatedSum::default();
            let cumulative: Vec<f64> = by_dist
                .iter()
                .map(|(_, w)| {
                    acc.add(*w);
                    acc.value()
                })
                .collect();
            radii
                .iter()
                .map(|&r| {
                    let inside = by_dist.partition_point(|(d, _)| *d <= r);
                    let mass = if inside == 0 { 0.0 } else { cumulative[inside - 1] };
                    mass / r
                })
                .collect()
        })
        .collect();
    let all = ratios.iter().flatten().copied();
    let min_ratio = all.clone().fold(f64::INFINITY, f64::min);
    let max_ratio = all.fold(0.0, f64::max);
    Ok(RegularityReport {
        centers,
        radii: radii.to_vec(),
        ratios,
        min_ratio,
        max_ratio,
        radius_floor: min_radius_floor,
        point_spacing: spacing,
    })
}
