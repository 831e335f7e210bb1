//! Planar von Koch-like polygons built by the 6-gonal replacement.
//!
//! A segment from `a` to `b = a + (x, y)` is replaced by the seven points
//!
//! ```text
//! a,
//! a + (x, y) / D,
//! a + ((1 + c) x - s y, (1 + c) y + s x) / D,
//! a + (x, y) / 2,
//! a + ((1 + 3c) x + s y, (1 + 3c) y - s x) / D,
//! a + (1 + 4c) (x, y) / D,
//! b
//! ```
//!
//! with `c = cos(theta)`, `s = sin(theta)` and `D = 2 + 4c`. All six pieces
//! have length `|b - a| / D`. Applying the rule at stage `n` with angle
//! `theta_n` to every segment of stage `n - 1` yields `J_n`, whose `6^n`
//! segments are addressed left to right by words over `{1, ..., 6}`.

use std::fmt;
use std::io::{self, Write};
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default vertex budget for fully materialized stages: `6^8 + 1`.
pub const DEFAULT_VERTEX_BUDGET: usize = 1_679_617;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const ORIGIN: PlanarPoint = PlanarPoint { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn midpoint(self, other: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

impl Add for PlanarPoint {
    type Output = PlanarPoint;
    fn add(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanarPoint {
    type Output = PlanarPoint;
    fn sub(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<PlanarPoint> for f64 {
    type Output = PlanarPoint;
    fn mul(self, p: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self * p.x, self * p.y)
    }
}

/// The angle sequence `(theta_n)`, indexed from 1.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleSchedule {
    /// `theta_n = c / n^exponent`.
    PowerLaw { c: f64, exponent: f64 },
    /// A finite list `theta_1, theta_2, ...`; stages beyond it are undefined.
    Explicit(Vec<f64>),
}

/// Number of leading terms summed directly before the analytic tail bound.
const POWER_LAW_HEAD: usize = 10_000;

impl AngleSchedule {
    pub fn power_law(c: f64, exponent: f64) -> Result<Self> {
        if !(c > 0.0 && c < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid(format!("power-law constant must lie in (0, pi/2), got {c}")));
        }
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::invalid(format!("power-law exponent must be positive, got {exponent}")));
        }
        Ok(AngleSchedule::PowerLaw { c, exponent })
    }

    /// Angles must lie in `[0, pi/2)` and be nonincreasing. A zero angle is
    /// the flat replacement (six collinear pieces).
    pub fn explicit(angles: Vec<f64>) -> Result<Self> {
        for (i, &t) in angles.iter().enumerate() {
            if !(0.0..std::f64::consts::FRAC_PI_2).contains(&t) {
                return Err(Error::invalid(format!("theta_{} = {t} outside [0, pi/2)", i + 1)));
            }
            if i > 0 && t > angles[i - 1] {
                return Err(Error::invalid(format!("angles must be nonincreasing (theta_{})", i + 1)));
            }
        }
        Ok(AngleSchedule::Explicit(angles))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AngleSchedule::PowerLaw { c, exponent } => AngleSchedule::power_law(*c, *exponent).map(|_| ()),
            AngleSchedule::Explicit(v) => AngleSchedule::explicit(v.clone()).map(|_| ()),
        }
    }

    /// Number of defined stages, `None` for an unbounded schedule.
    pub fn defined_stages(&self) -> Option<usize> {
        match self {
            AngleSchedule::PowerLaw { .. } => None,
            AngleSchedule::Explicit(v) => Some(v.len()),
        }
    }

    /// `theta_n` for `n >= 1`.
    pub fn theta(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("angles are indexed from 1"));
        }
        match self {
            AngleSchedule::PowerLaw { c, exponent } => Ok(c / (n as f64).powf(*exponent)),
            AngleSchedule::Explicit(v) => v.get(n - 1).copied().ok_or_else(|| {
                Error::invalid(format!("schedule defines {} angles, stage {n} requested", v.len()))
            }),
        }
    }

    /// `theta_first, ..., theta_(first + count - 1)`.
    pub fn thetas(&self, first: usize, count: usize) -> Result<Vec<f64>> {
        (first..first + count).map(|n| self.theta(n)).collect()
    }

    pub fn partial_sum(&self, stages: usize) -> Result<f64> {
        Ok(self.thetas(1, stages)?.iter().sum())
    }

    /// Upper bound for `sum_{n > after} theta_n`. For a power law this is
    /// `c after^(1-e) / (e - 1)` (infinite when `e <= 1` or `after == 0`
    /// and `e <= 1`).
    pub fn tail_bound(&self, after: usize) -> f64 {
        match self {
            AngleSchedule::PowerLaw { c, exponent } => {
                if *exponent <= 1.0 {
                    f64::INFINITY
                } else if after == 0 {
                    c + c / (exponent - 1.0)
                } else {
                    c * (after as f64).powf(1.0 - exponent) / (exponent - 1.0)
                }
            }
            AngleSchedule::Explicit(v) => v.iter().skip(after).sum(),
        }
    }

    /// Upper bound for the total angle `sum_n theta_n`.
    pub fn total_angle_bound(&self) -> f64 {
        match self {
            AngleSchedule::PowerLaw { .. } => {
                let head: f64 = (1..=POWER_LAW_HEAD).map(|n| self.theta(n).unwrap_or(0.0)).sum();
                head + self.tail_bound(POWER_LAW_HEAD)
            }
            AngleSchedule::Explicit(v) => v.iter().sum(),
        }
    }

    /// Whether `sum_n theta_n < 1/2` is certified.
    pub fn satisfies_angle_condition(&self) -> bool {
        self.total_angle_bound() < 0.5
    }

    pub fn require_angle_condition(&self) -> Result<()> {
        if self.satisfies_angle_condition() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "angle schedule violates sum(theta_n) < 1/2 (bound {})",
                self.total_angle_bound()
            )))
        }
    }
}

impl fmt::Display for AngleSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleSchedule::PowerLaw { c, exponent } => write!(f, "power-law(c={c},exponent={exponent})"),
            AngleSchedule::Explicit(v) => {
                let parts: Vec<String> = v.iter().map(|t| t.to_string()).collect();
                write!(f, "explicit({})", parts.join(";"))
            }
        }
    }
}

/// Address of a segment: digits in `1..=6`, most significant (stage 1) first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|d| !(1..=6).contains(*d)) {
            return Err(Error::InvalidDigit(d));
        }
        Ok(Word(digits))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Word of the `index`-th (0-based, left to right) segment of stage `len`.
    pub fn from_index(mut index: usize, len: usize) -> Self {
        let mut digits = vec![0u8; len];
        for d in digits.iter_mut().rev() {
            *d = (index % 6) as u8 + 1;
            index /= 6;
        }
        Word(digits)
    }

    /// Inverse of [`Word::from_index`].
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &d| acc * 6 + (d as usize - 1))
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extended(&self, tail: &[u8]) -> Result<Word> {
        let mut d = self.0.clone();
        d.extend_from_slice(tail);
        Word::new(d)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .bytes()
            .map(|b| if b.is_ascii_digit() { Ok(b - b'0') } else { Err(Error::InvalidDigit(b)) })
            .collect::<Result<Vec<u8>>>()?;
        Word::new(digits)
    }
}

/// Coefficients of the replacement rule for one angle.
#[derive(Debug, Clone, Copy)]
struct Bump {
    inv_d: f64,
    c1: f64,
    c3: f64,
    c4: f64,
    s: f64,
}

impl Bump {
    fn new(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let d = 2.0 + 4.0 * c;
        Bump {
            inv_d: 1.0 / d,
            c1: (1.0 + c) / d,
            c3: (1.0 + 3.0 * c) / d,
            c4: (1.0 + 4.0 * c) / d,
            s: s / d,
        }
    }

    /// The five interior offsets from the left endpoint for direction `v`.
    #[inline]
    fn offsets(&self, v: PlanarPoint) -> [PlanarPoint; 5] {
        let (x, y) = (v.x, v.y);
        [
            PlanarPoint::new(x * self.inv_d, y * self.inv_d),
            PlanarPoint::new(self.c1 * x - self.s * y, self.c1 * y + self.s * x),
            PlanarPoint::new(0.5 * x, 0.5 * y),
            PlanarPoint::new(self.c3 * x + self.s * y, self.c3 * y - self.s * x),
            PlanarPoint::new(self.c4 * x, self.c4 * y),
        ]
    }

    #[inline]
    fn replace(&self, a: PlanarPoint, b: PlanarPoint) -> [PlanarPoint; 7] {
        let o = self.offsets(b - a);
        [a, a + o[0], a + o[1], a.midpoint(b), a + o[3], a + o[4], b]
    }

    /// Direction vector of child `digit` (1-based) of a segment with direction `v`.
    #[inline]
    fn child_vector(&self, v: PlanarPoint, digit: u8) -> PlanarPoint {
        let o = self.offsets(v);
        let pts = [PlanarPoint::ORIGIN, o[0], o[1], o[2], o[3], o[4], v];
        pts[digit as usize] - pts[digit as usize - 1]
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if (0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(Error::invalid(format!("replacement angle {theta} outside [0, pi/2)")))
    }
}

/// Replaces the segment `a -> b` by the seven-point bump with angle `theta`.
pub fn replace_segment(a: PlanarPoint, b: PlanarPoint, theta: f64) -> Result<[PlanarPoint; 7]> {
    check_angle(theta)?;
    if a == b {
        return Err(Error::invalid("cannot replace a degenerate segment"));
    }
    Ok(Bump::new(theta).replace(a, b))
}

/// `r0 * prod_{j <= n} 1 / (2 + 4 cos theta_j)`.
pub fn segment_length(n: usize, schedule: &AngleSchedule, r0: f64) -> Result<f64> {
    let mut r = r0;
    for t in schedule.thetas(1, n)? {
        r /= 2.0 + 4.0 * t.cos();
    }
    Ok(r)
}

/// `tan` of the total angle through `stages` plus the tail bound of the
/// schedule; every segment of every stage has slope at most this value.
/// Infinite when the total angle reaches `pi/2`.
pub fn lipschitz_bound(schedule: &AngleSchedule, stages: usize) -> Result<f64> {
    let total = schedule.partial_sum(stages)? + schedule.tail_bound(stages);
    if total >= std::f64::consts::FRAC_PI_2 {
        Ok(f64::INFINITY)
    } else {
        Ok(total.tan())
    }
}

/// Stage `n` of the construction, `6^n` segments of common length `R_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonStage {
    pub stage: usize,
    pub vertices: Vec<PlanarPoint>,
    pub segment_length: f64,
}

impl PolygonStage {
    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segment(&self, i: usize) -> (PlanarPoint, PlanarPoint) {
        (self.vertices[i], self.vertices[i + 1])
    }

    pub fn segment_word(&self, i: usize) -> Word {
        Word::from_index(i, self.stage)
    }

    pub fn segment_words(&self) -> impl Iterator<Item = Word> + '_ {
        (0..self.segment_count()).map(move |i| self.segment_word(i))
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| ((w[1].y - w[0].y) / (w[1].x - w[0].x)).abs())
            .fold(0.0, f64::max)
    }

    /// `index,x,y,word`, one vertex per line; vertex `i` is the left
    /// endpoint of segment `i`, the final vertex carries an empty word.
    pub fn write_table<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "index,x,y,word")?;
        for (i, v) in self.vertices.iter().enumerate() {
            let word = if i < self.segment_count() { self.segment_word(i).to_string() } else { String::new() };
            writeln!(w, "{i},{},{},{word}", v.x, v.y)?;
        }
        Ok(())
    }
}

fn vertex_count(n: usize) -> Option<u128> {
    6u128.checked_pow(u32::try_from(n).ok()?).map(|c| c + 1)
}

pub fn build_stage(n: usize, schedule: &AngleSchedule, j0: (PlanarPoint, PlanarPoint)) -> Result<PolygonStage> {
    build_stage_with_budget(n, schedule, j0, DEFAULT_VERTEX_BUDGET)
}

/// Builds `J_n` from the stage-0 segment `j0`, failing with
/// [`Error::Budget`] when `6^n + 1` exceeds `max_vertices`.
pub fn build_stage_with_budget(
    n: usize,
    schedule: &AngleSchedule,
    j0: (PlanarPoint, PlanarPoint),
    max_vertices: usize,
) -> Result<PolygonStage> {
    let required = vertex_count(n).unwrap_or(u128::MAX);
    if required > max_vertices as u128 {
        return Err(Error::Budget {
            what: "polygon stage",
            required,
            limit: max_vertices as u128,
        });
    }
    if j0.0 == j0.1 {
        return Err(Error::invalid("stage-0 segment is degenerate"));
    }
    let thetas = schedule.thetas(1, n)?;
    for &t in &thetas {
        check_angle(t)?;
    }
    let mut vertices = vec![j0.0, j0.1];
    for &theta in &thetas {
        let bump = Bump::new(theta);
        let children: Vec<[PlanarPoint; 6]> = vertices
            .par_windows(2)
            .map(|w| {
                let p = bump.replace(w[0], w[1]);
                [p[0], p[1], p[2], p[3], p[4], p[5]]
            })
            .collect();
        let last = *vertices.last().expect("nonempty");
        vertices = children.into_iter().flatten().collect();
        vertices.push(last);
    }
    Ok(PolygonStage {
        stage: n,
        vertices,
        segment_length: segment_length(n, schedule, (j0.1 - j0.0).norm())?,
    })
}

/// Endpoints of the segment addressed by `w` (the stage-0 segment for the
/// empty word), computed with the same arithmetic as [`build_stage`].
pub fn locate_segment(w: &Word, schedule: &AngleSchedule, j0: (PlanarPoint, PlanarPoint)) -> Result<(PlanarPoint, PlanarPoint)> {
    let (mut a, mut b) = j0;
    for (k, &d) in w.digits().iter().enumerate() {
        let theta = schedule.theta(k + 1)?;
        check_angle(theta)?;
        let p = Bump::new(theta).replace(a, b);
        a = p[d as usize - 1];
        b = p[d as usize];
    }
    Ok((a, b))
}

/// Left endpoint of the segment addressed by the nonempty word `w`.
pub fn locate_word(w: &Word, schedule: &AngleSchedule, j0: (PlanarPoint, PlanarPoint)) -> Result<PlanarPoint> {
    if w.is_empty() {
        return Err(Error::invalid("word must be nonempty"));
    }
    Ok(locate_segment(w, schedule, j0)?.0)
}

/// Direction vector `b - a` of the segment addressed by `w`, computed
/// purely from relative offsets so that deep segments keep full relative
/// precision.
pub fn segment_vector(w: &Word, schedule: &AngleSchedule, j0: (PlanarPoint, PlanarPoint)) -> Result<PlanarPoint> {
    let mut v = j0.1 - j0.0;
    for (k, &d) in w.digits().iter().enumerate() {
        let theta = schedule.theta(k + 1)?;
        check_angle(theta)?;
        v = Bump::new(theta).child_vector(v, d);
    }
    Ok(v)
}

/// Vertices of the refinement of the segment `0 -> v` by the given angles
/// (`6^len + 1` points, left to right), in the segment's local frame.
pub fn local_refinement(v: PlanarPoint, thetas: &[f64]) -> Result<Vec<PlanarPoint>> {
    let mut vertices = vec![PlanarPoint::ORIGIN, v];
    for &theta in thetas {
        check_angle(theta)?;
        let bump = Bump::new(theta);
        let mut next = Vec::with_capacity((vertices.len() - 1) * 6 + 1);
        for w in vertices.windows(2) {
            next.extend_from_slice(&bump.replace(w[0], w[1])[..6]);
        }
        next.push(v);
        vertices = next;
    }
    Ok(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pt(x: f64, y: f64) -> PlanarPoint {
        PlanarPoint::new(x, y)
    }

    const UNIT: (PlanarPoint, PlanarPoint) = (PlanarPoint::ORIGIN, PlanarPoint { x: 1.0, y: 0.0 });

    fn stage1_golden() -> [PlanarPoint; 7] {
        let h = 3f64.sqrt() / 8.0;
        [pt(0.0, 0.0), pt(0.25, 0.0), pt(0.375, h), pt(0.5, 0.0), pt(0.625, -h), pt(0.75, 0.0), pt(1.0, 0.0)]
    }

    #[test]
    fn replacement_at_sixty_degrees() {
        let got = replace_segment(UNIT.0, UNIT.1, PI / 3.0).unwrap();
        for (g, e) in got.iter().zip(stage1_golden()) {
            assert!((g.x - e.x).abs() <= 1e-15 && (g.y - e.y).abs() <= 1e-15, "{g:?} vs {e:?}");
        }
    }

    #[test]
    fn replacement_tends_to_even_subdivision() {
        let got = replace_segment(UNIT.0, UNIT.1, 1e-9).unwrap();
        for (k, g) in got.iter().enumerate() {
            assert!((g.x - k as f64 / 6.0).abs() < 1e-8 && g.y.abs() < 1e-8);
        }
    }

    #[test]
    fn replacement_pieces_are_equal_and_midpoint_is_exact() {
        let (a, b) = (pt(-0.3, 1.7), pt(2.2, 0.4));
        for theta in [0.0, 0.1, 0.45, 1.2] {
            let p = replace_segment(a, b, theta).unwrap();
            assert_eq!(p[0], a);
            assert_eq!(p[6], b);
            assert_eq!(p[3], a.midpoint(b));
            let expected = (b - a).norm() / (2.0 + 4.0 * theta.cos());
            for w in p.windows(2) {
                assert!(((w[1] - w[0]).norm() - expected).abs() < 1e-14);
            }
        }
        assert!(replace_segment(a, a, 0.1).is_err());
        assert!(replace_segment(a, b, PI / 2.0).is_err());
        assert!(replace_segment(a, b, -0.1).is_err());
    }

    #[test]
    fn stage_zero_and_one() {
        let s = AngleSchedule::explicit(vec![PI / 3.0]).unwrap();
        let j = build_stage(0, &s, UNIT).unwrap();
        assert_eq!(j.vertices, vec![UNIT.0, UNIT.1]);
        assert_eq!(j.segment_length, 1.0);
        let j = build_stage(1, &s, UNIT).unwrap();
        assert_eq!(j.vertices.len(), 7);
        for (g, e) in j.vertices.iter().zip(stage1_golden()) {
            assert!((g.x - e.x).abs() <= 1e-15 && (g.y - e.y).abs() <= 1e-15);
        }
        assert!((j.segment_length - 0.25).abs() < 1e-15);
    }

    #[test]
    fn equal_lengths_through_stage_four() {
        let s = AngleSchedule::power_law(0.3, 2.0).unwrap();
        for n in 1..=4 {
            let j = build_stage(n, &s, UNIT).unwrap();
            assert_eq!(j.segment_count(), 6usize.pow(n as u32));
            let r = segment_length(n, &s, 1.0).unwrap();
            assert!((j.segment_length - r).abs() <= 1e-15 * r);
            for w in j.vertices.windows(2) {
                assert!(((w[1] - w[0]).norm() - r).abs() <= 1e-12 * r);
            }
        }
    }

    #[test]
    fn endpoints_fixed_and_graph_property() {
        let s = AngleSchedule::power_law(0.3, 2.0).unwrap();
        assert!(s.satisfies_angle_condition());
        let j0 = (pt(-1.0, 0.5), pt(3.0, 0.5));
        for n in 0..=5 {
            let j = build_stage(n, &s, j0).unwrap();
            assert_eq!(j.vertices[0], j0.0);
            assert_eq!(*j.vertices.last().unwrap(), j0.1);
            assert!(j.vertices.windows(2).all(|w| w[1].x > w[0].x));
        }
    }

    #[test]
    fn nesting_is_local() {
        let s = AngleSchedule::power_law(0.2, 2.0).unwrap();
        let prev = build_stage(3, &s, UNIT).unwrap();
        let next = build_stage(4, &s, UNIT).unwrap();
        for (i, v) in next.vertices.iter().enumerate() {
            let parent = prev.vertices[i / 6];
            assert!((*v - parent).norm() <= prev.segment_length * (1.0 + 1e-12));
        }
    }

    #[test]
    fn segment_length_examples() {
        let flat = AngleSchedule::explicit(vec![0.0; 7]).unwrap();
        for n in 0..=7 {
            let r = segment_length(n, &flat, 2.0).unwrap();
            assert!((r - 2.0 * 6f64.powi(-(n as i32))).abs() < 1e-15);
        }
        let s = AngleSchedule::explicit(vec![PI / 3.0]).unwrap();
        assert!((segment_length(1, &s, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(segment_length(2, &s, 1.0).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let flat = AngleSchedule::explicit(vec![0.0; 3]).unwrap();
        assert_eq!(lipschitz_bound(&flat, 3).unwrap(), 0.0);
        let one = AngleSchedule::explicit(vec![PI / 6.0]).unwrap();
        assert!((lipschitz_bound(&one, 1).unwrap() - 3f64.sqrt().recip()).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_bound_dominates_observed_slopes() {
        let s = AngleSchedule::power_law(0.2, 2.0).unwrap();
        let bound = lipschitz_bound(&s, 50).unwrap();
        let j = build_stage(6, &s, UNIT).unwrap();
        let observed = j.max_abs_slope();
        assert!(observed > 0.0 && observed <= bound, "{observed} > {bound}");
        // the bound is tan of the total angle, which the analytic tail keeps above sum theta
        assert!(bound >= (0.2 * PI * PI / 6.0).tan());
    }

    #[test]
    fn angle_condition_validation() {
        assert!(AngleSchedule::power_law(0.2, 2.0).unwrap().satisfies_angle_condition());
        assert!(AngleSchedule::power_law(0.3, 2.0).unwrap().satisfies_angle_condition());
        assert!(!AngleSchedule::power_law(0.31, 2.0).unwrap().satisfies_angle_condition());
        assert!(!AngleSchedule::power_law(0.01, 1.0).unwrap().satisfies_angle_condition());
        assert!(AngleSchedule::power_law(0.01, 1.0).unwrap().require_angle_condition().is_err());
        assert!(!AngleSchedule::explicit(vec![PI / 3.0]).unwrap().satisfies_angle_condition());
        assert!(AngleSchedule::explicit(vec![0.1, 0.2]).is_err());
        assert!(AngleSchedule::explicit(vec![2.0]).is_err());
        assert!(AngleSchedule::power_law(0.0, 2.0).is_err());
    }

    #[test]
    fn words_roundtrip_and_reject_bad_digits() {
        assert_eq!(Word::from_index(0, 3).to_string(), "111");
        assert_eq!(Word::from_index(215, 3).to_string(), "666");
        assert_eq!("2514".parse::<Word>().unwrap().index(), Word::new(vec![2, 5, 1, 4]).unwrap().index());
        assert_eq!(Word::new(vec![1, 7]), Err(Error::InvalidDigit(7)));
        assert_eq!("103".parse::<Word>(), Err(Error::InvalidDigit(0)));
        for i in 0..1296 {
            assert_eq!(Word::from_index(i, 4).index(), i);
        }
    }

    #[test]
    fn locate_word_examples() {
        let s = AngleSchedule::explicit(vec![PI / 3.0, PI / 3.0]).unwrap();
        let w = |t: &str| t.parse::<Word>().unwrap();
        assert_eq!(locate_word(&w("1"), &s, UNIT).unwrap(), UNIT.0);
        let p = locate_word(&w("4"), &s, UNIT).unwrap();
        assert_eq!(p, pt(0.5, 0.0));
        assert!(locate_word(&Word::empty(), &s, UNIT).is_err());
        let j = build_stage(2, &s, UNIT).unwrap();
        for (i, word) in j.segment_words().enumerate() {
            assert_eq!(locate_word(&word, &s, UNIT).unwrap(), j.vertices[i]);
        }
    }

    #[test]
    fn segment_vectors_match_materialized_segments() {
        let s = AngleSchedule::power_law(0.25, 2.0).unwrap();
        let j = build_stage(4, &s, UNIT).unwrap();
        for i in (0..j.segment_count()).step_by(37) {
            let (a, b) = j.segment(i);
            let v = segment_vector(&j.segment_word(i), &s, UNIT).unwrap();
            assert!(((b - a) - v).norm() < 1e-15);
        }
    }

    #[test]
    fn local_refinement_matches_global_stage() {
        let s = AngleSchedule::power_law(0.25, 2.0).unwrap();
        let j3 = build_stage(3, &s, UNIT).unwrap();
        let prefix = Word::from_index(1, 1);
        let (a, b) = locate_segment(&prefix, &s, UNIT).unwrap();
        let local = local_refinement(b - a, &s.thetas(2, 2).unwrap()).unwrap();
        assert_eq!(local.len(), 37);
        for (k, v) in local.iter().enumerate() {
            assert!(((a + *v) - j3.vertices[36 + k]).norm() < 1e-15);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let s = AngleSchedule::power_law(0.2, 2.0).unwrap();
        let err = build_stage_with_budget(4, &s, UNIT, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget { required: 1297, .. }));
        assert!(matches!(build_stage(9, &s, UNIT), Err(Error::Budget { .. })));
    }

    #[test]
    fn stage_table_export() {
        let s = AngleSchedule::explicit(vec![PI / 3.0]).unwrap();
        let j = build_stage(1, &s, UNIT).unwrap();
        let mut out = Vec::new();
        j.write_table(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0], "index,x,y,word");
        assert_eq!(lines[1], "0,0,0,1");
        assert!(lines[7].starts_with("6,1,0,"));
    }
}
