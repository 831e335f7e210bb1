//! Small numerical utilities shared by the experiment modules: compensated
//! summation, the seeded random generator, and composite Gauss-Legendre
//! quadrature.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Deterministic generator used for every seeded experiment.
///
/// All randomness in the crate flows from a single `u64` seed through
/// `ChaCha8Rng::seed_from_u64`, so runs are reproducible across platforms
/// and independent of the number of worker threads (samples are always
/// drawn serially before any parallel evaluation).
pub type ExperimentRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ExperimentRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Neumaier (improved Kahan) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        s.extend(iter);
        s
    }
}

/// Compensated sum of an iterator of values, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Composite Gauss-Legendre rule: `panels` equal sub-intervals, each
/// integrated with a `nodes`-point rule.
#[derive(Debug, Clone)]
pub struct CompositeGaussLegendre {
    rule: GaussLegendre,
    panels: usize,
}

impl CompositeGaussLegendre {
    pub fn new(nodes: usize, panels: usize) -> Result<Self> {
        let nodes = NonZeroUsize::new(nodes)
            .ok_or_else(|| Error::invalid("quadrature needs at least one node"))?;
        if panels == 0 {
            return Err(Error::invalid("quadrature needs at least one panel"));
        }
        Ok(Self {
            rule: GaussLegendre::new(nodes),
            panels,
        })
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let width = (b - a) / self.panels as f64;
        let mut total = CompensatedSum::new();
        for k in 0..self.panels {
            let lo = a + width * k as f64;
            let hi = if k + 1 == self.panels { b } else { lo + width };
            total.add(self.rule.integrate(lo, hi, &mut f));
        }
        total.value()
    }
}
