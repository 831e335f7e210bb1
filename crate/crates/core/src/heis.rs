//! Arithmetic of the first Heisenberg group `H = R^3` with the product
//!
//! ```text
//! (x, y, z) . (x', y', z') = (x + x', y + y', z + z' + (x y' - y x') / 2)
//! ```
//!
//! together with the Koranyi gauge `||(x, y, z)|| = ((x^2 + y^2)^2 + z^2)^(1/4)`,
//! the left-invariant metric `d(p, q) = ||q^-1 . p||`, the dilations
//! `delta_r(x, y, z) = (r x, r y, r^2 z)` and the non-horizontal gauge
//! `NH(x, y, z) = |z|^(1/2)`.

use std::fmt;
use std::ops::Mul;

use crate::error::{Error, Result};

/// A point of the Heisenberg group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HPoint {
    pub const IDENTITY: HPoint = HPoint {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Like [`HPoint::new`] but rejects non-finite coordinates.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() && z.is_finite() {
            Ok(Self { x, y, z })
        } else {
            Err(Error::invalid(format!(
                "Heisenberg point coordinates must be finite, got ({x}, {y}, {z})"
            )))
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0.0 && self.y == 0.0 && self.z == 0.0
    }

    /// Group product `self . q`.
    #[inline]
    pub fn mul(self, q: HPoint) -> HPoint {
        HPoint {
            x: self.x + q.x,
            y: self.y + q.y,
            z: self.z + q.z + 0.5 * (self.x * q.y - self.y * q.x),
        }
    }

    #[inline]
    pub fn inverse(self) -> HPoint {
        HPoint {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Koranyi gauge. Evaluated as `sqrt(hypot(x^2 + y^2, z))`, which is the
    /// same quantity without forming fourth powers; falls back to a rescaled
    /// evaluation when the squares themselves overflow.
    #[inline]
    pub fn koranyi_norm(self) -> f64 {
        let h = self.x * self.x + self.y * self.y;
        let n = h.hypot(self.z).sqrt();
        if n.is_finite() {
            n
        } else {
            self.koranyi_norm_rescaled()
        }
    }

    #[cold]
    fn koranyi_norm_rescaled(self) -> f64 {
        let r = self.x.hypot(self.y);
        let v = self.z.abs().sqrt();
        let s = r.max(v);
        if !s.is_finite() || s == 0.0 {
            return s;
        }
        let (a, b) = (r / s, v / s);
        s * (a * a).hypot(b * b).sqrt()
    }

    /// Non-horizontal gauge `|z|^(1/2)`.
    #[inline]
    pub fn nh(self) -> f64 {
        self.z.abs().sqrt()
    }

    /// Dilation by `r > 0`.
    pub fn dilate(self, r: f64) -> Result<HPoint> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!(
                "dilation factor must be positive and finite, got {r}"
            )));
        }
        Ok(self.dilate_unchecked(r))
    }

    #[inline]
    pub(crate) fn dilate_unchecked(self, r: f64) -> HPoint {
        HPoint {
            x: r * self.x,
            y: r * self.y,
            z: r * r * self.z,
        }
    }

    /// `d(self, q)`.
    #[inline]
    pub fn dist(self, q: HPoint) -> f64 {
        dist(self, q)
    }
}

impl Mul for HPoint {
    type Output = HPoint;

    fn mul(self, rhs: HPoint) -> HPoint {
        HPoint::mul(self, rhs)
    }
}

impl fmt::Display for HPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

pub fn group_mul(p: HPoint, q: HPoint) -> HPoint {
    p.mul(q)
}

pub fn inverse(p: HPoint) -> HPoint {
    p.inverse()
}

pub fn koranyi_norm(p: HPoint) -> f64 {
    p.koranyi_norm()
}

pub fn nh(p: HPoint) -> f64 {
    p.nh()
}

pub fn dilate(r: f64, p: HPoint) -> Result<HPoint> {
    p.dilate(r)
}

/// Left-invariant distance `||q^-1 . p||`, always through the group law.
#[inline]
pub fn dist(p: HPoint, q: HPoint) -> f64 {
    q.inverse().mul(p).koranyi_norm()
}
