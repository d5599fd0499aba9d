//! Points of the complex projective line.

use crate::{QError, QResult, C64};
use serde::{Deserialize, Serialize};

/// A homogeneous pair `(num : den)` normalised so that `max(|num|, |den|) = 1`.
/// Infinity is `(1 : 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    #[serde(with = "crate::cser::c64")]
    pub num: C64,
    #[serde(with = "crate::cser::c64")]
    pub den: C64,
}

impl ProjectivePoint {
    /// Normalises a homogeneous pair; both components zero is an error.
    pub fn new(num: C64, den: C64) -> QResult<Self> {
        let s = num.norm().max(den.norm());
        if s == 0.0 || !s.is_finite() {
            return Err(QError::Ambiguous(format!("projective pair ({num} : {den}) is not a point of P^1")));
        }
        Ok(Self { num: num / s, den: den / s })
    }

    /// The affine point `z`.
    pub fn finite(z: C64) -> Self {
        Self::new(z, C64::new(1.0, 0.0)).expect("finite point")
    }

    pub fn zero() -> Self {
        Self { num: C64::new(0.0, 0.0), den: C64::new(1.0, 0.0) }
    }

    pub fn infinity() -> Self {
        Self { num: C64::new(1.0, 0.0), den: C64::new(0.0, 0.0) }
    }

    /// Chordal distance `|a d - b c| / (‖(a,b)‖ ‖(c,d)‖)`, in `[0, 1]`.
    pub fn chordal(&self, other: &Self) -> f64 {
        let cross = (self.num * other.den - self.den * other.num).norm();
        let n1 = (self.num.norm_sqr() + self.den.norm_sqr()).sqrt();
        let n2 = (other.num.norm_sqr() + other.den.norm_sqr()).sqrt();
        cross / (n1 * n2)
    }

    /// Equality in the chordal metric.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.chordal(other) <= tol
    }

    /// The affine value, or `None` at infinity (exactly zero denominator).
    pub fn value(&self) -> Option<C64> {
        if self.den.norm() == 0.0 {
            None
        } else {
            Some(self.num / self.den)
        }
    }

    /// Chordal distance from `0`, a plot-friendly scalar in `[0, 1]`.
    pub fn chordal_scalar(&self) -> f64 {
        self.chordal(&Self::zero())
    }
}
