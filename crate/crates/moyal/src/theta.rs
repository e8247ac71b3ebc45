use serde::{Deserialize, Serialize};

use crate::{MoyalError, Result};

/// Deformation data of the noncommutative plane.
///
/// The antisymmetric matrix is stored through the single scalar `theta0`,
/// with `theta = theta0 * [[0, -1], [1, 0]]`. Only the non-degenerate case
/// `theta0 > 0` is realized numerically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaData {
    theta0: f64,
}

impl ThetaData {
    pub const D: usize = 2;

    pub fn new(theta0: f64) -> Result<Self> {
        if !(theta0 > 0.0) || !theta0.is_finite() {
            return Err(MoyalError::DegenerateTheta(theta0));
        }
        Ok(ThetaData { theta0 })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// The 2x2 antisymmetric matrix entries, row major.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[0.0, -self.theta0], [self.theta0, 0.0]]
    }

    /// det(2 pi theta)^(1/2); the normalization relating the trace to Tr.
    /// Equals 2 pi theta0 in the plane.
    pub fn trace_unit(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.theta0
    }

    /// The symplectic pairing (t, theta s) = theta0 (t2 s1 - t1 s2).
    pub fn pairing(&self, t: [f64; 2], s: [f64; 2]) -> f64 {
        self.theta0 * (t[1] * s[0] - t[0] * s[1])
    }

    /// Phase factor of the Weyl relation:
    /// lambda(t) lambda(s) = exp(i/2 (t, theta s)) lambda(t + s).
    pub fn weyl_phase(&self, t: [f64; 2], s: [f64; 2]) -> num_complex::Complex64 {
        num_complex::Complex64::from_polar(1.0, 0.5 * self.pairing(t, s))
    }
}
