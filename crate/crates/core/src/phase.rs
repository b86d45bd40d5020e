//! Points of the unit tangent bundle.

use crate::hyperbolic::{disk_to_upper, upper_to_disk, Sl2, C64, I};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// A unit tangent vector: base point `w` in the Poincaré disk and the
/// Euclidean angle `theta` of its direction in disk coordinates.
///
/// The same point has a matrix representative `g` in `SL(2,R)` with base
/// point `g i` in the upper half-plane and the geodesic flow acting by right
/// multiplication with `diag(e^{t/2}, e^{-t/2})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub w: C64,
    pub theta: f64,
}

impl PhasePoint {
    pub fn new(w: C64, theta: f64) -> Self {
        PhasePoint { w, theta: wrap_angle(theta) }
    }

    /// Same base point, opposite direction.
    pub fn flip(&self) -> Self {
        PhasePoint::new(self.w, self.theta + PI)
    }

    /// Unit tangent vector represented by `g` (not reduced to the polygon).
    pub fn from_matrix(g: &Sl2) -> Self {
        let z = g.act(I);
        let q = I * g.c + g.d;
        let zdot = I / (q * q);
        let cayley_dot = 2.0 * I / ((z + I) * (z + I));
        PhasePoint::new(upper_to_disk(z), (cayley_dot * zdot).arg())
    }

    /// Matrix representative `n(z) k(alpha)` with `n(z)` the affine map
    /// sending `i` to the base point and `k(alpha)` a rotation about `i`.
    pub fn to_matrix(&self) -> Sl2 {
        let z = disk_to_upper(self.w);
        let sy = z.im.sqrt();
        let n = Sl2::new(sy, z.re / sy, 0.0, 1.0 / sy);
        let cayley_dot = 2.0 * I / ((z + I) * (z + I));
        let alpha = 0.5 * (cayley_dot.arg() + FRAC_PI_2 - self.theta);
        n * Sl2::rotation(alpha)
    }

    /// Angular distance-aware comparison used in tests and diagnostics.
    pub fn distance(&self, other: &PhasePoint) -> f64 {
        let dtheta = wrap_angle(self.theta - other.theta + PI) - PI;
        (self.w - other.w).norm() + dtheta.abs()
    }
}

/// Reduces an angle to `[0, 2 pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn matrix_round_trip() {
        let p = PhasePoint::new(C64::new(0.3, -0.2), 2.5);
        let g = p.to_matrix();
        assert_abs_diff_eq!(g.det(), 1.0, epsilon = 1e-14);
        let q = PhasePoint::from_matrix(&g);
        assert!(p.distance(&q) < 1e-13, "{p:?} {q:?}");
    }

    #[test]
    fn flip_is_an_involution() {
        let p = PhasePoint::new(C64::new(0.1, 0.4), 6.0);
        assert!(p.flip().flip().distance(&p) < 1e-15);
    }
}
