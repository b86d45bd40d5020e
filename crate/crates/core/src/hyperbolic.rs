//! Hyperbolic-plane primitives: `SL(2,R)` acting on the upper half-plane, its
//! conjugate `SU(1,1)` acting on the Poincaré disk, and the Cayley transform
//! that relates them.
//!
//! Throughout, the disk carries the metric `4|dw|² / (1 - |w|²)²` (curvature -1).

use num_complex::Complex64;
use std::ops::Mul;

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Real 2x2 matrix `[[a, b], [c, d]]`, acting on the upper half-plane by
/// `z -> (a z + b) / (c z + d)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Sl2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sl2 {
    pub const IDENTITY: Sl2 = Sl2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Sl2 { a, b, c, d }
    }

    pub fn from_array(m: [f64; 4]) -> Self {
        Sl2::new(m[0], m[1], m[2], m[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Inverse of a unit-determinant matrix.
    pub fn inverse(&self) -> Self {
        Sl2::new(self.d, -self.b, -self.c, self.a)
    }

    /// Rescale to determinant one (the determinant must be positive).
    pub fn normalized(&self) -> Self {
        let s = self.det().sqrt().recip();
        Sl2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Geodesic-flow one-parameter subgroup `diag(e^{t/2}, e^{-t/2})`.
    pub fn geodesic(t: f64) -> Self {
        let e = (0.5 * t).exp();
        Sl2::new(e, 0.0, 0.0, e.recip())
    }

    pub fn rotation(alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Sl2::new(c, -s, s, c)
    }

    pub fn act(&self, z: C64) -> C64 {
        (z * self.a + self.b) / (z * self.c + self.d)
    }

    /// Complex derivative of the Möbius action (unit determinant).
    pub fn derivative(&self, z: C64) -> C64 {
        let q = z * self.c + self.d;
        (q * q).inv()
    }

    /// Conjugate into the disk model: `C M C^{-1}` with `C` the Cayley transform.
    pub fn to_disk(&self) -> DiskMap {
        let m = DiskMap::new(self.a.into(), self.b.into(), self.c.into(), self.d.into());
        DiskMap::cayley().compose(&m).compose(&DiskMap::cayley_inverse())
    }

    /// Max-norm distance between `self` and `other` modulo the sign ambiguity of `PSL(2,R)`.
    pub fn projective_distance(&self, other: &Sl2) -> f64 {
        let plus = self
            .to_array()
            .iter()
            .zip(other.to_array())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        let minus = self
            .to_array()
            .iter()
            .zip(other.to_array())
            .map(|(x, y)| (x + y).abs())
            .fold(0.0, f64::max);
        plus.min(minus)
    }
}

impl Mul for Sl2 {
    type Output = Sl2;
    fn mul(self, o: Sl2) -> Sl2 {
        Sl2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// Complex Möbius map `w -> (a w + b) / (c w + d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskMap {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl DiskMap {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        DiskMap { a, b, c, d }
    }

    pub fn identity() -> Self {
        DiskMap::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    /// Upper half-plane to disk: `z -> (z - i) / (z + i)`.
    pub fn cayley() -> Self {
        DiskMap::new(C64::new(1.0, 0.0), -I, C64::new(1.0, 0.0), I)
    }

    /// Disk to upper half-plane: `w -> i (1 + w) / (1 - w)`.
    pub fn cayley_inverse() -> Self {
        DiskMap::new(I, I, C64::new(-1.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn compose(&self, o: &DiskMap) -> DiskMap {
        DiskMap::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> DiskMap {
        DiskMap::new(self.d, -self.b, -self.c, self.a)
    }

    pub fn act(&self, w: C64) -> C64 {
        (self.a * w + self.b) / (self.c * w + self.d)
    }

    pub fn derivative(&self, w: C64) -> C64 {
        let q = self.c * w + self.d;
        self.det() / (q * q)
    }

    /// Back to `SL(2,R)`; fails if the map is not the conjugate of a real matrix.
    pub fn to_sl2(&self) -> Option<Sl2> {
        let m = DiskMap::cayley_inverse().compose(self).compose(&DiskMap::cayley());
        let scale = m.det().sqrt();
        let parts = [m.a / scale, m.b / scale, m.c / scale, m.d / scale];
        let size = parts.iter().map(|p| p.norm()).fold(0.0, f64::max);
        if parts.iter().all(|p| p.im.abs() <= 1e-10 * size.max(1.0)) {
            Some(Sl2::new(parts[0].re, parts[1].re, parts[2].re, parts[3].re))
        } else if parts.iter().all(|p| p.re.abs() <= 1e-10 * size.max(1.0)) {
            Some(Sl2::new(parts[0].im, parts[1].im, parts[2].im, parts[3].im))
        } else {
            None
        }
    }
}

pub fn upper_to_disk(z: C64) -> C64 {
    (z - I) / (z + I)
}

pub fn disk_to_upper(w: C64) -> C64 {
    I * (1.0 + w) / (1.0 - w)
}

/// `cosh d(w1, w2)` in the disk.
pub fn disk_cosh_distance(w1: C64, w2: C64) -> f64 {
    let num = 2.0 * (w1 - w2).norm_sqr();
    let den = (1.0 - w1.norm_sqr()) * (1.0 - w2.norm_sqr());
    1.0 + num / den
}

pub fn disk_distance(w1: C64, w2: C64) -> f64 {
    disk_cosh_distance(w1, w2).max(1.0).acosh()
}

/// Hyperbolic distance from the origin of the disk.
pub fn disk_radius(w: C64) -> f64 {
    2.0 * w.norm().atanh()
}

/// Disk point at hyperbolic distance `r` from the origin in direction `angle`.
pub fn disk_point_polar(r: f64, angle: f64) -> C64 {
    C64::from_polar((0.5 * r).tanh(), angle)
}

pub fn poincare_to_klein(w: C64) -> C64 {
    w * (2.0 / (1.0 + w.norm_sqr()))
}

pub fn klein_to_poincare(k: C64) -> C64 {
    k / (1.0 + (1.0 - k.norm_sqr()).max(0.0).sqrt())
}

/// Area of a geodesic triangle from its side lengths (hyperbolic L'Huilier formula).
pub fn triangle_area(a: f64, b: f64, c: f64) -> f64 {
    let s = 0.5 * (a + b + c);
    let prod = (0.5 * s).tanh()
        * (0.5 * (s - a)).max(0.0).tanh()
        * (0.5 * (s - b)).max(0.0).tanh()
        * (0.5 * (s - c)).max(0.0).tanh();
    4.0 * prod.max(0.0).sqrt().atan()
}

/// Hyperbolic area of the disk of radius `r`.
pub fn disk_area(r: f64) -> f64 {
    2.0 * std::f64::consts::PI * (r.cosh() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn cayley_round_trip() {
        let z = C64::new(0.3, 1.7);
        let w = upper_to_disk(z);
        assert!(w.norm() < 1.0);
        assert_abs_diff_eq!((disk_to_upper(w) - z).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((DiskMap::cayley().act(z) - w).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn disk_conjugation_is_consistent() {
        let g = Sl2::new(2.0, 1.0, 3.0, 2.0);
        let z = C64::new(-0.4, 0.9);
        let lhs = g.to_disk().act(upper_to_disk(z));
        let rhs = upper_to_disk(g.act(z));
        assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-13);
        let back = g.to_disk().to_sl2().unwrap();
        assert!(back.projective_distance(&g) < 1e-12);
    }

    #[test]
    fn geodesic_moves_unit_speed() {
        let z = Sl2::geodesic(1.3).act(I);
        let d = disk_distance(upper_to_disk(I), upper_to_disk(z));
        assert_abs_diff_eq!(d, 1.3, epsilon = 1e-12);
    }

    #[test]
    fn equilateral_ideal_limit_area() {
        // Large equilateral triangles approach the ideal-triangle area pi.
        let area = triangle_area(60.0, 60.0, 60.0);
        assert_abs_diff_eq!(area, PI, epsilon = 1e-9);
    }

    #[test]
    fn klein_round_trip() {
        let w = C64::from_polar(0.8, 1.1);
        assert_abs_diff_eq!((klein_to_poincare(poincare_to_klein(w)) - w).norm(), 0.0, epsilon = 1e-14);
    }
}
