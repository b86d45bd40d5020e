//! Smooth group-invariant functions on the surface, built as truncated
//! Poincaré series of a bump profile, and the conformal factor `psi` that
//! perturbs the hyperbolic metric to `e^{2 psi} g_hyp`.

use crate::group::FuchsianGroup;
use crate::hyperbolic::{disk_cosh_distance, disk_radius, C64};
use std::f64::consts::PI;

/// Exponent beyond which a bump term is dropped (`e^{-42}` is below 1e-18).
const EXP_CUT: f64 = 42.0;

/// Extra distance kept around the polygon when pruning images, so that
/// points slightly outside (integrator midpoints, stencils) stay exact.
const PRUNE_MARGIN: f64 = 0.25;

#[derive(Clone, Copy, Debug)]
struct Image {
    at: C64,
    /// `2 / ((1 - |a|^2) sigma^2)`.
    scale: f64,
}

/// Value, Euclidean gradient (in disk coordinates) and hyperbolic Laplacian.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: C64,
    pub laplacian: f64,
}

/// `sum_{gamma} exp(-(cosh d(w, gamma z0) - 1) / sigma^2)` over the images of
/// `z0` under reduced words of bounded length.
///
/// Near `d = 0` the profile is the Gaussian `exp(-d^2 / (2 sigma^2))`; written in
/// terms of `cosh d` it has closed-form derivatives everywhere.
#[derive(Clone, Debug)]
pub struct PoincareBump {
    center: C64,
    width: f64,
    depth: usize,
    cut: f64,
    images: Vec<Image>,
    all_images: Vec<Image>,
}

impl PoincareBump {
    pub fn new(group: &FuchsianGroup, center: C64, width: f64, depth: usize) -> Self {
        Self::with_cut(group, center, width, depth, EXP_CUT)
    }

    /// Like [`PoincareBump::new`], dropping terms below `e^{-cut}` instead of `e^{-42}`.
    pub fn with_cut(group: &FuchsianGroup, center: C64, width: f64, depth: usize, cut: f64) -> Self {
        let inv_s2 = 1.0 / (width * width);
        let mut all: Vec<Image> = Vec::new();
        for word in group.reduced_words(depth) {
            let at = group.word_disk(&word).act(center);
            if all.iter().any(|im| (im.at - at).norm() < 1e-11) {
                continue;
            }
            all.push(Image { at, scale: 2.0 * inv_s2 / (1.0 - at.norm_sqr()) });
        }
        let reach = group.circumradius() + (1.0 + cut * width * width).acosh() + PRUNE_MARGIN;
        let images = all.iter().copied().filter(|im| disk_radius(im.at) <= reach).collect();
        PoincareBump { center, width, depth, cut, images, all_images: all }
    }

    pub fn center(&self) -> C64 {
        self.center
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of images retained for evaluation near the polygon.
    pub fn active_images(&self) -> usize {
        self.images.len()
    }

    /// Value at a point in (or near) the fundamental polygon.
    #[inline]
    pub fn value(&self, w: C64) -> f64 {
        let q = 1.0 / (1.0 - w.norm_sqr());
        let mut sum = 0.0;
        for im in &self.images {
            let x = im.scale * q * (w - im.at).norm_sqr();
            if x < self.cut {
                sum += (-x).exp();
            }
        }
        sum
    }

    /// Value and gradient near the polygon.
    #[inline]
    pub fn value_grad(&self, w: C64) -> (f64, C64) {
        let q = 1.0 / (1.0 - w.norm_sqr());
        let mut value = 0.0;
        let mut grad = C64::new(0.0, 0.0);
        for im in &self.images {
            let diff = w - im.at;
            let n = diff.norm_sqr();
            let x = im.scale * q * n;
            if x >= self.cut {
                continue;
            }
            let f = (-x).exp();
            value += f;
            grad -= (diff * (2.0 * q) + w * (2.0 * n * q * q)) * (im.scale * f);
        }
        (value, grad)
    }

    /// Full truncated series, without pruning; valid anywhere in the disk.
    pub fn raw_value(&self, w: C64) -> f64 {
        let inv_s2 = 1.0 / (self.width * self.width);
        self.all_images
            .iter()
            .map(|im| (-(disk_cosh_distance(w, im.at) - 1.0) * inv_s2).exp())
            .sum()
    }

    /// Value, gradient and hyperbolic Laplacian near the polygon.
    pub fn jet(&self, w: C64) -> Jet {
        let s2 = self.width * self.width;
        let inv_s2 = 1.0 / s2;
        let q = 1.0 / (1.0 - w.norm_sqr());
        let mut out = Jet::default();
        for im in &self.images {
            let diff = w - im.at;
            let n = diff.norm_sqr();
            let x = im.scale * q * n;
            if x >= self.cut {
                continue;
            }
            let f = (-x).exp();
            let c = 1.0 + x * s2;
            let fp = -f * inv_s2;
            let fpp = f * inv_s2 * inv_s2;
            // grad c = 2/(1-|a|^2) * (2 (w - a) q + 2 |w - a|^2 q^2 w)
            let k = im.scale * s2;
            let grad_c = (diff * (2.0 * q) + w * (2.0 * n * q * q)) * k;
            out.value += f;
            out.grad += grad_c * fp;
            out.laplacian += (c * c - 1.0) * fpp + 2.0 * c * fp;
        }
        out
    }

    /// Integral over one period of the surface, by unfolding the series:
    /// `int_H exp(-(cosh r - 1)/sigma^2) dA = 2 pi sigma^2`.
    pub fn unfolded_integral(&self) -> f64 {
        2.0 * PI * self.width * self.width
    }
}

/// Conformal factor `psi = offset + amplitude * bump`.
#[derive(Clone, Debug)]
pub struct ConformalProfile {
    pub offset: f64,
    pub amplitude: f64,
    pub bump: Option<PoincareBump>,
}

impl ConformalProfile {
    pub fn flat() -> Self {
        ConformalProfile { offset: 0.0, amplitude: 0.0, bump: None }
    }

    /// True when `psi` vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.offset == 0.0 && (self.amplitude == 0.0 || self.bump.is_none())
    }

    /// True when `psi` is constant (so the curvature is constant).
    pub fn is_constant(&self) -> bool {
        self.amplitude == 0.0 || self.bump.is_none()
    }

    #[inline]
    pub fn value(&self, w: C64) -> f64 {
        match &self.bump {
            Some(b) if self.amplitude != 0.0 => self.offset + self.amplitude * b.value(w),
            _ => self.offset,
        }
    }

    pub fn raw_value(&self, w: C64) -> f64 {
        match &self.bump {
            Some(b) if self.amplitude != 0.0 => self.offset + self.amplitude * b.raw_value(w),
            _ => self.offset,
        }
    }

    #[inline]
    pub fn value_grad(&self, w: C64) -> (f64, C64) {
        match &self.bump {
            Some(b) if self.amplitude != 0.0 => {
                let (v, g) = b.value_grad(w);
                (self.offset + self.amplitude * v, g * self.amplitude)
            }
            _ => (self.offset, C64::new(0.0, 0.0)),
        }
    }

    #[inline]
    pub fn jet(&self, w: C64) -> Jet {
        match &self.bump {
            Some(b) if self.amplitude != 0.0 => {
                let j = b.jet(w);
                Jet {
                    value: self.offset + self.amplitude * j.value,
                    grad: j.grad * self.amplitude,
                    laplacian: self.amplitude * j.laplacian,
                }
            }
            _ => Jet { value: self.offset, ..Jet::default() },
        }
    }

    /// Gaussian curvature `e^{-2 psi} (-1 - Lap_hyp psi)`.
    #[inline]
    pub fn curvature_from_jet(jet: &Jet) -> f64 {
        (-2.0 * jet.value).exp() * (-1.0 - jet.laplacian)
    }

    pub fn curvature(&self, w: C64) -> f64 {
        Self::curvature_from_jet(&self.jet(w))
    }
}
