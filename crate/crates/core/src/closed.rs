//! Closed geodesics of the model metric, one per free homotopy class given
//! by a hyperbolic group element.
//!
//! The loop is written in Fermi coordinates `(s, r)` around the hyperbolic
//! axis of the element, where the hyperbolic metric reads
//! `cosh^2 r ds^2 + dr^2` and the element acts by `s -> s + l`. The closed
//! geodesic of `e^{2 psi} g_hyp` minimises
//! `int_0^l e^{psi} sqrt(cosh^2 r + r'^2) ds` over periodic `r(s)`; we expand
//! `r` in a Fourier series and minimise by Newton's method.

use crate::error::{Error, Result};
use crate::hyperbolic::{upper_to_disk, Sl2, C64};
use crate::liouville::sample_rng;
use crate::model::FlowModel;
use crate::phase::PhasePoint;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Finite-difference step for `r`-derivatives of `psi`.
const FD_STEP: f64 = 1e-4;

/// Grid points per Fourier mode.
const POINTS_PER_MODE: usize = 8;

/// Axis data of a hyperbolic element `gamma = P diag(e^{l/2}, e^{-l/2}) P^{-1}`.
#[derive(Clone, Copy, Debug)]
pub struct Axis {
    pub conjugator: Sl2,
    pub length: f64,
}

/// Conjugates a hyperbolic element to the geodesic flow; `None` for
/// elliptic or parabolic elements and for elements fixing infinity.
pub fn hyperbolic_axis(gamma: &Sl2) -> Option<Axis> {
    let g = if gamma.trace() < 0.0 {
        Sl2::new(-gamma.a, -gamma.b, -gamma.c, -gamma.d)
    } else {
        *gamma
    };
    let tr = g.trace();
    if tr <= 2.0 + 1e-9 || g.c.abs() < 1e-14 {
        return None;
    }
    let disc = (tr * tr - 4.0).sqrt();
    let roots = [(g.a - g.d + disc) / (2.0 * g.c), (g.a - g.d - disc) / (2.0 * g.c)];
    let attracting = |x: f64| (g.c * x + g.d).abs() > 1.0;
    let (xp, xm) = if attracting(roots[0]) { (roots[0], roots[1]) } else { (roots[1], roots[0]) };
    let conjugator = if xp > xm {
        Sl2::new(xp, xm, 1.0, 1.0)
    } else {
        Sl2::new(xp, -xm, 1.0, -1.0)
    }
    .normalized();
    let length = 2.0 * (0.5 * tr).acosh();
    Some(Axis { conjugator, length })
}

/// Unit tangent vector on the axis of `gamma`, pointing towards its attracting fixed point.
pub fn axis_phase_point(gamma: &Sl2) -> Option<(PhasePoint, f64)> {
    hyperbolic_axis(gamma).map(|a| (PhasePoint::from_matrix(&a.conjugator), a.length))
}

/// Birkhoff averages of `u` and `psi` over one closed orbit, with
/// discretisation error estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedOrbit {
    pub word: Vec<usize>,
    /// True for the orbit traversed against the direction of the word.
    pub reversed: bool,
    /// Hyperbolic translation length of the word.
    pub hyperbolic_length: f64,
    /// Period in the model metric.
    pub period: f64,
    pub mean_u: f64,
    pub mean_psi: f64,
    pub error_u: f64,
    pub error_psi: f64,
}

struct Loop<'m> {
    model: &'m FlowModel,
    axis: Axis,
    modes: usize,
    coeffs: Vec<f64>,
}

/// Values of `F = e^{psi} sqrt(cosh^2 r + r'^2)` and of `K`, `psi` at one loop point.
struct LoopPoint {
    speed: f64,
    psi: f64,
    curvature: f64,
}

impl<'m> Loop<'m> {
    fn basis(&self, s: f64) -> (Vec<f64>, Vec<f64>) {
        let omega = TAU / self.axis.length;
        let mut f = vec![1.0];
        let mut df = vec![0.0];
        for m in 1..=self.modes {
            let (sn, cs) = (omega * m as f64 * s).sin_cos();
            let k = omega * m as f64;
            f.push(cs);
            df.push(-k * sn);
            f.push(sn);
            df.push(k * cs);
        }
        (f, df)
    }

    fn radius(&self, s: f64) -> (f64, f64) {
        let (f, df) = self.basis(s);
        let r = f.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        let q = df.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum();
        (r, q)
    }

    fn disk_point(&self, s: f64, r: f64) -> C64 {
        let zeta = C64::new(r.tanh(), 1.0 / r.cosh()) * s.exp();
        upper_to_disk(self.axis.conjugator.act(zeta))
    }

    fn reduced(&self, s: f64, r: f64) -> Result<C64> {
        let w = self.disk_point(s, r);
        self.model
            .group()
            .reduce(w, usize::MAX)
            .map(|(w, _, _)| w)
            .ok_or_else(|| Error::Input("closed geodesic left the disk".into()))
    }

    fn psi(&self, s: f64, r: f64) -> Result<f64> {
        Ok(self.model.psi(self.reduced(s, r)?))
    }

    fn point(&self, s: f64) -> Result<LoopPoint> {
        let (r, q) = self.radius(s);
        let w = self.reduced(s, r)?;
        let jet = self.model.profile().jet(w);
        Ok(LoopPoint {
            speed: jet.value.exp() * (r.cosh().powi(2) + q * q).sqrt(),
            psi: jet.value,
            curvature: crate::profile::ConformalProfile::curvature_from_jet(&jet),
        })
    }

    /// Discrete length, gradient and Hessian with respect to the coefficients.
    fn length_derivatives(&self, n: usize) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let dim = self.coeffs.len();
        let ds = self.axis.length / n as f64;
        let mut length = 0.0;
        let mut grad = DVector::zeros(dim);
        let mut hess = DMatrix::zeros(dim, dim);
        for i in 0..n {
            let s = i as f64 * ds;
            let (f, df) = self.basis(s);
            let r = f.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum::<f64>();
            let q = df.iter().zip(&self.coeffs).map(|(a, b)| a * b).sum::<f64>();
            let g0 = self.psi(s, r)?;
            let gp = self.psi(s, r + FD_STEP)?;
            let gm = self.psi(s, r - FD_STEP)?;
            let g_r = (gp - gm) / (2.0 * FD_STEP);
            let g_rr = (gp - 2.0 * g0 + gm) / (FD_STEP * FD_STEP);
            let (sh, ch) = (r.sinh(), r.cosh());
            let sc = sh * ch;
            let big_s = (ch * ch + q * q).sqrt();
            let e = g0.exp();
            let f_val = e * big_s;
            let f_r = e * (g_r * big_s + sc / big_s);
            let f_q = e * q / big_s;
            let d_sc = (2.0 * r).cosh() / big_s - sc * sc / big_s.powi(3);
            let f_rr = e * (g_rr * big_s + g_r * g_r * big_s + 2.0 * g_r * sc / big_s + d_sc);
            let f_rq = e * (g_r * q / big_s - q * sc / big_s.powi(3));
            let f_qq = e * ch * ch / big_s.powi(3);
            length += ds * f_val;
            for a in 0..dim {
                grad[a] += ds * (f_r * f[a] + f_q * df[a]);
                let ra = f_rr * f[a] + f_rq * df[a];
                let qa = f_rq * f[a] + f_qq * df[a];
                for b in a..dim {
                    hess[(a, b)] += ds * (ra * f[b] + qa * df[b]);
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                hess[(a, b)] = hess[(b, a)];
            }
        }
        Ok((length, grad, hess))
    }

    fn discrete_length(&self, n: usize) -> Result<f64> {
        let ds = self.axis.length / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let s = i as f64 * ds;
            let (r, q) = self.radius(s);
            total += ds * self.psi(s, r)?.exp() * (r.cosh().powi(2) + q * q).sqrt();
        }
        Ok(total)
    }

    fn minimise(&mut self, n: usize) -> Result<()> {
        if self.model.is_group_model() {
            return Ok(());
        }
        for _ in 0..40 {
            let (length, grad, hess) = self.length_derivatives(n)?;
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess
                    .lu()
                    .solve(&(-&grad))
                    .ok_or_else(|| Error::Input("singular Hessian for closed geodesic".into()))?,
            };
            let base = self.coeffs.clone();
            let mut alpha = 1.0;
            loop {
                self.coeffs = base.iter().zip(step.iter()).map(|(c, d)| c + alpha * d).collect();
                if self.discrete_length(n)? <= length * (1.0 + 1e-14) || alpha < 1e-6 {
                    break;
                }
                alpha *= 0.5;
            }
            if step.amax() * alpha < 1e-9 {
                return Ok(());
            }
        }
        Err(Error::Input("closed geodesic minimisation did not converge".into()))
    }

    /// Periodic unstable Riccati solution along the loop (in either
    /// direction) and the period averages of `u` and `psi`.
    fn averages(&self, n: usize, reversed: bool) -> Result<(f64, f64, f64)> {
        let ds = self.axis.length / n as f64;
        let mut nodes = Vec::with_capacity(n + 1);
        let mut mids = Vec::with_capacity(n);
        for i in 0..=n {
            nodes.push(self.point(i as f64 * ds)?);
        }
        for i in 0..n {
            mids.push(self.point((i as f64 + 0.5) * ds)?);
        }
        if reversed {
            nodes.reverse();
            mids.reverse();
        }
        // du/ds = F (-K - u^2), d(period)/ds = F, d(int u)/ds = F u, d(int psi)/ds = F psi.
        let rhs = |p: &LoopPoint, u: f64| p.speed * (-p.curvature - u * u);
        let mut u = (-nodes[0].curvature).max(1e-12).sqrt();
        let mut period = 0.0;
        let mut int_psi = 0.0;
        for i in 0..n {
            period += ds / 6.0 * (nodes[i].speed + 4.0 * mids[i].speed + nodes[i + 1].speed);
            int_psi += ds / 6.0
                * (nodes[i].speed * nodes[i].psi + 4.0 * mids[i].speed * mids[i].psi + nodes[i + 1].speed * nodes[i + 1].psi);
        }
        for _ in 0..200 {
            let start = u;
            let mut int_u = 0.0;
            for i in 0..n {
                let (a, m, b) = (&nodes[i], &mids[i], &nodes[i + 1]);
                let u1 = u;
                let k1 = rhs(a, u1);
                let u2 = u + 0.5 * ds * k1;
                let k2 = rhs(m, u2);
                let u3 = u + 0.5 * ds * k2;
                let k3 = rhs(m, u3);
                let u4 = u + ds * k3;
                let k4 = rhs(b, u4);
                int_u += ds / 6.0 * (a.speed * u1 + 2.0 * m.speed * (u2 + u3) + b.speed * u4);
                u += ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if !(u > 0.0 && u.is_finite()) {
                    return Err(Error::RiccatiBreakdown { u, s: i as f64 * ds });
                }
            }
            if (u - start).abs() < 1e-14 {
                return Ok((period, int_u / period, int_psi / period));
            }
        }
        Err(Error::Input("periodic Riccati solution did not converge".into()))
    }
}

fn solve_loop(model: &FlowModel, axis: Axis, modes: usize) -> Result<(f64, [(f64, f64); 2])> {
    let n = POINTS_PER_MODE * (2 * modes + 1);
    let mut lp = Loop { model, axis, modes, coeffs: vec![0.0; 2 * modes + 1] };
    lp.minimise(n)?;
    let (period, mu_f, mpsi) = lp.averages(n, false)?;
    let (_, mu_b, _) = lp.averages(n, true)?;
    Ok((period, [(mu_f, mpsi), (mu_b, mpsi)]))
}

/// Closed orbits (both directions) in the free homotopy class of `word`.
pub fn closed_orbits(model: &FlowModel, word: &[usize]) -> Result<Vec<ClosedOrbit>> {
    let gamma = model.group().word_matrix(word);
    let axis = hyperbolic_axis(&gamma)
        .ok_or_else(|| Error::Input(format!("word {word:?} is not hyperbolic")))?;
    let modes = ((axis.length / 0.4).ceil() as usize + 4).max(8);
    let coarse_modes = (2 * modes).div_ceil(3);
    let (period, fine) = solve_loop(model, axis, modes)?;
    let (_, coarse) = solve_loop(model, axis, coarse_modes)?;
    Ok((0..2)
        .map(|d| ClosedOrbit {
            word: word.to_vec(),
            reversed: d == 1,
            hyperbolic_length: axis.length,
            period,
            mean_u: fine[d].0,
            mean_psi: fine[d].1,
            error_u: (fine[d].0 - coarse[d].0).abs(),
            error_psi: (fine[d].1 - coarse[d].1).abs(),
        })
        .collect())
}

/// Closed orbits for `n_words` random cyclically reduced words of length at
/// most `max_len`, both directions each.
pub fn closed_orbit_ensemble(model: &FlowModel, max_len: usize, n_words: usize, seed: u64) -> Result<Vec<ClosedOrbit>> {
    let mut rng = sample_rng(seed, u64::MAX);
    let mut words: Vec<Vec<usize>> = Vec::with_capacity(n_words);
    let mut attempts = 0;
    while words.len() < n_words && attempts < 100 * n_words {
        attempts += 1;
        let len = rng.random_range(1..=max_len);
        let word = model.group().random_cyclic_word(len, &mut rng);
        if hyperbolic_axis(&model.group().word_matrix(&word)).is_some() {
            words.push(word);
        }
    }
    use rayon::prelude::*;
    let per_word: Vec<Result<Vec<ClosedOrbit>>> = words.par_iter().map(|w| closed_orbits(model, w)).collect();
    let mut out = Vec::with_capacity(2 * words.len());
    for r in per_word {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FuchsianGroup;
    use approx::assert_abs_diff_eq;

    #[test]
    fn axis_conjugation() {
        let g = FuchsianGroup::bolza();
        let gamma = g.word_matrix(&[0, 1, 6]);
        let axis = hyperbolic_axis(&gamma).unwrap();
        let p = axis.conjugator;
        let back = p * Sl2::geodesic(axis.length) * p.inverse();
        assert!(back.projective_distance(&gamma) < 1e-9);
        assert_abs_diff_eq!(gamma.trace().abs(), 2.0 * (0.5 * axis.length).cosh(), epsilon = 1e-10);
    }
}
