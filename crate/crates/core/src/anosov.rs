//! Numerical verification of the Anosov property and of the contact structure.

use crate::hyperbolic::C64;
use crate::liouville::liouville_samples;
use crate::model::FlowModel;
use crate::phase::PhasePoint;
use crate::riccati::unstable_jacobian_log;
use serde::{Deserialize, Serialize};

/// Tolerance for `alpha(X) = 1`.
pub const CONTACT_TOL: f64 = 1e-10;

/// Lower bound on `|d alpha(e1, e2)|` for an orthonormal basis of `ker alpha` on the energy shell.
pub const SYMPLECTIC_MIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnosovReport {
    /// Smallest expansion rate of `E_u` over the samples.
    pub lambda_unstable: f64,
    /// Smallest contraction rate of `E_s` over the samples (from the reversed flow).
    pub lambda_stable: f64,
    /// `min(lambda_unstable, lambda_stable)`.
    pub lambda_estimate: f64,
    /// Largest `|alpha(X) - 1|`.
    pub contact_error: f64,
    /// Smallest normalised `|d alpha|` on `ker alpha`.
    pub symplectic_min: f64,
    pub contact_ok: bool,
    pub n_samples: usize,
    pub t_check: f64,
    /// First integration failure, if any.
    pub failure: Option<String>,
}

impl AnosovReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.lambda_estimate > 0.0 && self.contact_ok
    }

    pub fn summary(&self) -> String {
        match &self.failure {
            Some(f) => format!("integration failed: {f}"),
            None => format!(
                "lambda = {:.6} (unstable {:.6}, stable {:.6}), contact error {:.2e}, |d alpha| >= {:.3e}",
                self.lambda_estimate, self.lambda_unstable, self.lambda_stable, self.contact_error, self.symplectic_min
            ),
        }
    }
}

/// Contact data at one point: `|alpha(X) - 1|` and the normalised value of
/// `d alpha` on an orthonormal basis of `ker alpha` within the energy shell.
pub fn contact_check(model: &FlowModel, p: &PhasePoint) -> (f64, f64) {
    let (phi, grad_phi) = model.phi_grad(p.w);
    let cov = C64::from_polar(phi.exp(), p.theta);
    let e = (-2.0 * phi).exp();
    let xdot = cov * e;
    // alpha = p . dw (the Liouville form restricted to the unit cotangent bundle).
    let alpha_x = cov.re * xdot.re + cov.im * xdot.im;

    // Coordinates (w_x, w_y, p_x, p_y); normals of ker alpha and of the energy shell.
    let n1 = [cov.re, cov.im, 0.0, 0.0];
    let dh_w = grad_phi * (-cov.norm_sqr() * e);
    let n2 = [dh_w.re, dh_w.im, xdot.re, xdot.im];
    let mut basis: Vec<[f64; 4]> = Vec::new();
    for n in [n1, n2] {
        push_orthonormal(&mut basis, n);
    }
    for i in 0..4 {
        let mut e_i = [0.0; 4];
        e_i[i] = 1.0;
        push_orthonormal(&mut basis, e_i);
        if basis.len() == 4 {
            break;
        }
    }
    let (a, b) = (basis[2], basis[3]);
    let omega = a[2] * b[0] + a[3] * b[1] - b[2] * a[0] - b[3] * a[1];
    ((alpha_x - 1.0).abs(), omega.abs())
}

fn push_orthonormal(basis: &mut Vec<[f64; 4]>, mut v: [f64; 4]) {
    for _ in 0..2 {
        for b in basis.iter() {
            let d: f64 = (0..4).map(|i| v[i] * b[i]).sum();
            for i in 0..4 {
                v[i] -= d * b[i];
            }
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-8 {
        basis.push(v.map(|x| x / norm));
    }
}

/// Estimates the hyperbolicity rate as the minimum over Liouville samples of
/// `(1/t_check) log |D phi_t restricted to E_u|`, and symmetrically for `E_s`
/// through the reversed flow; checks the contact structure at the same samples.
pub fn verify_anosov(model: &FlowModel, n_samples: usize, t_check: f64, seed: u64) -> AnosovReport {
    let samples = liouville_samples(model, n_samples.max(1), seed);
    let mut report = AnosovReport {
        lambda_unstable: f64::INFINITY,
        lambda_stable: f64::INFINITY,
        lambda_estimate: f64::INFINITY,
        contact_error: 0.0,
        symplectic_min: f64::INFINITY,
        contact_ok: true,
        n_samples: samples.len(),
        t_check,
        failure: None,
    };
    use rayon::prelude::*;
    let rates: Vec<crate::error::Result<(f64, f64)>> = samples
        .par_iter()
        .map(|s| {
            let up = unstable_jacobian_log(model, &s.point, t_check)? / t_check;
            let down = unstable_jacobian_log(model, &s.point.flip(), t_check)? / t_check;
            Ok((up, down))
        })
        .collect();
    for (s, r) in samples.iter().zip(rates) {
        match r {
            Ok((up, down)) => {
                report.lambda_unstable = report.lambda_unstable.min(up);
                report.lambda_stable = report.lambda_stable.min(down);
            }
            Err(e) => {
                if report.failure.is_none() {
                    report.failure = Some(e.to_string());
                }
            }
        }
        let (alpha_err, omega) = contact_check(model, &s.point);
        report.contact_error = report.contact_error.max(alpha_err);
        report.symplectic_min = report.symplectic_min.min(omega);
    }
    report.lambda_estimate = report.lambda_unstable.min(report.lambda_stable);
    report.contact_ok = report.contact_error <= CONTACT_TOL && report.symplectic_min >= SYMPLECTIC_MIN;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_curvature_rate_is_one() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let r = verify_anosov(&m, 64, 1.0, 3);
        assert!(r.passed(), "{}", r.summary());
        assert_abs_diff_eq!(r.lambda_estimate, 1.0, epsilon = 1e-9);
        assert!(r.contact_error < CONTACT_TOL);
    }
}
