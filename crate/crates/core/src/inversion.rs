//! Harmonic inversion of sampled signals `C(t_m) ~ sum_j a_j e^{z_j t_m}` by the
//! matrix-pencil method, and the residual of a truncated mode expansion.

use crate::error::{Error, Result};
use crate::hyperbolic::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest pencil parameter; bounds the cost of the Hankel SVD.
const MAX_PENCIL: usize = 300;

/// Modes within this fraction of the Nyquist frequency trigger a warning.
const NYQUIST_MARGIN: f64 = 0.98;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub z: C64,
    pub amplitude: C64,
}

impl Mode {
    /// `sqrt(sum_m |a e^{z t_m}|^2)`: size of the mode over the sampled window.
    pub fn energy(&self, dt: f64, n: usize) -> f64 {
        let r = (2.0 * self.z.re * dt).exp();
        let a2 = self.amplitude.norm_sqr();
        let sum = if (r - 1.0).abs() < 1e-12 { n as f64 } else { (1.0 - r.powi(n as i32)) / (1.0 - r) };
        (a2 * sum).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    /// Sorted by decreasing real part, then by imaginary part.
    pub modes: Vec<Mode>,
    pub dt: f64,
    pub n_samples: usize,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Root-mean-square misfit of the reconstruction.
    pub residual: f64,
    /// Some mode sits at the Nyquist bound `pi / dt` and may be aliased.
    pub aliasing_warning: bool,
}

/// `sum_j a_j e^{z_j m dt}` for `m = 0..n`.
pub fn synthesize(modes: &[Mode], dt: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|m| {
            let t = m as f64 * dt;
            modes.iter().map(|md| md.amplitude * (md.z * t).exp()).sum()
        })
        .collect()
}

/// Least-squares amplitudes for fixed exponents.
pub fn fit_amplitudes(values: &[f64], dt: f64, zs: &[C64]) -> Result<Vec<C64>> {
    if zs.is_empty() {
        return Ok(Vec::new());
    }
    let n = values.len();
    if n < zs.len() {
        return Err(Error::Input("fewer samples than modes".into()));
    }
    let v = DMatrix::<C64>::from_fn(n, zs.len(), |m, j| (zs[j] * (m as f64 * dt)).exp());
    let y = DVector::<C64>::from_iterator(n, values.iter().map(|x| C64::new(*x, 0.0)));
    let svd = v.svd(true, true);
    let tol = svd.singular_values.max() * 1e-13;
    let a = svd.solve(&y, tol).map_err(|e| Error::Input(e.to_string()))?;
    Ok(a.iter().copied().collect())
}

/// Extracts up to `max_modes` exponentials from equally spaced samples.
///
/// Singular values of the Hankel matrix below `sv_threshold * sigma_max` are
/// treated as noise. An all-zero signal yields an empty mode set.
pub fn harmonic_inversion(values: &[f64], dt: f64, max_modes: usize, sv_threshold: f64) -> Result<ModeSet> {
    let n = values.len();
    if !(dt > 0.0) || !(sv_threshold > 0.0 && sv_threshold < 1.0) {
        return Err(Error::Input("dt must be positive and sv_threshold in (0, 1)".into()));
    }
    if max_modes == 0 || n < 4 * max_modes {
        return Err(Error::Input(format!("{n} samples cannot resolve {max_modes} modes (need 4 per mode)")));
    }
    let empty = |sv: Vec<f64>| ModeSet {
        modes: Vec::new(),
        dt,
        n_samples: n,
        singular_values: sv,
        rank: 0,
        residual: (values.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt(),
        aliasing_warning: false,
    };
    if values.iter().all(|x| *x == 0.0) {
        return Ok(empty(Vec::new()));
    }
    let l = (n / 3).clamp((max_modes + 1).min(n / 2), MAX_PENCIL.max(max_modes + 1)).min(n - 2);
    let rows = n - l;
    let y = DMatrix::<f64>::from_fn(rows, l + 1, |i, j| values[i + j]);
    let svd = y.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cutoff = sv[0] * sv_threshold;
    let rank = sv.iter().take_while(|s| **s > cutoff).count().min(max_modes).min(l);
    if rank == 0 {
        return Ok(empty(sv));
    }
    // Rows of V^T spanning the signal subspace; the shift between its first
    // and last l columns is conjugate to diag(lambda_j).
    let w = DMatrix::<f64>::from_fn(rank, l + 1, |r, c| v_t[(order[r], c)]);
    let w1 = w.columns(0, l).into_owned();
    let w2 = w.columns(1, l).into_owned();
    let pinv = w1.pseudo_inverse(1e-14).map_err(|e| Error::Input(e.to_string()))?;
    let shift = &w2 * &pinv;
    let lambdas = shift.complex_eigenvalues();
    let zs: Vec<C64> = lambdas.iter().map(|lam| lam.ln() / dt).collect();
    let amps = fit_amplitudes(values, dt, &zs)?;
    let mut modes: Vec<Mode> = zs.iter().zip(&amps).map(|(z, a)| Mode { z: *z, amplitude: *a }).collect();
    modes.sort_by(|a, b| b.z.re.total_cmp(&a.z.re).then(a.z.im.total_cmp(&b.z.im)));
    let fit = synthesize(&modes, dt, n);
    let residual = (values.iter().zip(&fit).map(|(x, f)| (x - f.re).powi(2)).sum::<f64>() / n as f64).sqrt();
    let nyquist = PI / dt;
    let aliasing_warning = modes.iter().any(|m| m.z.im.abs() >= NYQUIST_MARGIN * nyquist);
    Ok(ModeSet { modes, dt, n_samples: n, singular_values: sv, rank, residual, aliasing_warning })
}

/// Number of leading samples worth fitting: up to the last one with
/// `|C| > factor * stderr`. Returns the full length when `factor <= 0` or no
/// standard errors are available.
pub fn signal_length(values: &[f64], stderr: &[f64], factor: f64) -> usize {
    if factor <= 0.0 || stderr.iter().all(|e| *e == 0.0) {
        return values.len();
    }
    values
        .iter()
        .zip(stderr)
        .rposition(|(c, e)| c.abs() > factor * e)
        .map_or(0, |m| m + 1)
}

/// `sqrt(sum_m stderr_m^2)` over the first `n` samples.
pub fn noise_energy(stderr: &[f64], n: usize) -> f64 {
    stderr.iter().take(n).map(|e| e * e).sum::<f64>().sqrt()
}

/// Modes whose energy over the fitted window exceeds `factor` times the noise
/// energy of that window.
pub fn significant_modes(set: &ModeSet, stderr: &[f64], factor: f64) -> Vec<Mode> {
    let floor = factor * noise_energy(stderr, set.n_samples);
    set.modes.iter().copied().filter(|m| m.energy(set.dt, set.n_samples) > floor).collect()
}

/// Exponential fit of the remainder `R(t) = |C(t) - sum_j a_j e^{z_j t}|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    /// Fitted decay rate of `R`; `None` when too few points rise above noise.
    pub slope: Option<f64>,
    pub slope_error: f64,
    pub intercept: f64,
    pub n_points: usize,
    pub bound: f64,
    /// `slope <= bound + slope_error`; true (and `vacuous`) without a fit.
    pub passed: bool,
    pub vacuous: bool,
    pub remainder: Vec<f64>,
}

/// Residual of a mode expansion against a series. Points where `R` does not
/// exceed `noise_factor * stderr` (or a relative floor of 1e-12) are left out
/// of the log-linear fit.
pub fn expansion_residual(
    values: &[f64],
    stderr: &[f64],
    dt: f64,
    modes: &[Mode],
    bound: f64,
    noise_factor: f64,
) -> ExpansionReport {
    let n = values.len();
    let fit = synthesize(modes, dt, n);
    let remainder: Vec<f64> = values.iter().zip(&fit).map(|(c, f)| (C64::new(*c, 0.0) - f).norm()).collect();
    let scale = values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for m in 0..n {
        let floor = (noise_factor * stderr.get(m).copied().unwrap_or(0.0)).max(1e-12 * scale);
        if remainder[m] > floor && remainder[m] > 0.0 {
            ts.push(m as f64 * dt);
            ys.push(remainder[m].ln());
        }
    }
    if ts.len() < 3 {
        return ExpansionReport {
            slope: None,
            slope_error: 0.0,
            intercept: 0.0,
            n_points: ts.len(),
            bound,
            passed: true,
            vacuous: true,
            remainder,
        };
    }
    let (slope, intercept, slope_error) = linear_fit(&ts, &ys);
    ExpansionReport {
        slope: Some(slope),
        slope_error,
        intercept,
        n_points: ts.len(),
        bound,
        passed: slope <= bound + slope_error,
        vacuous: false,
        remainder,
    }
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, stderr(a))`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let err = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, err)
}

/// True when the median `|a_j|` over successive bands of `|Im z|` never
/// increases. Only modes with `Im z >= 0` are used; bins are `bin_width` wide.
pub fn amplitudes_decay(modes: &[Mode], bin_width: f64) -> bool {
    let mut bins: Vec<Vec<f64>> = Vec::new();
    for m in modes.iter().filter(|m| m.z.im >= 0.0) {
        let b = (m.z.im / bin_width) as usize;
        if bins.len() <= b {
            bins.resize(b + 1, Vec::new());
        }
        bins[b].push(m.amplitude.norm());
    }
    let medians: Vec<f64> = bins
        .into_iter()
        .filter(|b| !b.is_empty())
        .map(|mut b| {
            b.sort_by(f64::total_cmp);
            b[b.len() / 2]
        })
        .collect();
    medians.windows(2).all(|w| w[1] <= w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real_signal(modes: &[Mode], dt: f64, n: usize) -> Vec<f64> {
        synthesize(modes, dt, n).iter().map(|c| c.re).collect()
    }

    fn pair(z: C64, a: C64) -> [Mode; 2] {
        [Mode { z, amplitude: a }, Mode { z: z.conj(), amplitude: a.conj() }]
    }

    #[test]
    fn recovers_a_damped_pair() {
        let modes = pair(C64::new(-0.5, 2.0), C64::new(0.5, 0.2));
        let y = real_signal(&modes, 0.05, 400);
        let set = harmonic_inversion(&y, 0.05, 8, 1e-8).unwrap();
        assert_eq!(set.rank, 2);
        assert!((set.modes[0].z - C64::new(-0.5, -2.0)).norm() < 1e-8);
        assert!((set.modes[1].z - C64::new(-0.5, 2.0)).norm() < 1e-8);
        assert!(set.residual < 1e-10);
        assert!(!set.aliasing_warning);
    }

    #[test]
    fn zero_signal_gives_no_modes() {
        let set = harmonic_inversion(&[0.0; 50], 0.1, 4, 1e-3).unwrap();
        assert!(set.modes.is_empty());
    }

    #[test]
    fn exact_expansion_is_vacuous() {
        let modes = pair(C64::new(-0.3, 1.0), C64::new(1.0, 0.0));
        let y = real_signal(&modes, 0.1, 100);
        let r = expansion_residual(&y, &[0.0; 100], 0.1, &modes, -1.5, 3.0);
        assert!(r.vacuous && r.passed);
    }

    #[test]
    fn fit_slope_of_known_remainder() {
        let main = pair(C64::new(-0.5, 2.0), C64::new(1.0, 0.0));
        let extra = pair(C64::new(-1.5, 3.0), C64::new(0.5, 0.0));
        let all: Vec<Mode> = main.iter().chain(extra.iter()).copied().collect();
        let y = real_signal(&all, 0.05, 200);
        let r = expansion_residual(&y, &[0.0; 200], 0.05, &main, -1.5, 3.0);
        let slope = r.slope.unwrap();
        assert!(slope < -1.3 && slope > -1.7, "{slope}");
    }
}
