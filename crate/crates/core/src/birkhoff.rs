//! Birkhoff averages and the band edges `gamma_k^-`, `gamma_k^+`: extremes over
//! orbits of the time average of `D - k u`.

use crate::closed::{closed_orbit_ensemble, ClosedOrbit};
use crate::error::{Error, Result};
use crate::liouville::{sample_rng, space_average, Estimate};
use crate::model::FlowModel;
use crate::phase::PhasePoint;
use crate::potential::PotentialSpec;
use crate::riccati::OrbitWalker;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Two edges closer than this are considered equal.
pub const EDGE_TOL: f64 = 1e-9;

/// Values available to an observable along an orbit.
#[derive(Clone, Copy, Debug)]
pub struct OrbitSample {
    pub point: PhasePoint,
    pub u: f64,
    pub psi: f64,
}

/// `(1/t) int_0^t f(phi_{-s} p) ds`, by the trapezoidal rule on the
/// quadrature grid. The backward orbit is traversed forward from `phi_{-t} p`.
pub fn birkhoff_average<F>(model: &FlowModel, f: F, p: &PhasePoint, t: f64) -> Result<f64>
where
    F: Fn(&OrbitSample) -> f64,
{
    if !(t > 0.0) {
        return Err(Error::Input(format!("birkhoff_average needs t > 0, got {t}")));
    }
    let start = model.flow_map(p, -t)?;
    let mut walker = OrbitWalker::start(model, &start)?;
    let sample = |w: &OrbitWalker| OrbitSample { point: w.phase(), u: w.u(), psi: w.psi() };
    let step = model.quadrature_step();
    let (n, rem) = FlowModel::step_plan(t, step);
    let mut prev = f(&sample(&walker));
    let mut total = 0.0;
    for _ in 0..n {
        walker.step(step)?;
        let next = f(&sample(&walker));
        total += 0.5 * step * (prev + next);
        prev = next;
    }
    if rem > 0.0 {
        walker.step(rem)?;
        total += 0.5 * rem * (prev + f(&sample(&walker)));
    }
    Ok(total / t)
}

/// How initial conditions for the band-edge ensembles are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seeding {
    Liouville,
    ClosedGeodesics,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingPlan {
    /// Number of Liouville-random orbits.
    pub n_orbits: usize,
    pub seeding: Seeding,
    /// Increasing averaging windows; the smallest must exceed the burn-in time.
    pub windows: Vec<f64>,
    /// Largest accepted spread between the two longest windows.
    pub tolerance: f64,
    /// Longest group word used to seed closed geodesics.
    pub max_word_len: usize,
    /// Number of random words drawn for the closed-geodesic ensemble.
    pub n_words: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            n_orbits: 10_000,
            seeding: Seeding::Both,
            windows: vec![50.0, 100.0, 200.0],
            tolerance: 1e-3,
            max_word_len: 6,
            n_words: 64,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn validate(&self, model: &FlowModel) -> Result<()> {
        if self.windows.len() < 2 {
            return Err(Error::Config("at least two averaging windows are needed".into()));
        }
        if self.windows.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("averaging windows must increase".into()));
        }
        if self.windows[0] <= model.t_burn() {
            return Err(Error::Config(format!(
                "smallest window {} must exceed the burn-in time {}",
                self.windows[0],
                model.t_burn()
            )));
        }
        let uses_grid = self.seeding != Seeding::ClosedGeodesics;
        let uses_closed = self.seeding != Seeding::Liouville;
        if uses_grid && self.n_orbits == 0 {
            return Err(Error::Config("n_orbits must be positive".into()));
        }
        if uses_closed && (self.n_words == 0 || self.max_word_len == 0) {
            return Err(Error::Config("closed-geodesic seeding needs n_words and max_word_len".into()));
        }
        Ok(())
    }
}

/// Edges estimated by one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeEstimate {
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    /// Error bar: window spread (orbit ensemble) or discretisation error (closed geodesics).
    pub error: f64,
    pub n_orbits: usize,
    /// Ensemble maxima and minima per window (orbit ensemble only).
    pub window_max: Vec<f64>,
    pub window_min: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEdges {
    pub k: usize,
    pub gamma_minus: f64,
    pub gamma_plus: f64,
    /// Longest averaging window.
    pub horizon: f64,
    pub n_orbits: usize,
    pub extrapolation_error: f64,
    /// False when the extrapolation spread exceeds the plan tolerance.
    pub converged: bool,
    pub grid: Option<EdgeEstimate>,
    pub closed: Option<EdgeEstimate>,
}

/// Cumulative `int u` and `int psi` of one orbit at the end of each window.
#[derive(Clone, Debug)]
pub struct OrbitIntegrals {
    pub int_u: Vec<f64>,
    pub int_psi: Vec<f64>,
}

/// Integrates one Liouville-random orbit per sample over all windows, after a
/// forward burn-in that brings `u` onto the unstable solution.
pub fn orbit_integrals(model: &FlowModel, plan: &SamplingPlan) -> Result<Vec<OrbitIntegrals>> {
    (0..plan.n_orbits as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(plan.seed, i);
            let w = model.group().sample_uniform(&mut rng);
            let p = PhasePoint::new(w, rng.random::<f64>() * TAU);
            let mut walker = if model.is_group_model() {
                OrbitWalker::new(model, &p, model.time_scale())
            } else {
                let k = model.gaussian_curvature(p.w);
                let mut walker = OrbitWalker::new(model, &p, (-k).max(1e-12).sqrt());
                walker.advance(model.t_burn())?;
                walker
            };
            let mut out = OrbitIntegrals { int_u: Vec::new(), int_psi: Vec::new() };
            let (mut iu, mut ipsi, mut done) = (0.0, 0.0, 0.0);
            for &t in &plan.windows {
                let seg = walker.advance(t - done)?;
                iu += seg.int_u;
                ipsi += seg.int_psi;
                done = t;
                out.int_u.push(iu);
                out.int_psi.push(ipsi);
            }
            Ok(out)
        })
        .collect()
}

/// Least-squares fit of `a + b / T`; returns `a`.
pub fn extrapolate_inverse_t(windows: &[f64], values: &[f64]) -> f64 {
    let n = windows.len() as f64;
    let xs: Vec<f64> = windows.iter().map(|t| 1.0 / t).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = values.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    my - b * mx
}

/// Edge estimate of the orbit ensemble for band `k`.
pub fn grid_edges(integrals: &[OrbitIntegrals], windows: &[f64], v: &PotentialSpec, k: usize) -> EdgeEstimate {
    let coef = v.u_coefficient(k as f64);
    let mut window_max = Vec::with_capacity(windows.len());
    let mut window_min = Vec::with_capacity(windows.len());
    for (j, &t) in windows.iter().enumerate() {
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for o in integrals {
            let avg = v.c0 + (v.c1 * o.int_psi[j] + coef * o.int_u[j]) / t;
            hi = hi.max(avg);
            lo = lo.min(avg);
        }
        window_max.push(hi);
        window_min.push(lo);
    }
    let m = windows.len();
    let error = (window_max[m - 1] - window_max[m - 2])
        .abs()
        .max((window_min[m - 1] - window_min[m - 2]).abs());
    EdgeEstimate {
        gamma_minus: extrapolate_inverse_t(windows, &window_min),
        gamma_plus: extrapolate_inverse_t(windows, &window_max),
        error,
        n_orbits: integrals.len(),
        window_max,
        window_min,
    }
}

/// Edge estimate of the closed-geodesic ensemble for band `k`.
pub fn closed_edges(orbits: &[ClosedOrbit], v: &PotentialSpec, k: usize) -> EdgeEstimate {
    let coef = v.u_coefficient(k as f64);
    let (mut hi, mut lo, mut err) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    for o in orbits {
        let avg = v.c0 + v.c1 * o.mean_psi + coef * o.mean_u;
        hi = hi.max(avg);
        lo = lo.min(avg);
        err = err.max(v.c1.abs() * o.error_psi + coef.abs() * o.error_u);
    }
    EdgeEstimate {
        gamma_minus: lo,
        gamma_plus: hi,
        error: err,
        n_orbits: orbits.len(),
        window_max: Vec::new(),
        window_min: Vec::new(),
    }
}

/// Band edges for every `k` in `ks`, sharing one set of orbits.
pub fn band_edges_range(
    model: &FlowModel,
    v: &PotentialSpec,
    ks: &[usize],
    plan: &SamplingPlan,
) -> Result<Vec<BandEdges>> {
    plan.validate(model)?;
    model.check_horizon(model.t_burn() + plan.windows[plan.windows.len() - 1])?;
    let integrals = if plan.seeding != Seeding::ClosedGeodesics {
        Some(orbit_integrals(model, plan)?)
    } else {
        None
    };
    let closed = if plan.seeding != Seeding::Liouville {
        Some(closed_orbit_ensemble(model, plan.max_word_len, plan.n_words, plan.seed)?)
    } else {
        None
    };
    let horizon = plan.windows[plan.windows.len() - 1];
    Ok(ks
        .iter()
        .map(|&k| {
            let grid = integrals.as_ref().map(|ints| grid_edges(ints, &plan.windows, v, k));
            let closed = closed.as_ref().map(|orbits| closed_edges(orbits, v, k));
            let estimates: Vec<&EdgeEstimate> = grid.iter().chain(closed.iter()).collect();
            let gamma_plus = estimates.iter().map(|e| e.gamma_plus).fold(f64::NEG_INFINITY, f64::max);
            let gamma_minus = estimates.iter().map(|e| e.gamma_minus).fold(f64::INFINITY, f64::min);
            let extrapolation_error = grid.as_ref().map_or(0.0, |g| g.error);
            BandEdges {
                k,
                gamma_minus,
                gamma_plus,
                horizon,
                n_orbits: estimates.iter().map(|e| e.n_orbits).sum(),
                extrapolation_error,
                converged: extrapolation_error <= plan.tolerance,
                grid,
                closed,
            }
        })
        .collect())
}

/// Band edges `gamma_k^-`, `gamma_k^+`; `k = 0` gives the bound on the spectral gap.
pub fn band_edges(model: &FlowModel, v: &PotentialSpec, k: usize, plan: &SamplingPlan) -> Result<BandEdges> {
    Ok(band_edges_range(model, v, &[k], plan)?.remove(0))
}

/// True when both edges strictly decrease with `k` (beyond [`EDGE_TOL`]).
pub fn bands_are_ordered(edges: &[BandEdges]) -> bool {
    edges.windows(2).all(|w| {
        w[1].gamma_plus < w[0].gamma_plus - EDGE_TOL && w[1].gamma_minus < w[0].gamma_minus - EDGE_TOL
    })
}

/// Liouville average of the damping `D = V - u/2`.
pub fn damping_average(model: &FlowModel, v: &PotentialSpec, n_samples: usize, seed: u64) -> Result<Estimate> {
    if model.is_group_model() {
        let u = model.time_scale();
        return Ok(space_average(model, |p| v.band_integrand(model.psi(p.w), u, 0.0), n_samples, seed));
    }
    let failure = std::sync::Mutex::new(None);
    let est = space_average(
        model,
        |p| match crate::riccati::unstable_riccati(model, p) {
            Ok(u) => v.band_integrand(model.psi(p.w), u, 0.0),
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                f64::NAN
            }
        },
        n_samples,
        seed,
    );
    match failure.into_inner().expect("poisoned") {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelConfig};
    use approx::assert_abs_diff_eq;

    #[test]
    fn extrapolation_is_exact_for_inverse_t_data() {
        let w = [50.0, 100.0, 200.0];
        let vals: Vec<f64> = w.iter().map(|t| -0.3 + 2.0 / t).collect();
        assert_abs_diff_eq!(extrapolate_inverse_t(&w, &vals), -0.3, epsilon = 1e-14);
    }

    #[test]
    fn constant_observable_average() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let p = PhasePoint::new(crate::hyperbolic::C64::new(0.1, -0.3), 0.4);
        assert_abs_diff_eq!(birkhoff_average(&m, |_| 3.0, &p, 7.3).unwrap(), 3.0, epsilon = 1e-13);
        let d = birkhoff_average(&m, |s| PotentialSpec::zero().band_integrand(s.psi, s.u, 0.0), &p, 5.0).unwrap();
        assert_abs_diff_eq!(d, -0.5, epsilon = 1e-13);
    }

    #[test]
    fn plan_validation() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let plan = SamplingPlan { windows: vec![10.0, 100.0], ..SamplingPlan::default() };
        assert_eq!(plan.validate(&m).unwrap_err().kind(), "config");
    }
}
