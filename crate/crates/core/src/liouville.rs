//! Sampling the Liouville measure and Monte Carlo space averages.

use crate::model::FlowModel;
use crate::phase::PhasePoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Liouville sample: a phase point with its importance weight `e^{2 psi}`.
#[derive(Clone, Copy, Debug)]
pub struct WeightedPoint {
    pub point: PhasePoint,
    pub weight: f64,
}

/// Draws a point uniform for hyperbolic area times angle, with the weight
/// that turns it into a sample of the model Liouville measure.
pub fn sample_liouville<R: Rng>(model: &FlowModel, rng: &mut R) -> WeightedPoint {
    let w = model.group().sample_uniform(rng);
    let theta = rng.random::<f64>() * TAU;
    let weight = if model.profile().is_constant() { 1.0 } else { (2.0 * model.psi(w)).exp() };
    WeightedPoint { point: PhasePoint::new(w, theta), weight }
}

/// Independent random stream for sample `index` of a run seeded by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` Liouville samples, sample `i` drawn from stream `i`.
pub fn liouville_samples(model: &FlowModel, n: usize, seed: u64) -> Vec<WeightedPoint> {
    (0..n as u64).map(|i| sample_liouville(model, &mut sample_rng(seed, i))).collect()
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Self-normalised weighted mean of `values` with a delta-method standard error.
pub fn weighted_mean(values: &[f64], weights: &[f64]) -> Estimate {
    let n = values.len();
    let wsum: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / wsum;
    let var = if n > 1 {
        let s: f64 = values.iter().zip(weights).map(|(v, w)| (w * (v - mean)).powi(2)).sum();
        s / (wsum * wsum) * n as f64 / (n - 1) as f64
    } else {
        0.0
    };
    Estimate { mean, stderr: var.sqrt(), n_samples: n }
}

/// Liouville average `<f>` of an observable over `n_samples` random points.
pub fn space_average<F>(model: &FlowModel, f: F, n_samples: usize, seed: u64) -> Estimate
where
    F: Fn(&PhasePoint) -> f64 + Sync,
{
    use rayon::prelude::*;
    let pairs: Vec<(f64, f64)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = sample_liouville(model, &mut sample_rng(seed, i));
            (f(&s.point), s.weight)
        })
        .collect();
    let (values, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    weighted_mean(&values, &weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn constant_observable_is_exact() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let est = space_average(&m, |_| 2.5, 100, 1);
        assert_eq!(est.mean, 2.5);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn streams_are_reproducible() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let a = liouville_samples(&m, 5, 9);
        let b = liouville_samples(&m, 5, 9);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.point, y.point);
        }
    }
}
