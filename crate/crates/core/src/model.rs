//! Flow models: the geodesic flow of a hyperbolic genus-2 surface, possibly
//! with a conformally perturbed metric `e^{2 psi} g_hyp`.

use crate::anosov::{verify_anosov, AnosovReport};
use crate::error::{Error, Result};
use crate::group::FuchsianGroup;
use crate::hyperbolic::{Sl2, C64};
use crate::profile::{ConformalProfile, PoincareBump};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Tolerance for the group invariance of `psi`.
pub const INVARIANCE_TOL: f64 = 1e-8;

/// Quadrature order used for integrals over the fundamental polygon.
pub(crate) const POLYGON_QUADRATURE: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ConstantCurvature,
    ConformalPerturbation,
}

/// Model configuration. Every field has a default, so an empty document
/// describes the constant-curvature Bolza surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Group preset name; only `"bolza"` ships. Ignored when `generators` is set.
    pub group: String,
    /// Custom generators `[a, b, c, d]`; their inverses complete the side pairings.
    pub generators: Option<Vec<[f64; 4]>>,
    /// Amplitude of the bump perturbation of `psi`.
    pub epsilon: f64,
    /// Width `sigma` of the bump profile.
    pub bump_width: f64,
    /// Centre of the bump, in disk coordinates.
    pub bump_center: [f64; 2],
    /// Word length of the truncated Poincaré series.
    pub depth: usize,
    /// Constant added to `psi`.
    pub psi_offset: f64,
    /// Integrator step for perturbed models.
    pub h: f64,
    /// Quadrature step along orbits of constant-curvature models.
    pub group_step: f64,
    /// Riccati burn-in time.
    pub t_burn: f64,
    /// Largest flow time accepted by [`FlowModel::flow_map`].
    pub horizon: f64,
    /// Seed for the validation samples drawn by `build_model`.
    pub validation_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::ConstantCurvature,
            group: "bolza".into(),
            generators: None,
            epsilon: 0.0,
            bump_width: 0.5,
            bump_center: [0.0, 0.0],
            depth: 3,
            psi_offset: 0.0,
            h: 1e-3,
            group_step: 1e-2,
            t_burn: 20.0,
            horizon: 1e4,
            validation_seed: 0x5eed,
        }
    }
}

impl ModelConfig {
    pub fn constant_curvature() -> Self {
        Self::default()
    }

    pub fn perturbed(epsilon: f64) -> Self {
        ModelConfig { kind: ModelKind::ConformalPerturbation, epsilon, ..Self::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("bump_width", self.bump_width),
            ("h", self.h),
            ("group_step", self.group_step),
            ("t_burn", self.t_burn),
            ("horizon", self.horizon),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if !self.psi_offset.is_finite() {
            return Err(Error::Config("psi_offset must be finite".into()));
        }
        if self.kind == ModelKind::ConstantCurvature && (self.epsilon != 0.0 || self.psi_offset != 0.0) {
            return Err(Error::Config(
                "constant_curvature requires epsilon = 0 and psi_offset = 0".into(),
            ));
        }
        let c = C64::new(self.bump_center[0], self.bump_center[1]);
        if c.norm() >= 1.0 {
            return Err(Error::Config("bump_center must lie inside the unit disk".into()));
        }
        Ok(())
    }
}

/// A validated, immutable flow model.
#[derive(Clone, Debug)]
pub struct FlowModel {
    config: ModelConfig,
    group: FuchsianGroup,
    profile: ConformalProfile,
    volume: f64,
}

/// Builds and validates a model: generator determinants, invariance of
/// `psi`, negativity of the curvature on a grid, and a short Anosov check.
pub fn build_model(config: &ModelConfig) -> Result<FlowModel> {
    let model = FlowModel::assemble(config)?;
    let residual = model.invariance_residual(1000);
    if residual > INVARIANCE_TOL {
        return Err(Error::NotInvariant { residual, tol: INVARIANCE_TOL });
    }
    let (k_max, at) = model.curvature_scan(48, 96);
    if k_max >= 0.0 {
        return Err(Error::NotAnosov(format!(
            "curvature {k_max:.6} >= 0 at w = ({:.6}, {:.6})",
            at.re, at.im
        )));
    }
    if !model.is_group_model() {
        let report: AnosovReport = verify_anosov(&model, 8, 1.0, config.validation_seed);
        if !report.passed() {
            return Err(Error::NotAnosov(report.summary()));
        }
    }
    Ok(model)
}

impl FlowModel {
    /// Assembles a model after checking the configuration and the group, but
    /// without the invariance, curvature and Anosov checks of [`build_model`].
    pub fn assemble(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let group = match &config.generators {
            Some(gens) => {
                FuchsianGroup::from_generators("custom", gens.iter().map(|m| Sl2::from_array(*m)).collect())?
            }
            None => match config.group.as_str() {
                "bolza" => FuchsianGroup::bolza(),
                other => return Err(Error::Config(format!("unknown group preset {other:?}"))),
            },
        };
        let bump = if config.epsilon > 0.0 {
            let center = C64::new(config.bump_center[0], config.bump_center[1]);
            Some(PoincareBump::new(&group, center, config.bump_width, config.depth))
        } else {
            None
        };
        let profile = ConformalProfile { offset: config.psi_offset, amplitude: config.epsilon, bump };
        let mut model = FlowModel { config: config.clone(), group, profile, volume: 0.0 };
        model.volume = 2.0 * PI * model.group.integrate(|w| (2.0 * model.psi(w)).exp(), POLYGON_QUADRATURE);
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn group(&self) -> &FuchsianGroup {
        &self.group
    }

    pub fn profile(&self) -> &ConformalProfile {
        &self.profile
    }

    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    pub fn h(&self) -> f64 {
        self.config.h
    }

    pub fn t_burn(&self) -> f64 {
        self.config.t_burn
    }

    pub fn horizon(&self) -> f64 {
        self.config.horizon
    }

    /// True when `psi` is constant, so the flow is the (time-rescaled) group flow.
    pub fn is_group_model(&self) -> bool {
        self.profile.is_constant()
    }

    /// Hyperbolic distance travelled per unit model time, `e^{-psi}`, for group models.
    pub fn time_scale(&self) -> f64 {
        (-self.profile.offset).exp()
    }

    /// Step used for quadrature along orbits.
    pub fn quadrature_step(&self) -> f64 {
        if self.is_group_model() {
            self.config.group_step
        } else {
            self.config.h
        }
    }

    /// Riemannian volume of the unit tangent bundle, `2 pi * Area`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Area of the surface in the model metric.
    pub fn area(&self) -> f64 {
        self.volume / (2.0 * PI)
    }

    #[inline]
    pub fn psi(&self, w: C64) -> f64 {
        self.profile.value(w)
    }

    /// `psi` at an arbitrary disk point (reduced into the polygon first).
    pub fn psi_anywhere(&self, w: C64) -> f64 {
        match self.group.reduce(w, usize::MAX) {
            Some((r, _, _)) => self.psi(r),
            None => self.psi(w),
        }
    }

    /// Gaussian curvature of `e^{2 psi} g_hyp` at a point of the polygon.
    pub fn gaussian_curvature(&self, w: C64) -> f64 {
        self.profile.curvature(w)
    }

    pub(crate) fn check_horizon(&self, t: f64) -> Result<()> {
        if t.abs() > self.config.horizon {
            return Err(Error::HorizonExceeded { t, horizon: self.config.horizon });
        }
        Ok(())
    }

    /// Largest `|psi(z) - psi(g z)|` over random points of the polygon and all
    /// side pairings, using the full (unpruned) series.
    pub fn invariance_residual(&self, n_points: usize) -> f64 {
        if self.profile.is_constant() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.validation_seed);
        let mut worst: f64 = 0.0;
        for _ in 0..n_points {
            let z = self.group.sample_uniform(&mut rng);
            let base = self.profile.raw_value(z);
            for p in self.group.pairings() {
                let moved = self.profile.raw_value(p.disk.act(z));
                worst = worst.max((moved - base).abs());
            }
        }
        worst
    }

    /// Maximum curvature over a polar grid of the polygon, and where it occurs.
    pub fn curvature_scan(&self, n_radial: usize, n_angular: usize) -> (f64, C64) {
        let r_max = self.group.circumradius();
        let mut best = (self.gaussian_curvature(C64::new(0.0, 0.0)), C64::new(0.0, 0.0));
        let points = (1..=n_radial).flat_map(|i| {
            let r = r_max * i as f64 / n_radial as f64;
            (0..n_angular).map(move |j| crate::hyperbolic::disk_point_polar(r, 2.0 * PI * j as f64 / n_angular as f64))
        });
        for w in points.chain(self.group.vertices().iter().copied()) {
            if !self.group.contains(w) && !self.group.vertices().contains(&w) {
                continue;
            }
            let k = self.gaussian_curvature(w);
            if k > best.0 {
                best = (k, w);
            }
        }
        best
    }

    /// Conformal factor of the disk metric `e^{2 phi} |dw|^2` and its gradient.
    #[inline]
    pub(crate) fn phi_grad(&self, w: C64) -> (f64, C64) {
        let (psi, grad) = self.profile.value_grad(w);
        let q = 1.0 - w.norm_sqr();
        (psi + std::f64::consts::LN_2 - q.ln(), grad + w * (2.0 / q))
    }

    #[inline]
    pub(crate) fn phi(&self, w: C64) -> f64 {
        self.psi(w) + std::f64::consts::LN_2 - (1.0 - w.norm_sqr()).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_curvature_preset() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        assert!(m.is_group_model());
        assert_eq!(m.psi(C64::new(0.3, 0.1)), 0.0);
        assert_eq!(m.gaussian_curvature(C64::new(0.3, 0.1)), -1.0);
        assert_abs_diff_eq!(m.volume(), 8.0 * PI * PI, epsilon = 1e-9);
    }

    #[test]
    fn perturbed_model_is_invariant_and_negatively_curved() {
        let m = build_model(&ModelConfig::perturbed(0.05)).unwrap();
        assert!(m.invariance_residual(1000) < INVARIANCE_TOL);
        let (k_max, _) = m.curvature_scan(24, 48);
        assert!(k_max < 0.0);
    }

    #[test]
    fn large_bump_is_rejected() {
        let err = build_model(&ModelConfig::perturbed(0.5)).unwrap_err();
        assert_eq!(err.kind(), "not_anosov");
    }

    #[test]
    fn constant_curvature_rejects_perturbation() {
        let cfg = ModelConfig { epsilon: 0.1, ..ModelConfig::constant_curvature() };
        assert_eq!(build_model(&cfg).unwrap_err().kind(), "config");
    }

    #[test]
    fn empty_toml_is_the_default() {
        assert_eq!(ModelConfig::from_toml_str("").unwrap(), ModelConfig::default());
        let cfg = ModelConfig::from_toml_str("kind = \"conformal_perturbation\"\nepsilon = 0.05\n").unwrap();
        assert_eq!(cfg.kind, ModelKind::ConformalPerturbation);
    }
}
