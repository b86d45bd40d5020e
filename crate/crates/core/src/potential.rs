//! Potentials `V = c0 + c1 psi + c2 u / 2` and the damping function `D = V - u/2`.

use crate::error::Result;
use crate::model::FlowModel;
use crate::phase::PhasePoint;
use crate::riccati::unstable_riccati;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialSpec {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        PotentialSpec { c0: c, ..Self::default() }
    }

    /// `V = u/2`, for which the damping vanishes identically.
    pub fn half_expansion() -> Self {
        PotentialSpec { c2: 1.0, ..Self::default() }
    }

    /// True when the `u/2` term is present; `V` is then only Hölder continuous.
    pub fn c2_active(&self) -> bool {
        self.c2 != 0.0
    }

    /// `V` from precomputed `psi` and `u`.
    #[inline]
    pub fn value_from(&self, psi: f64, u: f64) -> f64 {
        self.c0 + self.c1 * psi + 0.5 * self.c2 * u
    }

    /// `D - k u` from precomputed `psi` and `u`.
    #[inline]
    pub fn band_integrand(&self, psi: f64, u: f64, k: f64) -> f64 {
        self.c0 + self.c1 * psi + (0.5 * (self.c2 - 1.0) - k) * u
    }

    /// Coefficient of `u` in `D - k u`.
    #[inline]
    pub fn u_coefficient(&self, k: f64) -> f64 {
        0.5 * (self.c2 - 1.0) - k
    }

    pub fn shifted(&self, c: f64) -> Self {
        PotentialSpec { c0: self.c0 + c, ..*self }
    }

    /// `V(p)`; `p` may lie outside the polygon.
    pub fn value(&self, model: &FlowModel, p: &PhasePoint) -> Result<f64> {
        let p = model.normalize(p)?;
        let u = if self.c2_active() { unstable_riccati(model, &p)? } else { 0.0 };
        Ok(self.value_from(model.psi(p.w), u))
    }
}

/// `V_0 = u/2`.
pub fn v0(model: &FlowModel, p: &PhasePoint) -> Result<f64> {
    Ok(0.5 * unstable_riccati(model, &model.normalize(p)?)?)
}

/// Damping `D(p) = V(p) - u(p)/2`.
pub fn damping(model: &FlowModel, v: &PotentialSpec, p: &PhasePoint) -> Result<f64> {
    let p = model.normalize(p)?;
    let u = unstable_riccati(model, &p)?;
    Ok(v.band_integrand(model.psi(p.w), u, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::C64;
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn constant_curvature_damping() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let p = PhasePoint::new(C64::new(0.2, 0.1), 1.0);
        assert_eq!(damping(&m, &PotentialSpec::zero(), &p).unwrap(), -0.5);
        assert_eq!(damping(&m, &PotentialSpec::half_expansion(), &p).unwrap(), 0.0);
        assert_eq!(damping(&m, &PotentialSpec::constant(0.75), &p).unwrap(), 0.25);
        assert_eq!(v0(&m, &p).unwrap(), 0.5);
    }
}
