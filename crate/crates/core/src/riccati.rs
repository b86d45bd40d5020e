//! The unstable Riccati solution `u` along orbits.
//!
//! On a surface, the expansion rate of the unstable bundle satisfies
//! `u' = -K - u^2` along the flow, and the unstable solution is the one that
//! attracts every positive solution started far enough in the past. Hence
//! `log |D phi_t restricted to E_u| = int_0^t u`.

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::model::FlowModel;
use crate::phase::PhasePoint;

/// `u` values beyond this are treated as blow-up.
const U_BLOWUP: f64 = 1e6;

/// Integrals of `u` and `psi` over one quadrature step or a longer stretch.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub int_u: f64,
    pub int_psi: f64,
}

impl Segment {
    fn add(&mut self, o: &Segment) {
        self.duration += o.duration;
        self.int_u += o.int_u;
        self.int_psi += o.int_psi;
    }
}

/// Curvature samples at the start, middle and end of a step.
#[derive(Clone, Copy, Debug)]
struct StepCurvature {
    k0: f64,
    k_mid: f64,
    k1: f64,
}

/// One RK4 step of `u' = -K - u^2` together with `int u`.
#[inline]
fn rk4(u: f64, dt: f64, k: &StepCurvature) -> (f64, f64) {
    let f = |kk: f64, uu: f64| -kk - uu * uu;
    let u1 = u;
    let a1 = f(k.k0, u1);
    let u2 = u + 0.5 * dt * a1;
    let a2 = f(k.k_mid, u2);
    let u3 = u + 0.5 * dt * a2;
    let a3 = f(k.k_mid, u3);
    let u4 = u + dt * a3;
    let a4 = f(k.k1, u4);
    let next = u + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    let integral = dt / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4);
    (next, integral)
}

fn check_u(u: f64, s: f64) -> Result<()> {
    if !(u > 0.0 && u < U_BLOWUP) {
        return Err(Error::RiccatiBreakdown { u, s });
    }
    Ok(())
}

/// A forward orbit carrying the Riccati variable `u`.
#[derive(Clone, Debug)]
pub struct OrbitWalker<'m> {
    model: &'m FlowModel,
    state: FlowState,
    time: f64,
    u: f64,
    k: f64,
    psi: f64,
}

impl<'m> OrbitWalker<'m> {
    /// Starts at `p` with the given initial value of `u`.
    pub fn new(model: &'m FlowModel, p: &PhasePoint, u0: f64) -> Self {
        let jet = model.profile().jet(p.w);
        OrbitWalker {
            model,
            state: model.lift(p),
            time: 0.0,
            u: u0,
            k: crate::profile::ConformalProfile::curvature_from_jet(&jet),
            psi: jet.value,
        }
    }

    /// Starts at `p` with `u` set to the unstable solution at `p`.
    pub fn start(model: &'m FlowModel, p: &PhasePoint) -> Result<Self> {
        let u = unstable_riccati(model, p)?;
        Ok(Self::new(model, p, u))
    }

    pub fn phase(&self) -> PhasePoint {
        self.model.project(&self.state)
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn curvature(&self) -> f64 {
        self.k
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Energy of the current state (`1/2` for an exact unit-speed orbit).
    pub fn energy(&self) -> f64 {
        self.model.energy(&self.state)
    }

    /// One step of length `dt > 0`.
    pub fn step(&mut self, dt: f64) -> Result<Segment> {
        let geometry = self.model.advance(&mut self.state, dt, self.time)?;
        let (k_mid, psi_mid, k1, psi1) = match geometry {
            None => (self.k, self.psi, self.k, self.psi),
            Some(g) => {
                let profile = self.model.profile();
                let mid = profile.jet(g.midpoint(dt));
                let end = match self.state {
                    FlowState::Cotangent { w, .. } => profile.jet(w),
                    FlowState::Group(_) => unreachable!("group states carry no step geometry"),
                };
                (
                    crate::profile::ConformalProfile::curvature_from_jet(&mid),
                    mid.value,
                    crate::profile::ConformalProfile::curvature_from_jet(&end),
                    end.value,
                )
            }
        };
        let (u1, int_u) = rk4(self.u, dt, &StepCurvature { k0: self.k, k_mid, k1 });
        let int_psi = dt / 6.0 * (self.psi + 4.0 * psi_mid + psi1);
        self.time += dt;
        check_u(u1, self.time)?;
        self.u = u1;
        self.k = k1;
        self.psi = psi1;
        Ok(Segment { duration: dt, int_u, int_psi })
    }

    /// Advances by `t >= 0` using the model quadrature step.
    pub fn advance(&mut self, t: f64) -> Result<Segment> {
        self.model.check_horizon(self.time + t)?;
        let step = self.model.quadrature_step();
        let (n, rem) = FlowModel::step_plan(t, step);
        let mut total = Segment::default();
        for _ in 0..n {
            total.add(&self.step(step)?);
        }
        if rem > 0.0 {
            total.add(&self.step(rem)?);
        }
        Ok(total)
    }
}

/// Unstable Riccati solution `u(p)`: integrates backwards over the burn-in
/// time, then runs the Riccati equation forward from `u = sqrt(-K)` at the
/// far end. Group models return `e^{-psi}` exactly.
pub fn unstable_riccati(model: &FlowModel, p: &PhasePoint) -> Result<f64> {
    if model.is_group_model() {
        return Ok(model.time_scale());
    }
    let h = model.h();
    let n = (model.t_burn() / h).ceil() as usize;
    let profile = model.profile();
    let mut state = model.lift(p);
    let mut k_later = model.gaussian_curvature(p.w);
    let mut steps = Vec::with_capacity(n);
    for i in 0..n {
        let g = model
            .advance(&mut state, -h, -(i as f64) * h)?
            .expect("perturbed models report step geometry");
        let k_mid = profile.curvature(g.midpoint(-h));
        let k_earlier = match state {
            FlowState::Cotangent { w, .. } => profile.curvature(w),
            FlowState::Group(_) => unreachable!(),
        };
        steps.push(StepCurvature { k0: k_earlier, k_mid, k1: k_later });
        k_later = k_earlier;
    }
    let mut u = (-k_later).max(1e-12).sqrt();
    for (i, step) in steps.iter().rev().enumerate() {
        u = rk4(u, h, step).0;
        check_u(u, -((n - i - 1) as f64) * h)?;
    }
    Ok(u)
}

/// Stable solution at `p`: minus the unstable solution of the reversed flow.
pub fn stable_riccati(model: &FlowModel, p: &PhasePoint) -> Result<f64> {
    Ok(-unstable_riccati(model, &p.flip())?)
}

/// `log |D phi_t restricted to E_u(p)| = int_0^t u(phi_s p) ds`.
pub fn unstable_jacobian_log(model: &FlowModel, p: &PhasePoint, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Input(format!("unstable_jacobian_log needs t >= 0, got {t}")));
    }
    model.check_horizon(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if model.is_group_model() {
        return Ok(model.time_scale() * t);
    }
    let mut walker = OrbitWalker::start(model, p)?;
    Ok(walker.advance(t)?.int_u)
}
