//! Integration of the geodesic flow.
//!
//! Group models move the matrix representative by right multiplication.
//! Perturbed models integrate Hamilton's equations for
//! `H(w, p) = e^{-2 phi(w)} |p|^2 / 2` in disk coordinates (with `e^{2 phi}` the
//! full conformal factor of the disk metric) by the implicit midpoint rule.
//! After every step the momentum is rescaled onto the unit energy shell and
//! the base point is pulled back into the fundamental polygon.

use crate::error::{Error, Result};
use crate::hyperbolic::{upper_to_disk, Sl2, C64, I};
use crate::model::FlowModel;
use crate::phase::PhasePoint;

/// Side pairings allowed per integration step before the step is declared too large.
pub const MAX_PAIRINGS_PER_STEP: usize = 3;

/// Largest piece of hyperbolic time applied to a matrix representative at once.
const GROUP_CHUNK: f64 = 0.5;

const MIDPOINT_MAX_ITER: usize = 50;

/// Internal integration state.
#[derive(Clone, Copy, Debug)]
pub(crate) enum FlowState {
    Group(Sl2),
    Cotangent { w: C64, p: C64 },
}

/// Geometry of one perturbed step, in the chart where it started.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StepGeometry {
    pub w0: C64,
    pub v0: C64,
    pub w1: C64,
    pub v1: C64,
}

impl StepGeometry {
    /// Cubic Hermite interpolant of the base point at the middle of the step.
    #[inline]
    pub fn midpoint(&self, dt: f64) -> C64 {
        (self.w0 + self.w1) * 0.5 + (self.v0 - self.v1) * (dt / 8.0)
    }
}

impl FlowModel {
    pub(crate) fn lift(&self, p: &PhasePoint) -> FlowState {
        if self.is_group_model() {
            FlowState::Group(p.to_matrix())
        } else {
            let phi = self.phi(p.w);
            FlowState::Cotangent { w: p.w, p: C64::from_polar(phi.exp(), p.theta) }
        }
    }

    pub(crate) fn project(&self, s: &FlowState) -> PhasePoint {
        match s {
            FlowState::Group(g) => PhasePoint::from_matrix(g),
            FlowState::Cotangent { w, p } => PhasePoint::new(*w, p.arg()),
        }
    }

    /// Reduces a phase point into the fundamental polygon.
    pub fn normalize(&self, p: &PhasePoint) -> Result<PhasePoint> {
        match self.group().reduce(p.w, usize::MAX) {
            Some((w, map, moves)) if moves > 0 => {
                Ok(PhasePoint::new(w, p.theta + map.derivative(p.w).arg()))
            }
            Some(_) => Ok(*p),
            None => Err(Error::Input("point could not be reduced".into())),
        }
    }

    /// Hamiltonian `e^{-2 phi} |p|^2 / 2`; equal to `1/2` on unit vectors.
    pub(crate) fn energy(&self, s: &FlowState) -> f64 {
        match s {
            FlowState::Group(_) => 0.5,
            FlowState::Cotangent { w, p } => 0.5 * (-2.0 * self.phi(*w)).exp() * p.norm_sqr(),
        }
    }

    #[inline]
    fn rhs(&self, w: C64, p: C64) -> (C64, C64) {
        let (phi, grad) = self.phi_grad(w);
        let e = (-2.0 * phi).exp();
        (p * e, grad * (p.norm_sqr() * e))
    }

    /// Advances the state by `dt` (either sign). Returns the step geometry for
    /// perturbed models. `t` is only used for error reporting.
    pub(crate) fn advance(&self, s: &mut FlowState, dt: f64, t: f64) -> Result<Option<StepGeometry>> {
        match s {
            FlowState::Group(g) => {
                let moved = *g * Sl2::geodesic(self.time_scale() * dt);
                let w = upper_to_disk(moved.act(I));
                *g = if self.group().contains(w) {
                    moved
                } else {
                    let (_, gamma, _) = self
                        .group()
                        .reduce_matrix(w, 4 * MAX_PAIRINGS_PER_STEP)
                        .ok_or(Error::StepTooLarge { t })?;
                    (gamma * moved).normalized()
                };
                Ok(None)
            }
            FlowState::Cotangent { w, p } => {
                let (w0, p0) = (*w, *p);
                let (dw0, dp0) = self.rhs(w0, p0);
                let mut w1 = w0 + dw0 * dt;
                let mut p1 = p0 + dp0 * dt;
                let scale = p0.norm();
                let mut last = f64::INFINITY;
                for _ in 0..MIDPOINT_MAX_ITER {
                    let (dw, dp) = self.rhs((w0 + w1) * 0.5, (p0 + p1) * 0.5);
                    let nw = w0 + dw * dt;
                    let np = p0 + dp * dt;
                    let delta = (nw - w1).norm() + (np - p1).norm() / scale;
                    w1 = nw;
                    p1 = np;
                    if delta < 1e-15 || delta >= last {
                        break;
                    }
                    last = delta;
                }
                if !(w1.norm() < 1.0) || !p1.re.is_finite() {
                    return Err(Error::StepTooLarge { t });
                }
                // Back onto the unit energy shell, so the state is a function of (w, theta).
                let phi1 = self.phi(w1);
                let p1 = p1 * (phi1.exp() / p1.norm());
                let geometry = StepGeometry { w0, v0: dw0, w1, v1: p1 * (-2.0 * phi1).exp() };
                if self.group().contains(w1) {
                    *w = w1;
                    *p = p1;
                } else {
                    let (wr, map, _) = self
                        .group()
                        .reduce(w1, MAX_PAIRINGS_PER_STEP)
                        .ok_or(Error::StepTooLarge { t })?;
                    *w = wr;
                    *p = p1 / map.derivative(w1).conj();
                }
                Ok(Some(geometry))
            }
        }
    }

    /// Splits `|t|` into steps of size `step`: full steps followed by a remainder.
    pub(crate) fn step_plan(t: f64, step: f64) -> (usize, f64) {
        let ratio = t.abs() / step;
        let n = (ratio + 1e-9).floor();
        let rem = t.abs() - n * step;
        (n as usize, if rem > 1e-12 * step { rem } else { 0.0 })
    }

    /// The flow `phi_t(p)`, reduced to the fundamental polygon.
    pub fn flow_map(&self, p: &PhasePoint, t: f64) -> Result<PhasePoint> {
        self.check_horizon(t)?;
        if t == 0.0 {
            return Ok(*p);
        }
        let mut s = self.lift(p);
        let sign = t.signum();
        let step = if self.is_group_model() {
            t.abs() / (t.abs() / GROUP_CHUNK).ceil()
        } else {
            self.h()
        };
        let (n, rem) = Self::step_plan(t, step);
        let mut elapsed = 0.0;
        for _ in 0..n {
            self.advance(&mut s, sign * step, elapsed)?;
            elapsed += sign * step;
        }
        if rem > 0.0 {
            self.advance(&mut s, sign * rem, elapsed)?;
        }
        Ok(self.project(&s))
    }

    /// Orbit samples `phi_{m dt}(p)` for `m = 0..n`.
    pub fn orbit(&self, p: &PhasePoint, dt: f64, n: usize) -> Result<Vec<PhasePoint>> {
        self.check_horizon(dt * n as f64)?;
        let mut out = Vec::with_capacity(n + 1);
        let mut s = self.lift(p);
        out.push(*p);
        let sub = if self.is_group_model() {
            (dt.abs() / GROUP_CHUNK).ceil() as usize
        } else {
            0
        };
        let (steps, rem) = if self.is_group_model() {
            (sub, 0.0)
        } else {
            Self::step_plan(dt, self.h())
        };
        let sign = dt.signum();
        let step = if self.is_group_model() { dt.abs() / sub as f64 } else { self.h() };
        let mut elapsed = 0.0;
        for _ in 0..n {
            for _ in 0..steps {
                self.advance(&mut s, sign * step, elapsed)?;
                elapsed += sign * step;
            }
            if rem > 0.0 {
                self.advance(&mut s, sign * rem, elapsed)?;
                elapsed += sign * rem;
            }
            out.push(self.project(&s));
        }
        Ok(out)
    }
}
