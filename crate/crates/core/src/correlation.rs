//! Observables on the unit tangent bundle and Monte Carlo correlation functions
//! `C(t) = int u * (v o phi_{-t}) dmu`.

use crate::error::{Error, Result};
use crate::flow::FlowState;
use crate::hyperbolic::C64;
use crate::liouville::{sample_liouville, sample_rng};
use crate::model::{FlowModel, POLYGON_QUADRATURE};
use crate::phase::PhasePoint;
use crate::profile::PoincareBump;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Samples handled by one unit of parallel work. Partial sums are merged in
/// chunk order, so results do not depend on the thread count.
pub const CHUNK: usize = 1024;

/// Bump terms below `e^{-OBSERVABLE_CUT}` (about 1e-11) are dropped from observables.
const OBSERVABLE_CUT: f64 = 25.0;

/// Textual description of an observable.
///
/// | text | observable |
/// |---|---|
/// | `const:c` | the constant `c` |
/// | `bump:x,y,s` | Poincaré series of a Gaussian bump of width `s` at `x + iy` |
/// | `bump0:x,y,s` | the same bump minus its Liouville mean |
/// | `dbump:x,y,s` | derivative of the bump along the flow (mean zero) |
/// | `psi` / `psi0` | the conformal factor, raw or centred |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ObservableSpec {
    Constant(f64),
    Bump { center: [f64; 2], width: f64, centered: bool },
    BumpDerivative { center: [f64; 2], width: f64 },
    Psi { centered: bool },
}

impl ObservableSpec {
    /// Default mean-zero observable: the centred bump at the origin.
    pub fn default_bump() -> Self {
        ObservableSpec::Bump { center: [0.0, 0.0], width: 0.5, centered: true }
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableSpec::Constant(c) => write!(f, "const:{c}"),
            ObservableSpec::Bump { center, width, centered } => {
                let name = if *centered { "bump0" } else { "bump" };
                write!(f, "{name}:{},{},{}", center[0], center[1], width)
            }
            ObservableSpec::BumpDerivative { center, width } => {
                write!(f, "dbump:{},{},{}", center[0], center[1], width)
            }
            ObservableSpec::Psi { centered } => f.write_str(if *centered { "psi0" } else { "psi" }),
        }
    }
}

impl FromStr for ObservableSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("cannot parse observable {s:?}"));
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|a| a.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?
        };
        let bump_args = || -> Result<([f64; 2], f64)> {
            match nums.as_slice() {
                [x, y, w] if *w > 0.0 && x * x + y * y < 1.0 => Ok(([*x, *y], *w)),
                _ => Err(bad()),
            }
        };
        match (name.trim(), nums.len()) {
            ("const", 1) => Ok(ObservableSpec::Constant(nums[0])),
            ("bump", _) => bump_args().map(|(center, width)| ObservableSpec::Bump { center, width, centered: false }),
            ("bump0", _) => bump_args().map(|(center, width)| ObservableSpec::Bump { center, width, centered: true }),
            ("dbump", _) => bump_args().map(|(center, width)| ObservableSpec::BumpDerivative { center, width }),
            ("psi", 0) => Ok(ObservableSpec::Psi { centered: false }),
            ("psi0", 0) => Ok(ObservableSpec::Psi { centered: true }),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for ObservableSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ObservableSpec> for String {
    fn from(o: ObservableSpec) -> String {
        o.to_string()
    }
}

#[derive(Clone, Debug)]
enum Kernel {
    Constant(f64),
    Bump(PoincareBump),
    BumpDerivative(PoincareBump),
    Psi,
}

/// An observable bound to a model, ready for evaluation on the polygon.
#[derive(Clone, Debug)]
pub struct Observable {
    spec: ObservableSpec,
    kernel: Kernel,
    shift: f64,
}

impl Observable {
    pub fn new(model: &FlowModel, spec: &ObservableSpec) -> Self {
        let depth = model.config().depth;
        let make = |c: &[f64; 2], w: f64| {
            PoincareBump::with_cut(model.group(), C64::new(c[0], c[1]), w, depth, OBSERVABLE_CUT)
        };
        let kernel = match spec {
            ObservableSpec::Constant(c) => Kernel::Constant(*c),
            ObservableSpec::Bump { center, width, .. } => Kernel::Bump(make(center, *width)),
            ObservableSpec::BumpDerivative { center, width } => Kernel::BumpDerivative(make(center, *width)),
            ObservableSpec::Psi { .. } => Kernel::Psi,
        };
        let mut obs = Observable { spec: spec.clone(), kernel, shift: 0.0 };
        let centered = matches!(
            spec,
            ObservableSpec::Bump { centered: true, .. } | ObservableSpec::Psi { centered: true }
        );
        if centered {
            obs.shift = obs.base_mean(model);
        }
        obs
    }

    pub fn spec(&self) -> &ObservableSpec {
        &self.spec
    }

    /// Liouville mean of the base-point part, by quadrature on the polygon.
    fn base_mean(&self, model: &FlowModel) -> f64 {
        let f = |w: C64| match &self.kernel {
            Kernel::Bump(b) => b.value(w),
            Kernel::Psi => model.psi(w),
            _ => 0.0,
        };
        2.0 * PI * model.group().integrate(|w| f(w) * (2.0 * model.psi(w)).exp(), POLYGON_QUADRATURE)
            / model.volume()
    }

    /// Liouville mean `<f>`.
    pub fn mean(&self, model: &FlowModel) -> f64 {
        match &self.kernel {
            Kernel::Constant(c) => *c,
            Kernel::BumpDerivative(_) => 0.0,
            _ => self.base_mean(model) - self.shift,
        }
    }

    /// Value at a phase point of the fundamental polygon.
    #[inline]
    pub fn eval(&self, model: &FlowModel, p: &PhasePoint) -> f64 {
        match &self.kernel {
            Kernel::Constant(c) => *c,
            Kernel::Bump(b) => b.value(p.w) - self.shift,
            Kernel::Psi => model.psi(p.w) - self.shift,
            Kernel::BumpDerivative(b) => {
                let (_, grad) = b.value_grad(p.w);
                let speed = (-model.phi(p.w)).exp();
                speed * (grad.conj() * C64::from_polar(1.0, p.theta)).re
            }
        }
    }

    /// True when the value depends only on the base point.
    fn base_only(&self) -> bool {
        !matches!(self.kernel, Kernel::BumpDerivative(_))
    }
}

/// Correlation samples `C(m dt)`, `m = 0..N`, with Monte Carlo standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub dt: f64,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub u: String,
    pub v: String,
}

impl CorrelationSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|m| m as f64 * self.dt).collect()
    }
}

#[derive(Clone, Debug)]
struct Partial {
    w: f64,
    w2: f64,
    wx: Vec<f64>,
    w2x: Vec<f64>,
    w2x2: Vec<f64>,
}

impl Partial {
    fn new(n: usize) -> Self {
        Partial { w: 0.0, w2: 0.0, wx: vec![0.0; n], w2x: vec![0.0; n], w2x2: vec![0.0; n] }
    }

    fn merge(&mut self, o: &Partial) {
        self.w += o.w;
        self.w2 += o.w2;
        for m in 0..self.wx.len() {
            self.wx[m] += o.wx[m];
            self.w2x[m] += o.w2x[m];
            self.w2x2[m] += o.w2x2[m];
        }
    }
}

/// Backward sampling path `phi_{-m dt}(p)` evaluated through `v`.
fn backward_path(model: &FlowModel, v: &Observable, p: &PhasePoint, dt: f64, out: &mut [f64]) -> Result<()> {
    let (steps, step, rem) = if model.is_group_model() {
        let sub = (dt * model.time_scale() / 0.5).ceil().max(1.0) as usize;
        (sub, dt / sub as f64, 0.0)
    } else {
        let (n, rem) = FlowModel::step_plan(dt, model.h());
        (n, model.h(), rem)
    };
    let mut s = model.lift(p);
    let mut elapsed = 0.0;
    out[0] = v.eval(model, p);
    for slot in out.iter_mut().skip(1) {
        for _ in 0..steps {
            model.advance(&mut s, -step, elapsed)?;
            elapsed -= step;
        }
        if rem > 0.0 {
            model.advance(&mut s, -rem, elapsed)?;
            elapsed -= rem;
        }
        let q = match (&s, v.base_only()) {
            (FlowState::Group(g), true) => {
                PhasePoint { w: crate::hyperbolic::upper_to_disk(g.act(crate::hyperbolic::I)), theta: 0.0 }
            }
            _ => model.project(&s),
        };
        *slot = v.eval(model, &q);
    }
    Ok(())
}

/// `C(m dt) = Vol * E[u(p) v(phi_{-m dt} p)]` over `n_samples` Liouville samples.
pub fn correlation_series(
    model: &FlowModel,
    u: &ObservableSpec,
    v: &ObservableSpec,
    dt: f64,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> Result<CorrelationSeries> {
    use rayon::prelude::*;
    if !(dt > 0.0) || n == 0 || n_samples == 0 {
        return Err(Error::Input("dt, n and n_samples must be positive".into()));
    }
    model.check_horizon(dt * (n - 1) as f64)?;
    if !model.is_group_model() {
        let ratio = dt / model.h();
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::Input(format!("dt = {dt} is not a multiple of h = {}", model.h())));
        }
    }
    let uo = Observable::new(model, u);
    let vo = Observable::new(model, v);
    let n_chunks = n_samples.div_ceil(CHUNK);
    let partials: Vec<Partial> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Partial> {
            let mut acc = Partial::new(n);
            let mut path = vec![0.0; n];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                let s = sample_liouville(model, &mut sample_rng(seed, i as u64));
                let a = uo.eval(model, &s.point);
                backward_path(model, &vo, &s.point, dt, &mut path)?;
                let w = s.weight;
                acc.w += w;
                acc.w2 += w * w;
                for m in 0..n {
                    let x = a * path[m];
                    acc.wx[m] += w * x;
                    acc.w2x[m] += w * w * x;
                    acc.w2x2[m] += w * w * x * x;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = Partial::new(n);
    for p in &partials {
        total.merge(p);
    }
    let vol = model.volume();
    let mut values = Vec::with_capacity(n);
    let mut stderr = Vec::with_capacity(n);
    let corr = if n_samples > 1 { n_samples as f64 / (n_samples - 1) as f64 } else { 0.0 };
    for m in 0..n {
        let mean = total.wx[m] / total.w;
        let ss = total.w2x2[m] - 2.0 * mean * total.w2x[m] + mean * mean * total.w2;
        values.push(vol * mean);
        stderr.push(vol * (ss.max(0.0) * corr).sqrt() / total.w);
    }
    Ok(CorrelationSeries { dt, values, stderr, n_samples, u: u.to_string(), v: v.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelConfig};

    #[test]
    fn spec_text_round_trip() {
        for text in ["const:1.5", "bump:0.1,-0.2,0.5", "bump0:0,0,0.4", "dbump:0,0.3,0.6", "psi", "psi0"] {
            let s: ObservableSpec = text.parse().unwrap();
            let back: ObservableSpec = s.to_string().parse().unwrap();
            assert_eq!(s, back);
        }
        for bad in ["bump:0,0", "bump:2,0,0.5", "const", "cos", "bump:0,0,-1"] {
            assert!(bad.parse::<ObservableSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn constants_correlate_to_volume() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let c = ObservableSpec::Constant(1.0);
        let s = correlation_series(&m, &c, &c, 0.1, 5, 50, 3).unwrap();
        for x in &s.values {
            assert!((x - m.volume()).abs() < 1e-9 * m.volume());
        }
    }

    #[test]
    fn centred_bump_has_zero_mean() {
        let m = build_model(&ModelConfig::constant_curvature()).unwrap();
        let o = Observable::new(&m, &ObservableSpec::default_bump());
        assert!(o.mean(&m).abs() < 1e-12);
        let raw = Observable::new(&m, &ObservableSpec::Bump { center: [0.0, 0.0], width: 0.5, centered: false });
        // Unfolding: the mean is 2 pi sigma^2 / area.
        let unfolded = 2.0 * PI * 0.25 / m.area();
        assert!((raw.mean(&m) - unfolded).abs() < 1e-6, "{} {}", raw.mean(&m), unfolded);
    }
}
