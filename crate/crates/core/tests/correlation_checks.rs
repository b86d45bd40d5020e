use proptest::prelude::*;
use ruelle_bands::correlation::{correlation_series, Observable, ObservableSpec};
use ruelle_bands::inversion::{harmonic_inversion, linear_fit, signal_length};
use ruelle_bands::liouville::space_average;
use ruelle_bands::model::{build_model, FlowModel, ModelConfig};
use std::sync::OnceLock;

fn constant() -> &'static FlowModel {
    static MODEL: OnceLock<FlowModel> = OnceLock::new();
    MODEL.get_or_init(|| build_model(&ModelConfig::constant_curvature()).unwrap())
}

fn bump0(width: f64) -> ObservableSpec {
    ObservableSpec::Bump { center: [0.0, 0.0], width, centered: true }
}

#[test]
fn unit_second_observable_gives_a_flat_series() {
    let m = build_model(&ModelConfig::perturbed(0.05)).unwrap();
    let u = ObservableSpec::Bump { center: [0.1, 0.0], width: 0.7, centered: false };
    let s = correlation_series(&m, &u, &ObservableSpec::Constant(1.0), 0.25, 8, 500, 3).unwrap();
    assert!(s.values.iter().all(|c| *c == s.values[0]));
}

#[test]
fn equal_time_value_matches_an_independent_space_average() {
    let m = constant();
    let u = bump0(0.8);
    let v = ObservableSpec::Bump { center: [0.3, -0.2], width: 0.6, centered: false };
    let s = correlation_series(m, &u, &v, 0.1, 1, 20_000, 1).unwrap();
    let (uo, vo) = (Observable::new(m, &u), Observable::new(m, &v));
    let avg = space_average(m, |p| uo.eval(m, p) * vo.eval(m, p), 20_000, 2);
    let expected = m.volume() * avg.mean;
    let tol = 4.0 * (s.stderr[0].powi(2) + (m.volume() * avg.stderr).powi(2)).sqrt();
    assert!((s.values[0] - expected).abs() < tol, "{} vs {expected} (tolerance {tol})", s.values[0]);
}

#[test]
fn envelope_decays_at_the_first_band_rate() {
    let m = constant();
    let s = correlation_series(m, &bump0(0.8), &bump0(0.8), 0.1, 200, 30_000, 5).unwrap();
    let n = signal_length(&s.values, &s.stderr, 4.0);
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    for i in 1..n - 1 {
        let a = s.values[i].abs();
        if a >= s.values[i - 1].abs() && a >= s.values[i + 1].abs() && a > 4.0 * s.stderr[i] {
            ts.push(i as f64 * s.dt);
            ys.push(a.ln());
        }
    }
    assert!(ts.len() >= 3, "only {} envelope peaks above noise", ts.len());
    let (rate, _, _) = linear_fit(&ts, &ys);
    assert!((-0.6..=-0.4).contains(&rate), "envelope rate {rate}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn real_series_give_conjugate_modes(
        pairs in prop::collection::vec((-0.5..-0.01f64, 0.2..3.0f64, 0.1..2.0f64, -3.0..3.0f64), 1..4),
        real in prop::option::of((-0.5..-0.01f64, 0.1..1.0f64)),
        noise in 0.0..0.01f64,
    ) {
        let dt = 0.05;
        let values: Vec<f64> = (0..400)
            .map(|m| {
                let t = m as f64 * dt;
                let osc: f64 = pairs.iter().map(|&(re, im, a, ph)| 2.0 * a * (re * t).exp() * (im * t + ph).cos()).sum();
                let mono = real.map_or(0.0, |(re, a)| a * (re * t).exp());
                osc + mono + noise * ((m * 7919 % 113) as f64 / 56.0 - 1.0)
            })
            .collect();
        let set = harmonic_inversion(&values, dt, 12, 1e-3).unwrap();
        for mode in &set.modes {
            if mode.z.im.abs() < 1e-8 {
                continue;
            }
            // A negative real pencil eigenvalue sits on the Nyquist line and is its own alias.
            if (mode.z.im.abs() - std::f64::consts::PI / dt).abs() < 1e-8 {
                prop_assert!(set.aliasing_warning);
                continue;
            }
            let partner = set.modes.iter().any(|o| (o.z - mode.z.conj()).norm() < 1e-8);
            prop_assert!(partner, "{:?} has no conjugate", mode.z);
            let twin = set.modes.iter().find(|o| (o.z - mode.z.conj()).norm() < 1e-8).unwrap();
            prop_assert!((twin.amplitude - mode.amplitude.conj()).norm() < 1e-8 * (1.0 + mode.amplitude.norm()));
        }
    }
}
