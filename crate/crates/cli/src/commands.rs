//! Pipelines behind the subcommands.

use crate::config::RunConfig;
use crate::meta::{emit, write_meta, Meta};
use crate::{Cli, Command, PlanArgs, PotentialArgs, SeedingArg};
use anyhow::{bail, Context, Result};
use ruelle_bands::anosov::verify_anosov;
use ruelle_bands::birkhoff::{band_edges_range, bands_are_ordered, damping_average, BandEdges, SamplingPlan, Seeding};
use ruelle_bands::correlation::{correlation_series, ObservableSpec};
use ruelle_bands::hyperbolic::C64;
use ruelle_bands::inversion::{harmonic_inversion, noise_energy, signal_length, significant_modes};
use ruelle_bands::io;
use ruelle_bands::liouville::{sample_liouville, sample_rng};
use ruelle_bands::model::{build_model, FlowModel};
use ruelle_bands::phase::PhasePoint;
use ruelle_bands::potential::PotentialSpec;
use ruelle_bands::resonances::{
    is_conjugation_closed, resonances_from_laplacian, synthetic_weyl_spectrum, BandLabel, LaplaceSpectrum,
    Provenance, Resonance,
};
use ruelle_bands::riccati::OrbitWalker;
use ruelle_bands::stats::{
    band_membership, concentration, geometric_ladder, label_bands, weyl_ladder, BandInterval, BandTestReport,
    ConcentrationReport, Membership, WeylFit, DEFAULT_C0,
};
use serde::Serialize;
use serde_json::json;
use std::path::Path;

struct Ctx<'a> {
    cli: &'a Cli,
    cfg: RunConfig,
}

impl Ctx<'_> {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.cli.global.quiet {
            eprintln!("ruelle: {}", msg.as_ref());
        }
    }

    fn seed(&self) -> u64 {
        self.cli.global.seed
    }

    fn out(&self) -> Option<&Path> {
        self.cli.global.out.as_deref()
    }

    fn meta(&self, command: &str, parameters: serde_json::Value) -> Meta {
        Meta::new(command, self.seed(), &self.cfg, parameters)
    }

    fn model(&self) -> Result<FlowModel> {
        self.note(format!("building model ({:?}, epsilon = {})", self.cfg.model.kind, self.cfg.model.epsilon));
        Ok(build_model(&self.cfg.model)?)
    }

    fn potential(&self, args: &PotentialArgs) -> PotentialSpec {
        let base = self.cfg.potential;
        PotentialSpec {
            c0: args.c0.unwrap_or(base.c0),
            c1: args.c1.unwrap_or(base.c1),
            c2: args.c2.unwrap_or(base.c2),
        }
    }

    fn plan(&self, args: &PlanArgs) -> SamplingPlan {
        let mut plan = self.cfg.plan.clone();
        if let Some(n) = args.n_orbits {
            plan.n_orbits = n;
        }
        if let Some(w) = &args.windows {
            plan.windows = w.clone();
        }
        if let Some(s) = args.seeding {
            plan.seeding = match s {
                SeedingArg::Liouville => Seeding::Liouville,
                SeedingArg::Closed => Seeding::ClosedGeodesics,
                SeedingArg::Both => Seeding::Both,
            };
        }
        if let Some(t) = args.tolerance {
            plan.tolerance = t;
        }
        if let Some(l) = args.max_word_len {
            plan.max_word_len = l;
        }
        if let Some(n) = args.n_words {
            plan.n_words = n;
        }
        plan.seed = self.seed();
        plan
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx { cli, cfg: RunConfig::load(cli.global.config.as_deref())? };
    match &cli.command {
        Command::BandEdges { k, k_max, potential, plan } => {
            let ks: Vec<usize> = match k_max {
                Some(m) if m < k => bail!("--k-max {m} is below --k {k}"),
                Some(m) => (*k..=*m).collect(),
                None => vec![*k],
            };
            band_edges_cmd(&ctx, &ks, potential, plan)
        }
        Command::Resonances { spectrum, area, kmax, nmax, mu_max, jitter, spectrum_out } => {
            resonances_cmd(&ctx, spectrum.as_deref(), *area, *kmax, *nmax, *mu_max, *jitter, spectrum_out.as_deref())
        }
        Command::Correlate { u, v, dt, n, n_samples } => correlate_cmd(&ctx, u, v, *dt, *n, *n_samples),
        Command::Invert { series, max_modes, sv_threshold, noise_cut, edges, eps } => {
            invert_cmd(&ctx, series, *max_modes, *sv_threshold, *noise_cut, edges.as_deref(), *eps)
        }
        Command::Weyl { resonances, k, b_min, b_max, n_b, eps_exponent } => {
            weyl_cmd(&ctx, resonances, *k, *b_min, *b_max, *n_b, *eps_exponent)
        }
        Command::Bands { resonances, edges, eps, c0 } => bands_cmd(&ctx, resonances, edges, *eps, *c0),
        Command::Concentrate { resonances, d_mean, b_min, b_max, n_b, n_samples, potential } => {
            concentrate_cmd(&ctx, resonances, *d_mean, *b_min, *b_max, *n_b, *n_samples, potential)
        }
        Command::VerifyAnosov { n_samples, t_check } => verify_cmd(&ctx, *n_samples, *t_check),
        Command::ReproduceFig2 { kmax, mu_max, eps, plan } => fig2_cmd(&ctx, *kmax, *mu_max, *eps, plan),
        Command::Orbit { point, t, dt, potential } => orbit_cmd(&ctx, point.as_deref(), *t, *dt, potential),
    }
}

fn csv_bytes<F: FnOnce(&mut Vec<u8>) -> ruelle_bands::error::Result<()>>(f: F) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut buf = serde_json::to_vec_pretty(value)?;
    buf.push(b'\n');
    Ok(buf)
}

fn edge_summary(edges: &[BandEdges]) -> serde_json::Value {
    json!({
        "ordered": bands_are_ordered(edges),
        "bands": edges.iter().map(|e| json!({
            "k": e.k,
            "gamma_minus": e.gamma_minus,
            "gamma_plus": e.gamma_plus,
            "converged": e.converged,
            "grid": e.grid.as_ref().map(|g| json!({"gamma_minus": g.gamma_minus, "gamma_plus": g.gamma_plus, "error": g.error, "n_orbits": g.n_orbits})),
            "closed": e.closed.as_ref().map(|c| json!({"gamma_minus": c.gamma_minus, "gamma_plus": c.gamma_plus, "error": c.error, "n_orbits": c.n_orbits})),
        })).collect::<Vec<_>>(),
    })
}

fn compute_edges(ctx: &Ctx, model: &FlowModel, ks: &[usize], v: &PotentialSpec, plan: &SamplingPlan) -> Result<Vec<BandEdges>> {
    ctx.note(format!(
        "band edges k = {:?}: {} orbits, windows {:?}, seeding {:?}",
        ks, plan.n_orbits, plan.windows, plan.seeding
    ));
    let edges = band_edges_range(model, v, ks, plan)?;
    for e in &edges {
        if !e.converged {
            ctx.note(format!(
                "warning: band {} not converged (spread {:.3e} > {:.1e})",
                e.k, e.extrapolation_error, plan.tolerance
            ));
        }
    }
    Ok(edges)
}

fn band_edges_cmd(ctx: &Ctx, ks: &[usize], pot: &PotentialArgs, plan_args: &PlanArgs) -> Result<()> {
    let model = ctx.model()?;
    let v = ctx.potential(pot);
    let plan = ctx.plan(plan_args);
    let edges = compute_edges(ctx, &model, ks, &v, &plan)?;
    let bytes = csv_bytes(|b| io::write_band_edges(b, &edges))?;
    let mut meta = ctx.meta("band-edges", json!({ "k": ks, "potential": v, "plan": plan }));
    meta.results = edge_summary(&edges);
    emit(ctx.out(), &bytes, &meta)
}

fn write_spectrum_file(ctx: &Ctx, path: &Path, spec: &LaplaceSpectrum, params: serde_json::Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    io::write_spectrum(path, spec)?;
    let mut meta = ctx.meta("spectrum", params);
    meta.area = Some(spec.area());
    meta.results = json!({ "n_eigenvalues": spec.eigenvalues().len() });
    write_meta(path, &meta)
}

#[allow(clippy::too_many_arguments)]
fn resonances_cmd(
    ctx: &Ctx,
    spectrum: Option<&Path>,
    area: Option<f64>,
    kmax: usize,
    nmax: usize,
    mu_max: f64,
    jitter: f64,
    spectrum_out: Option<&Path>,
) -> Result<()> {
    let mut inputs = Vec::new();
    let spec = match spectrum {
        Some(path) => {
            inputs.push(path.to_path_buf());
            io::read_spectrum(path, area).with_context(|| format!("loading spectrum {}", path.display()))?
        }
        None => {
            let area = match area {
                Some(a) => a,
                None => ruelle_bands::model::FlowModel::assemble(&ctx.cfg.model)?.area(),
            };
            ctx.note(format!("synthetic Weyl spectrum: area {area:.6}, mu_max {mu_max}, jitter {jitter}"));
            synthetic_weyl_spectrum(area, mu_max, jitter, ctx.seed())?
        }
    };
    let params = json!({ "kmax": kmax, "nmax": nmax, "mu_max": mu_max, "jitter": jitter, "area": spec.area(), "source": spec.source() });
    if let Some(path) = spectrum_out {
        write_spectrum_file(ctx, path, &spec, params.clone())?;
    }
    let list = resonances_from_laplacian(&spec, kmax, nmax);
    let mut meta = ctx.meta("resonances", params);
    for p in &inputs {
        meta.add_input(p)?;
    }
    meta.results = json!({ "n_resonances": list.len(), "conjugation_closed": is_conjugation_closed(&list, 0.0) });
    emit(ctx.out(), &json_bytes(&list)?, &meta)
}

fn correlate_cmd(ctx: &Ctx, u: &str, v: &str, dt: f64, n: usize, n_samples: usize) -> Result<()> {
    let us: ObservableSpec = u.parse()?;
    let vs: ObservableSpec = v.parse()?;
    let model = ctx.model()?;
    ctx.note(format!("correlating {us} with {vs}: {n_samples} samples, {n} points, dt = {dt}"));
    let series = correlation_series(&model, &us, &vs, dt, n, n_samples, ctx.seed())?;
    let bytes = csv_bytes(|b| io::write_series(b, &series))?;
    let mut meta = ctx.meta("correlate", json!({ "u": us, "v": vs, "dt": dt, "n": n, "n_samples": n_samples }));
    meta.results = json!({ "C0": series.values[0], "C0_stderr": series.stderr[0], "volume": model.volume() });
    emit(ctx.out(), &bytes, &meta)
}

fn invert_cmd(
    ctx: &Ctx,
    series_path: &Path,
    max_modes: usize,
    sv_threshold: f64,
    noise_cut: f64,
    edges: Option<&Path>,
    eps: f64,
) -> Result<()> {
    let series = io::read_series(series_path).with_context(|| format!("loading series {}", series_path.display()))?;
    let n = signal_length(&series.values, &series.stderr, noise_cut).max(4 * max_modes).min(series.len());
    ctx.note(format!("inverting {n} of {} samples (dt = {})", series.len(), series.dt));
    let set = harmonic_inversion(&series.values[..n], series.dt, max_modes, sv_threshold)?;
    if set.aliasing_warning {
        ctx.note("warning: a recovered mode sits at the Nyquist frequency and may be aliased");
    }
    let kept = significant_modes(&set, &series.stderr, 2.0);
    let mut list: Vec<Resonance> = kept
        .iter()
        .map(|m| Resonance { re: m.z.re, im: m.z.im, band: BandLabel::Unassigned, provenance: Provenance::Inverted })
        .collect();
    let mut meta = ctx.meta(
        "invert",
        json!({ "max_modes": max_modes, "sv_threshold": sv_threshold, "noise_cut": noise_cut, "eps": eps }),
    );
    meta.add_input(series_path)?;
    if let Some(path) = edges {
        let bands = io::read_band_edges(path)?;
        list = label_bands(&list, &bands, eps, 0.0)?;
        meta.add_input(path)?;
    }
    let noise = noise_energy(&series.stderr, n);
    meta.results = json!({
        "samples_used": n,
        "rank": set.rank,
        "residual": set.residual,
        "aliasing_warning": set.aliasing_warning,
        "noise_energy": noise,
        "singular_values": set.singular_values.iter().take(4 * max_modes).collect::<Vec<_>>(),
        "modes": set.modes.iter().map(|m| json!({
            "re": m.z.re, "im": m.z.im,
            "amplitude_re": m.amplitude.re, "amplitude_im": m.amplitude.im,
            "energy": m.energy(set.dt, set.n_samples),
        })).collect::<Vec<_>>(),
    });
    emit(ctx.out(), &json_bytes(&list)?, &meta)
}

#[derive(Serialize)]
struct WeylRow {
    b: f64,
    count: usize,
}

fn weyl_cmd(ctx: &Ctx, path: &Path, k: usize, b_min: f64, b_max: f64, n_b: usize, eps_exp: f64) -> Result<()> {
    let list = io::read_resonances(path)?;
    let ladder = geometric_ladder(b_min, b_max, n_b);
    let fit: WeylFit = weyl_ladder(&list, k, &ladder, eps_exp)?;
    let rows: Vec<WeylRow> = fit.b.iter().zip(&fit.counts).map(|(b, c)| WeylRow { b: *b, count: *c }).collect();
    let mut meta = ctx.meta("weyl", json!({ "k": k, "b_min": b_min, "b_max": b_max, "n_b": n_b, "eps_exponent": eps_exp }));
    meta.add_input(path)?;
    meta.results = json!({ "slope": fit.slope, "slope_error": fit.slope_error, "prefactor": fit.prefactor, "constant": fit.constant });
    if let Some(s) = fit.slope {
        ctx.note(format!("band {k}: log-log slope {s:.4} +- {:.4}", fit.slope_error));
    }
    emit(ctx.out(), &csv_bytes(|b| io::write_table(b, &rows))?, &meta)
}

#[derive(Serialize)]
struct MembershipRow {
    re: f64,
    im: f64,
    status: &'static str,
    k: String,
}

fn membership_rows(report: &BandTestReport) -> Vec<MembershipRow> {
    report
        .entries
        .iter()
        .map(|e| {
            let (status, k) = match &e.membership {
                Membership::Assigned { k } => ("assigned", k.to_string()),
                Membership::Ambiguous { bands } => {
                    ("ambiguous", bands.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(";"))
                }
                Membership::Violation => ("violation", String::new()),
                Membership::Exempt => ("exempt", String::new()),
            };
            MembershipRow { re: e.re, im: e.im, status, k }
        })
        .collect()
}

fn membership_summary(r: &BandTestReport) -> serde_json::Value {
    json!({ "total": r.total(), "assigned": r.assigned, "violations": r.violations, "ambiguous": r.ambiguous, "exempt": r.exempt, "counts": r.counts })
}

fn bands_cmd(ctx: &Ctx, path: &Path, edges: &Path, eps: f64, c0: f64) -> Result<()> {
    let list = io::read_resonances(path)?;
    let bands: Vec<BandInterval> = io::read_band_edges(edges)?;
    let report = band_membership(&list, &bands, eps, c0)?;
    ctx.note(format!("{} entries: {} assigned, {} violations", report.total(), report.assigned, report.violations));
    let mut meta = ctx.meta("bands", json!({ "eps": eps, "c0": c0 }));
    meta.add_input(path)?;
    meta.add_input(edges)?;
    meta.results = membership_summary(&report);
    emit(ctx.out(), &csv_bytes(|b| io::write_table(b, &membership_rows(&report)))?, &meta)
}

#[derive(Serialize)]
struct ConcentrationRow {
    b: f64,
    count: usize,
    statistic: Option<f64>,
}

fn concentration_rows(r: &ConcentrationReport) -> Vec<ConcentrationRow> {
    r.points.iter().map(|p| ConcentrationRow { b: p.b, count: p.count, statistic: p.statistic }).collect()
}

#[allow(clippy::too_many_arguments)]
fn concentrate_cmd(
    ctx: &Ctx,
    path: &Path,
    d_mean: Option<f64>,
    b_min: f64,
    b_max: f64,
    n_b: usize,
    n_samples: usize,
    pot: &PotentialArgs,
) -> Result<()> {
    let list = io::read_resonances(path)?;
    let v = ctx.potential(pot);
    let (d, d_err) = match d_mean {
        Some(d) => (d, 0.0),
        None => {
            let model = ctx.model()?;
            let est = damping_average(&model, &v, n_samples, ctx.seed())?;
            ctx.note(format!("<D> = {:.6} +- {:.1e}", est.mean, est.stderr));
            (est.mean, est.stderr)
        }
    };
    let report = concentration(&list, d, &geometric_ladder(b_min, b_max, n_b));
    let mut meta = ctx.meta(
        "concentrate",
        json!({ "b_min": b_min, "b_max": b_max, "n_b": n_b, "n_samples": n_samples, "potential": v }),
    );
    meta.add_input(path)?;
    meta.results = json!({ "d_mean": d, "d_mean_stderr": d_err, "nonincreasing": report.nonincreasing });
    emit(ctx.out(), &csv_bytes(|b| io::write_table(b, &concentration_rows(&report)))?, &meta)
}

fn verify_cmd(ctx: &Ctx, n_samples: usize, t_check: f64) -> Result<()> {
    let model = ctx.model()?;
    let report = verify_anosov(&model, n_samples, t_check, ctx.seed());
    ctx.note(report.summary());
    let mut meta = ctx.meta("verify-anosov", json!({ "n_samples": n_samples, "t_check": t_check }));
    meta.results = json!({ "passed": report.passed() });
    emit(ctx.out(), &json_bytes(&report)?, &meta)?;
    if !report.passed() {
        return Err(ruelle_bands::error::Error::NotAnosov(report.summary()).into());
    }
    Ok(())
}

fn fig2_cmd(ctx: &Ctx, kmax: usize, mu_max: f64, eps: f64, plan_args: &PlanArgs) -> Result<()> {
    let dir = ctx.out().map(Path::to_path_buf).unwrap_or_else(|| "fig2".into());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let model = ctx.model()?;
    let v = ctx.potential(&PotentialArgs::default());
    let params = json!({ "kmax": kmax, "mu_max": mu_max, "eps": eps });

    let report = verify_anosov(&model, 64, 1.0, ctx.seed());
    ctx.note(format!("verify-anosov: {}", report.summary()));
    let path = dir.join("anosov.json");
    std::fs::write(&path, json_bytes(&report)?)?;
    let mut meta = ctx.meta("reproduce-fig2/verify-anosov", params.clone());
    meta.results = json!({ "passed": report.passed() });
    write_meta(&path, &meta)?;
    if !report.passed() {
        return Err(ruelle_bands::error::Error::NotAnosov(report.summary()).into());
    }

    let plan = ctx.plan(plan_args);
    let ks: Vec<usize> = (0..=kmax).collect();
    let edges = compute_edges(ctx, &model, &ks, &v, &plan)?;
    let path = dir.join("band_edges.csv");
    std::fs::write(&path, csv_bytes(|b| io::write_band_edges(b, &edges))?)?;
    let mut meta = ctx.meta("reproduce-fig2/band-edges", json!({ "potential": v, "plan": plan }));
    meta.results = edge_summary(&edges);
    write_meta(&path, &meta)?;

    let spec = synthetic_weyl_spectrum(model.area(), mu_max, 0.0, ctx.seed())?;
    write_spectrum_file(ctx, &dir.join("spectrum.csv"), &spec, params.clone())?;
    let list = resonances_from_laplacian(&spec, kmax, kmax + 1);
    let path = dir.join("resonances.json");
    std::fs::write(&path, json_bytes(&list)?)?;
    let mut meta = ctx.meta("reproduce-fig2/resonances", params.clone());
    meta.results = json!({ "n_resonances": list.len(), "conjugation_closed": is_conjugation_closed(&list, 0.0) });
    write_meta(&path, &meta)?;

    let bands: Vec<BandInterval> = edges.iter().map(BandInterval::from).collect();
    let membership = band_membership(&list, &bands, eps, DEFAULT_C0)?;
    ctx.note(format!("bands: {} assigned, {} violations", membership.assigned, membership.violations));
    let path = dir.join("bands.csv");
    std::fs::write(&path, csv_bytes(|b| io::write_table(b, &membership_rows(&membership)))?)?;
    let mut meta = ctx.meta("reproduce-fig2/bands", params.clone());
    meta.results = membership_summary(&membership);
    write_meta(&path, &meta)?;

    let ladder = geometric_ladder(10.0, 60.0, 12);
    let mut weyl_rows = Vec::new();
    let mut fits = Vec::new();
    for k in 0..=kmax {
        let fit = weyl_ladder(&list, k, &ladder, 0.0)?;
        weyl_rows.extend(fit.b.iter().zip(&fit.counts).map(|(b, c)| WeylBandRow { k, b: *b, count: *c }));
        fits.push(json!({ "k": k, "slope": fit.slope, "slope_error": fit.slope_error, "prefactor": fit.prefactor }));
    }
    let path = dir.join("weyl.csv");
    std::fs::write(&path, csv_bytes(|b| io::write_table(b, &weyl_rows))?)?;
    let mut meta = ctx.meta("reproduce-fig2/weyl", params.clone());
    meta.results = json!({ "fits": fits });
    write_meta(&path, &meta)?;

    let d = damping_average(&model, &v, 20_000, ctx.seed())?;
    let conc = concentration(&list, d.mean, &geometric_ladder(5.0, 100.0, 8));
    let path = dir.join("concentration.csv");
    std::fs::write(&path, csv_bytes(|b| io::write_table(b, &concentration_rows(&conc)))?)?;
    let mut meta = ctx.meta("reproduce-fig2/concentrate", params.clone());
    meta.results = json!({ "d_mean": d.mean, "d_mean_stderr": d.stderr, "nonincreasing": conc.nonincreasing });
    write_meta(&path, &meta)?;

    let summary = json!({
        "anosov_lambda": report.lambda_estimate,
        "band_edges": edges.iter().map(|e| json!({"k": e.k, "gamma_minus": e.gamma_minus, "gamma_plus": e.gamma_plus})).collect::<Vec<_>>(),
        "membership_violations": membership.violations,
        "d_mean": d.mean,
    });
    let path = dir.join("summary.json");
    std::fs::write(&path, json_bytes(&summary)?)?;
    write_meta(&path, &ctx.meta("reproduce-fig2", params))?;
    ctx.note(format!("wrote {}", dir.display()));
    Ok(())
}

#[derive(Serialize)]
struct WeylBandRow {
    k: usize,
    b: f64,
    count: usize,
}

fn orbit_cmd(ctx: &Ctx, point: Option<&[f64]>, t: f64, dt: f64, pot: &PotentialArgs) -> Result<()> {
    if !(t > 0.0 && dt > 0.0) {
        bail!(ruelle_bands::error::Error::Input("t and dt must be positive".into()));
    }
    let model = ctx.model()?;
    let v = ctx.potential(pot);
    let start = match point {
        Some([x, y, theta]) => model.normalize(&PhasePoint::new(C64::new(*x, *y), *theta))?,
        Some(_) => bail!(ruelle_bands::error::Error::Input("--point expects x,y,theta".into())),
        None => sample_liouville(&model, &mut sample_rng(ctx.seed(), 0)).point,
    };
    let mut walker = OrbitWalker::start(&model, &start)?;
    let n = (t / dt).round() as usize;
    let mut rows = Vec::with_capacity(n + 1);
    let mut push = |w: &OrbitWalker| {
        let p = w.phase();
        rows.push(io::OrbitRow {
            t: w.time(),
            x: p.w.re,
            y: p.w.im,
            theta: p.theta,
            u: w.u(),
            d: v.band_integrand(w.psi(), w.u(), 0.0),
        });
    };
    push(&walker);
    for _ in 0..n {
        walker.advance(dt)?;
        push(&walker);
    }
    let mut meta = ctx.meta("orbit", json!({ "start": start, "t": t, "dt": dt, "potential": v }));
    meta.results = json!({ "n_rows": rows.len() });
    emit(ctx.out(), &csv_bytes(|b| io::write_orbit(b, &rows))?, &meta)
}
