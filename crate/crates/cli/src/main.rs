//! `ruelle`: command-line pipelines for band edges, resonance catalogues,
//! correlation functions and spectral statistics.

mod commands;
mod config;
mod meta;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "ruelle", version, about = "Ruelle-Pollicott band structure experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Model configuration (TOML; model keys plus optional [plan] and [potential] tables).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (a directory for reproduce-fig2). Standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SeedingArg {
    Liouville,
    Closed,
    Both,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PotentialArgs {
    /// Constant part of the potential V (overrides [potential] c0).
    #[arg(long)]
    pub c0: Option<f64>,
    /// Coefficient of psi in V.
    #[arg(long)]
    pub c1: Option<f64>,
    /// Coefficient of u/2 in V.
    #[arg(long)]
    pub c2: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PlanArgs {
    /// Liouville-random orbits [config plan.n_orbits, default 10000].
    #[arg(long)]
    pub n_orbits: Option<usize>,
    /// Comma-separated averaging windows [default 50,100,200].
    #[arg(long, value_delimiter = ',')]
    pub windows: Option<Vec<f64>>,
    /// Initial conditions for the ensembles [default both].
    #[arg(long, value_enum)]
    pub seeding: Option<SeedingArg>,
    /// Largest accepted spread between the two longest windows [default 1e-3].
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Longest group word for closed geodesics [default 6].
    #[arg(long)]
    pub max_word_len: Option<usize>,
    /// Random words for the closed-geodesic ensemble [default 64].
    #[arg(long)]
    pub n_words: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Band edges gamma_k^- and gamma_k^+ (CSV).
    BandEdges {
        /// Band index (first band of the range when --k-max is given).
        #[arg(long, default_value_t = 0)]
        k: usize,
        /// Last band index of a range sharing one orbit ensemble.
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Constant-curvature resonances from a Laplace spectrum (JSON).
    Resonances {
        /// Spectrum CSV `index,mu`; a synthetic Weyl spectrum is used when omitted.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Surface area (for --spectrum: overrides the sidecar; synthetic default: model area).
        #[arg(long)]
        area: Option<f64>,
        /// Highest band index.
        #[arg(long, alias = "k-max", default_value_t = 3)]
        kmax: usize,
        /// Number of integer resonances -1, ..., -nmax.
        #[arg(long, alias = "n-max", default_value_t = 0)]
        nmax: usize,
        /// Largest synthetic eigenvalue.
        #[arg(long, default_value_t = 400.0)]
        mu_max: f64,
        /// Synthetic jitter in units of the mean spacing, in [0, 1].
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        /// Also write the synthetic spectrum here (CSV plus area sidecar).
        #[arg(long)]
        spectrum_out: Option<PathBuf>,
    },
    /// Monte Carlo correlation function C(t) (CSV t,C,stderr).
    Correlate {
        /// First observable (const:c, bump:x,y,s, bump0:x,y,s, dbump:x,y,s, psi, psi0).
        #[arg(long, default_value = "bump0:0,0,0.5")]
        u: String,
        /// Second observable, composed with the backward flow.
        #[arg(long, default_value = "bump0:0,0,0.5")]
        v: String,
        /// Sampling interval.
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
        /// Number of samples of C.
        #[arg(long, default_value_t = 4000)]
        n: usize,
        /// Liouville samples.
        #[arg(long, default_value_t = 100_000)]
        n_samples: usize,
    },
    /// Harmonic inversion of a correlation series (JSON resonance list).
    Invert {
        /// Series CSV `t,C,stderr`.
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_modes: usize,
        /// Relative singular-value cutoff.
        #[arg(long, default_value_t = 1e-3)]
        sv_threshold: f64,
        /// Keep samples up to the last one with |C| above this many standard
        /// errors (0 keeps the whole series).
        #[arg(long, default_value_t = 4.0)]
        noise_cut: f64,
        /// Band-edge CSV used to label the recovered modes.
        #[arg(long)]
        edges: Option<PathBuf>,
        /// Band widening used with --edges.
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Weyl counts of band k on a geometric ladder of windows (CSV b,count).
    Weyl {
        #[arg(long)]
        resonances: PathBuf,
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 10.0)]
        b_min: f64,
        #[arg(long, default_value_t = 60.0)]
        b_max: f64,
        #[arg(long, default_value_t = 12)]
        n_b: usize,
        /// Window growth exponent: windows are [b, b + b^eps).
        #[arg(long, default_value_t = 0.0)]
        eps_exponent: f64,
    },
    /// Band membership of a resonance list (CSV re,im,status,k).
    Bands {
        #[arg(long)]
        resonances: PathBuf,
        /// Band-edge CSV from band-edges.
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        /// Entries with |Im z| <= c0 are exempt.
        #[arg(long, default_value_t = 5.0)]
        c0: f64,
    },
    /// Concentration of band 0 around Re z = <D> (CSV b,count,statistic).
    Concentrate {
        #[arg(long)]
        resonances: PathBuf,
        /// Spatial average <D>; estimated from the model when omitted.
        #[arg(long, allow_hyphen_values = true)]
        d_mean: Option<f64>,
        #[arg(long, default_value_t = 5.0)]
        b_min: f64,
        #[arg(long, default_value_t = 100.0)]
        b_max: f64,
        #[arg(long, default_value_t = 8)]
        n_b: usize,
        /// Liouville samples for <D> when it is estimated.
        #[arg(long, default_value_t = 20_000)]
        n_samples: usize,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Anosov and contact checks on random samples (JSON report).
    VerifyAnosov {
        #[arg(long, default_value_t = 64)]
        n_samples: usize,
        #[arg(long, default_value_t = 1.0)]
        t_check: f64,
    },
    /// Data behind both panels of the band-spectrum figure (directory).
    #[command(name = "reproduce-fig2")]
    ReproduceFig2 {
        #[arg(long, default_value_t = 3)]
        kmax: usize,
        #[arg(long, default_value_t = 400.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Orbit dump (CSV t,x,y,theta,u,D).
    Orbit {
        /// Start point x,y,theta in disk coordinates; Liouville-random when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10.0)]
        t: f64,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        #[command(flatten)]
        potential: PotentialArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return report(&anyhow::Error::from(e));
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

/// Prints a machine-readable error on stderr; runtime failures exit with 1
/// (usage errors are reported by the argument parser with 2).
fn report(e: &anyhow::Error) -> ExitCode {
    let kind = e
        .chain()
        .find_map(|c| c.downcast_ref::<ruelle_bands::error::Error>())
        .map(|c| c.kind())
        .unwrap_or("runtime");
    let body = serde_json::json!({ "error": { "kind": kind, "message": format!("{e:#}") } });
    eprintln!("{body}");
    ExitCode::from(1)
}
