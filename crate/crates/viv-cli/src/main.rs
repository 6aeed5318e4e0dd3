//! `viv` — cross-flow VIV response prediction with adaptive
//! hydrodynamic parameters.
//!
//! The workflow is split into composable subcommands so new
//! measurements can re-enter at any step:
//!
//! ```text
//! synth        generate benchmark cases from a known parameter set
//! characterize extract response features from measured cases
//! cluster      group the features (kmeans | gmm | spectral)
//! classify     assign a new feature triple to a fitted cluster
//! calibrate    fit excitation parameters per cluster against fatigue
//! predict      frequency-domain response and fatigue prediction
//! evaluate     predicted-vs-measured accuracy statistics
//! ce-grid      excitation-coefficient surface dump for contour plots
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 data/model error.

mod commands;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "viv",
    version,
    about = "Cross-flow VIV response and fatigue prediction with adaptive hydrodynamic parameters",
    after_help = "File formats:\n  \
      case JSON     {schema_version, name, pipe, profile, sensors[{position, dt, samples: \"csv\"}], measured_fatigue?, dominant_frequency?}\n  \
      params JSON   {fhat_min, fhat_max, low{...}, high{...}, added_mass, damping}\n  \
      model JSON    {algorithm, k, rng_seed, scaler, labels, gmm?/kmeans?}\n  \
      features CSV  case,n,R31,F\n  \
      labels CSV    case,label\n  \
      pairs CSV     case,measured,predicted"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct SnArg {
    /// S-N curve as `m=<inverse slope>,loga=<log10 intercept>`.
    #[arg(long, default_value = "m=3,loga=11.63", value_parser = commands::parse_sn)]
    sn: viv_core::predictor::SnCurve,
}

#[derive(Debug, Args)]
struct JobsArg {
    /// Worker threads for per-case parallelism (default: all cores).
    /// Outputs are independent of this value.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract response features (mode order, stress ratio, stiffness
    /// ratio) from every case in a directory into a features CSV.
    Characterize {
        /// Directory of case JSON files.
        #[arg(long)]
        cases: std::path::PathBuf,
        /// Output features CSV (`case,n,R31,F`).
        #[arg(long)]
        out: std::path::PathBuf,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Cluster a features CSV; writes a labels CSV and a model JSON.
    Cluster {
        /// Features CSV produced by `characterize`.
        #[arg(long)]
        features: std::path::PathBuf,
        /// Clustering algorithm.
        #[arg(long, default_value = "gmm")]
        algo: String,
        /// Number of clusters.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// RNG seed; fits are bit-reproducible per seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output labels CSV (`case,label`).
        #[arg(long)]
        out: std::path::PathBuf,
        /// Output model JSON.
        #[arg(long)]
        model: std::path::PathBuf,
    },
    /// Classify one feature triple with a fitted gmm model.
    Classify {
        /// Model JSON produced by `cluster --algo gmm`.
        #[arg(long)]
        model: std::path::PathBuf,
        /// Response mode order.
        #[arg(long)]
        mode_order: f64,
        /// Stress ratio (3rd harmonic over fundamental).
        #[arg(long)]
        stress_ratio: f64,
        /// Bending stiffness ratio.
        #[arg(long)]
        stiffness_ratio: f64,
        /// Optional output JSON path (default: stdout).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Calibrate excitation parameters per cluster against measured
    /// fatigue.
    Calibrate {
        /// Directory of case JSON files (with measured fatigue).
        #[arg(long)]
        cases: std::path::PathBuf,
        /// Labels CSV from `cluster`.
        #[arg(long)]
        labels: std::path::PathBuf,
        /// Initial parameter set JSON.
        #[arg(long)]
        params: std::path::PathBuf,
        /// Objective evaluation budget per cluster.
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        /// Output directory for per-cluster params JSON and the
        /// convergence log CSV.
        #[arg(long)]
        out_dir: std::path::PathBuf,
        #[command(flatten)]
        sn: SnArg,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Predict response and fatigue for one case or a directory.
    Predict {
        /// Single case JSON.
        #[arg(long, conflicts_with = "cases")]
        case: Option<std::path::PathBuf>,
        /// Directory of case JSON files (batch mode).
        #[arg(long)]
        cases: Option<std::path::PathBuf>,
        /// Parameter set JSON used for every case.
        #[arg(long)]
        params: Option<std::path::PathBuf>,
        /// Per-cluster parameter directory (`cluster_<k>.json`), used
        /// with --labels to pick each case's parameters.
        #[arg(long, conflicts_with = "params")]
        params_dir: Option<std::path::PathBuf>,
        /// Labels CSV mapping cases to clusters (with --params-dir).
        #[arg(long)]
        labels: Option<std::path::PathBuf>,
        /// Output: prediction JSON (single) or pairs CSV (batch).
        #[arg(long)]
        out: std::path::PathBuf,
        /// Optional per-sensor CSV (single mode): `z,stress_std,damage_rate`.
        #[arg(long)]
        csv: Option<std::path::PathBuf>,
        #[command(flatten)]
        sn: SnArg,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Ratio statistics (within-factor fractions) over a pairs CSV.
    Evaluate {
        /// Pairs CSV: `case,measured,predicted`.
        #[arg(long)]
        pairs: std::path::PathBuf,
        /// Output report JSON.
        #[arg(long)]
        out: std::path::PathBuf,
        /// Optional scatter CSV (`case,measured,predicted,ratio`).
        #[arg(long)]
        scatter: Option<std::path::PathBuf>,
        /// Optional baseline report JSON to compare against; the
        /// comparison is printed to stdout.
        #[arg(long)]
        baseline: Option<std::path::PathBuf>,
    },
    /// Generate synthetic benchmark cases from a known parameter set.
    Synth {
        /// Bundled pipe name (prefix match: NDP, Shell, Hanøytangen,
        /// ExxonMobil, Miami) or a pipe JSON path.
        #[arg(long)]
        pipe: String,
        /// Truth parameter set JSON (omit for the built-in reference
        /// surface).
        #[arg(long)]
        params: Option<std::path::PathBuf>,
        /// Top current speeds, one case per value, m/s.
        #[arg(long, value_delimiter = ',', required = true)]
        speeds: Vec<f64>,
        /// Current profile: `uniform`, or `shear:<floor>` for a linear
        /// profile rising from floor*speed to speed.
        #[arg(long, default_value = "uniform")]
        profile: String,
        /// Relative noise std applied to signals and fatigue.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of equally spaced sensors.
        #[arg(long, default_value_t = 40)]
        sensors: usize,
        /// Samples per sensor series.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        /// Third-harmonic amplitude ratio injected into the signals.
        #[arg(long, default_value_t = 0.0)]
        ratio3: f64,
        /// Bending stress per unit curvature, Pa*m, for pipes that do
        /// not carry one (the bundled table does not).
        #[arg(long)]
        stress_per_curvature: Option<f64>,
        /// Output directory for case JSON files.
        #[arg(long)]
        out_dir: std::path::PathBuf,
        #[command(flatten)]
        sn: SnArg,
    },
    /// Dump the excitation-coefficient surface as a CSV grid
    /// (`fhat,ad,ce`) for contour plotting.
    CeGrid {
        /// Parameter set JSON.
        #[arg(long)]
        params: std::path::PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: std::path::PathBuf,
        /// Grid resolution in the frequency direction.
        #[arg(long, default_value_t = 60)]
        fhat_points: usize,
        /// Grid resolution in the amplitude direction.
        #[arg(long, default_value_t = 60)]
        ad_points: usize,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else
            // is a usage error.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => {}
        Err(commands::CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            std::process::exit(1);
        }
        Err(commands::CliError::Data(message)) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    }
}
