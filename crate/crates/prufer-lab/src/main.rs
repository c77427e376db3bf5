use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prufer_lab::config::{ExperimentConfig, Mode};
use prufer_lab::{driver, LabError};

/// Eigenvalue statistics laboratory for 1d Schrödinger operators with
/// random decaying potentials.
#[derive(Parser)]
#[command(name = "prufer-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rescaled eigenvalue point process of the Dirichlet box.
    Spectrum(CommonArgs),
    /// 2D jump field of the relative Prüfer phase.
    Jumpfield(CommonArgs),
    /// Reduced relative-phase SDE ensembles.
    Limitsde(CommonArgs),
    /// Coupled phase SDE counts across beta values.
    Sinebeta(CommonArgs),
    /// Explosion-time statistics and quadrature comparison.
    Explosion(CommonArgs),
    /// Boundary-phase uniformity and relative-phase drift.
    Phase(CommonArgs),
    /// Consolidated acceptance report (bundled presets when no config is
    /// given).
    Report(ReportArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment TOML file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Realization count override.
    #[arg(long)]
    runs: Option<usize>,
    /// Worker count override (default: PRUFER_LAB_THREADS, then hardware).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment TOML file; when absent every bundled preset runs.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

const PRESETS: &[(&str, &str)] = &[
    ("poisson_alpha03", include_str!("../presets/poisson_alpha03.toml")),
    ("sinebeta_crossover", include_str!("../presets/sinebeta_crossover.toml")),
    ("explosion_ad", include_str!("../presets/explosion_ad.toml")),
    ("jumpfield_2d", include_str!("../presets/jumpfield_2d.toml")),
    ("coupling_mode", include_str!("../presets/coupling_mode.toml")),
];

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(dispatch(cli) as u8)
}

fn dispatch(cli: Cli) -> i32 {
    let (mode, args) = match cli.command {
        Command::Spectrum(a) => (Mode::Spectrum, a),
        Command::Jumpfield(a) => (Mode::JumpField, a),
        Command::Limitsde(a) => (Mode::LimitSde, a),
        Command::Sinebeta(a) => (Mode::SineBeta, a),
        Command::Explosion(a) => (Mode::Explosion, a),
        Command::Phase(a) => (Mode::Phase, a),
        Command::Report(a) => return run_report(a),
    };

    let mut config = match ExperimentConfig::from_file(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    apply_overrides(&mut config, &args);
    execute(&config, mode)
}

fn apply_overrides(config: &mut ExperimentConfig, args: &CommonArgs) {
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(runs) = args.runs {
        config.runs = runs;
    }
    if let Some(threads) = args.threads {
        config.threads = Some(threads);
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
}

fn execute(config: &ExperimentConfig, mode: Mode) -> i32 {
    match driver::run(config, mode) {
        Ok(artifacts) => {
            for f in &artifacts.files {
                eprintln!("wrote {f}");
            }
            artifacts.exit_code
        }
        Err(e @ (LabError::Config(_) | LabError::Io(_))) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run_report(args: ReportArgs) -> i32 {
    let common = CommonArgs {
        config: PathBuf::new(),
        seed: args.seed,
        runs: args.runs,
        threads: args.threads,
        out: args.out.clone(),
    };

    if let Some(path) = &args.config {
        let mut config = match ExperimentConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        };
        apply_overrides(&mut config, &common);
        return execute(&config, Mode::Report);
    }

    let mut worst = 0;
    for (name, text) in PRESETS {
        println!("== preset: {name} ==");
        let mut config = match ExperimentConfig::from_toml_str(text) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error in bundled preset {name}: {e}");
                return 2;
            }
        };
        apply_overrides(&mut config, &common);
        if let Some(out) = &args.out {
            config.out_dir = out.join(name);
        }
        let code = execute(&config, Mode::Report);
        worst = worst.max(code);
    }
    worst
}
