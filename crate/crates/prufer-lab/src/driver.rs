//! Experiment driver: fans ensembles across a worker pool and writes the
//! CSV / JSON artifacts of each run mode.
//!
//! Every artifact embeds the resolved configuration; summaries additionally
//! carry a timestamp, which is the only field allowed to differ between
//! repeated runs with the same seed.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Mode};
use crate::limit_sde::SdeConfig;
use crate::report::{self, CriterionOutcome};
use crate::stats::PointProcessSample;
use crate::{LabError, Result};

/// Outcome of one driver invocation.
pub struct RunArtifacts {
    pub summary: Value,
    pub exit_code: i32,
    pub files: Vec<String>,
}

/// Fraction of failed realizations above which the run exits nonzero.
const SKIP_RATE_LIMIT: f64 = 0.01;

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn config_echo(config: &ExperimentConfig) -> Value {
    serde_json::to_value(config).unwrap_or(Value::Null)
}

fn write_artifact(dir: &Path, name: &str, content: &str) -> Result<String> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path.display().to_string())
}

fn csv_header(config: &ExperimentConfig) -> String {
    let echo = serde_json::to_string(&config_echo(config)).unwrap_or_default();
    format!("# config_echo: {echo}\n")
}

fn skip_exit(skipped: usize, runs: usize) -> i32 {
    if (skipped as f64) / (runs as f64) > SKIP_RATE_LIMIT {
        1
    } else {
        0
    }
}

/// Run one mode with the configured worker pool and write its artifacts.
pub fn run(config: &ExperimentConfig, mode: Mode) -> Result<RunArtifacts> {
    config.validate_for(mode)?;
    let threads = config.resolve_threads();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("worker pool: {e}")))?;
    pool.install(|| match mode {
        Mode::Spectrum => run_spectrum(config),
        Mode::JumpField => run_jumpfield(config),
        Mode::LimitSde => run_limitsde(config),
        Mode::SineBeta => run_sinebeta(config),
        Mode::Explosion => run_explosion(config),
        Mode::Phase => run_phase(config),
        Mode::Report => run_report(config),
    })
}

fn run_spectrum(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let sec = config.spectrum.as_ref().expect("validated");
    let spec = config
        .potential
        .as_ref()
        .expect("validated")
        .resolve(Some(sec.l))?;
    let ens = report::run_spectrum_ensemble(&spec, sec, &[], config.runs, config.master_seed);

    // per-realization atom table
    let mut csv = csv_header(config);
    csv.push_str("seed,atom_index,atom_value\n");
    for r in &ens.realizations {
        for (i, a) in r.atoms.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", r.index, i, a);
        }
    }

    let counts = ens.counts();
    let expected = (sec.window.1 - sec.window.0) / PI;
    // counts per unit-π window cell
    let cells = ((sec.window.1 - sec.window.0) / PI).ceil() as usize;
    let samples: Vec<PointProcessSample> = ens.samples();
    let hist = crate::stats::empirical_intensity(&samples, cells.max(1), |_| 1.0 / PI)?;

    let gaps = ens.pooled_gaps();
    let gap_report = if gaps.is_empty() {
        Value::Null
    } else {
        serde_json::to_value(crate::stats::ks_exponential(&gaps, 1.0 / PI)?)?
    };
    let dispersion = crate::stats::poisson_dispersion(&counts, expected)?;

    let summary = json!({
        "mode": "spectrum",
        "runs": config.runs,
        "completed": ens.realizations.len(),
        "skipped": ens.skipped,
        "mean_count": counts.iter().sum::<u64>() as f64 / counts.len().max(1) as f64,
        "expected_count": expected,
        "dispersion": dispersion,
        "gap_ks": gap_report,
        "cell_intensity": hist,
        "config_echo": config_echo(config),
        "timestamp": timestamp(),
    });

    let mut files = vec![
        write_artifact(&config.out_dir, "spectrum_atoms.csv", &csv)?,
        write_artifact(
            &config.out_dir,
            "spectrum_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?,
    ];
    if config.dump_paths {
        if let Some(first) = ens.realizations.first() {
            let dt = sec.dt.unwrap_or_else(|| {
                crate::prufer::default_phase_dt(sec.l, sec.e0.sqrt() + sec.window.1 / sec.l)
            });
            let path = spec.sample_path(
                sec.l,
                dt,
                crate::torus::PathSeed::new(config.master_seed, first.index),
            )?;
            let mut buf = csv_header(config).into_bytes();
            path.write_csv(&mut buf)?;
            files.push(write_artifact(
                &config.out_dir,
                "noise_path_first.csv",
                &String::from_utf8_lossy(&buf),
            )?);
            let traj = crate::prufer::integrate_phase(&path, &spec, sec.e0.sqrt(), 0.0)?;
            let mut buf = csv_header(config).into_bytes();
            traj.write_csv(&mut buf)?;
            files.push(write_artifact(
                &config.out_dir,
                "phase_trajectory_first.csv",
                &String::from_utf8_lossy(&buf),
            )?);
        }
    }

    Ok(RunArtifacts {
        summary,
        exit_code: skip_exit(ens.skipped.len(), config.runs),
        files,
    })
}

fn run_jumpfield(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let sec = config.jumpfield.as_ref().expect("validated");
    let spec = config
        .potential
        .as_ref()
        .expect("validated")
        .resolve(Some(sec.n))?;
    let ens = report::run_jumpfield_ensemble(&spec, sec, config.runs, config.master_seed);

    let mut csv = csv_header(config);
    csv.push_str("run,lambda_index,time,level\n");
    for (run, field) in ens.fields.iter().enumerate() {
        for (li, events) in field.events.iter().enumerate() {
            for (time, level) in events {
                let _ = writeln!(csv, "{run},{li},{time},{level}");
            }
        }
    }

    let outcomes = report::check_jumpfield(&ens, &config.tolerances);
    let summary = json!({
        "mode": "jumpfield",
        "runs": config.runs,
        "completed": ens.fields.len(),
        "skipped": ens.skipped,
        "lambda_grid": ens.lambda_grid,
        "t_grid": ens.t_grid,
        "checks": outcomes,
        "config_echo": config_echo(config),
        "timestamp": timestamp(),
    });

    let files = vec![
        write_artifact(&config.out_dir, "jumpfield_events.csv", &csv)?,
        write_artifact(
            &config.out_dir,
            "jumpfield_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?,
    ];
    Ok(RunArtifacts {
        summary,
        exit_code: skip_exit(ens.skipped.len(), config.runs),
        files,
    })
}

fn run_limitsde(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let sec = config.limitsde.as_ref().expect("validated");
    let sde = config.sde.as_ref().expect("validated");
    let (jumps, skipped) =
        report::run_marginal_ensemble(sde, sec, config.runs, config.master_seed);

    let mut csv = csv_header(config);
    csv.push_str("run,jump_index,time\n");
    for (run, run_jumps) in jumps.iter().enumerate() {
        for (i, t) in run_jumps.iter().enumerate() {
            let _ = writeln!(csv, "{run},{i},{t}");
        }
    }

    let intensity = report::check_marginal_intensity(
        &jumps,
        sde.lambda,
        sde.gamma,
        sec.s_bins,
        "limitsde.intensity",
    );
    let summary = json!({
        "mode": "limitsde",
        "runs": config.runs,
        "completed": jumps.len(),
        "skipped": skipped,
        "mean_jumps": jumps.iter().map(|j| j.len()).sum::<usize>() as f64
            / jumps.len().max(1) as f64,
        "checks": [intensity],
        "config_echo": config_echo(config),
        "timestamp": timestamp(),
    });

    let mut files = vec![
        write_artifact(&config.out_dir, "limitsde_jumps.csv", &csv)?,
        write_artifact(
            &config.out_dir,
            "limitsde_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?,
    ];
    if config.dump_paths {
        let path = crate::limit_sde::simulate_relative_phase(
            sde,
            sec.alpha,
            sec.n,
            sec.horizon,
            (config.master_seed, 0),
        )?;
        let mut buf = csv_header(config).into_bytes();
        path.write_csv(&mut buf)?;
        files.push(write_artifact(
            &config.out_dir,
            "limitsde_path_first.csv",
            &String::from_utf8_lossy(&buf),
        )?);
    }
    Ok(RunArtifacts {
        summary,
        exit_code: skip_exit(skipped.len(), config.runs),
        files,
    })
}

fn run_sinebeta(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let sec = config.sinebeta.as_ref().expect("validated");
    let mut csv = csv_header(config);
    csv.push_str("beta,run,count\n");
    let mut per_beta = Vec::new();
    for &beta in &sec.betas {
        let (counts, warning_fraction) =
            report::run_sine_beta_ensemble(sec, beta, config.runs, config.master_seed)?;
        for (run, c) in counts.iter().enumerate() {
            let _ = writeln!(csv, "{beta},{run},{c}");
        }
        let mean = counts.iter().sum::<i64>() as f64 / counts.len() as f64;
        let unsigned: Vec<u64> = counts.iter().map(|&c| c.max(0) as u64).collect();
        let dispersion = crate::stats::poisson_dispersion(
            &unsigned,
            (sec.window.1 - sec.window.0) / (2.0 * PI),
        )?;
        per_beta.push(json!({
            "beta": beta,
            "mean": mean,
            "dispersion": dispersion.statistic,
            "warning_fraction": warning_fraction,
        }));
    }

    let summary = json!({
        "mode": "sinebeta",
        "runs": config.runs,
        "window": sec.window,
        "per_beta": per_beta,
        "config_echo": config_echo(config),
        "timestamp": timestamp(),
    });
    let files = vec![
        write_artifact(&config.out_dir, "sinebeta_counts.csv", &csv)?,
        write_artifact(
            &config.out_dir,
            "sinebeta_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?,
    ];
    Ok(RunArtifacts { summary, exit_code: 0, files })
}

fn run_explosion(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let sec = config.explosion.as_ref().expect("validated");
    let sde = config.sde.as_ref().expect("validated");
    let (record, skipped) =
        report::run_explosion_ensemble(sde, sec, config.runs, config.master_seed)?;

    let mut csv = csv_header(config);
    csv.push_str("run,explosion_index,time\n");
    for (run, t) in record.times.iter().enumerate() {
        let _ = writeln!(csv, "{run},0,{t}");
    }
    // one row of the parameter-sweep table
    let mut sweep = csv_header(config);
    sweep.push_str("C_n,lambda,r,mean_time,limit_value\n");
    let _ = writeln!(
        sweep,
        "{},{},{},{},{}",
        record.c_n,
        record.lambda,
        record.r0,
        record.mean(),
        crate::explosion::limit_mean(record.lambda, record.r0)?
    );

    let outcomes = report::check_explosion(&record, sec, &config.tolerances);
    let summary = json!({
        "mode": "explosion",
        "runs": config.runs,
        "completed": record.times.len(),
        "skipped": skipped,
        "mc_mean": record.mean(),
        "mc_std_error": record.std_error(),
        "quadrature_mean": record.quadrature_mean,
        "checks": outcomes,
        "config_echo": config_echo(config),
        "timestamp": timestamp(),
    });
    let files = vec![
        write_artifact(&config.out_dir, "explosion_times.csv", &csv)?,
        write_artifact(&config.out_dir, "explosion_sweep.csv", &sweep)?,
        write_artifact(
            &config.out_dir,
            "explosion_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?,
    ];
    Ok(RunArtifacts {
        summary,
        exit_code: skip_exit(skipped.len(), config.runs),
        files,
    })
}

fn run_phase(config: &ExperimentConfig) -> Result<RunArtifacts> {
    use rayon::prelude::*;

    let sec = config.phase.as_ref().expect("validated");
    let spec = config
        .potential
        .as_ref()
        .expect("validated")
        .resolve(Some(sec.l))?;
    let kappa_max = sec.e0.sqrt()
        + sec.lambdas.iter().cloned().fold(0.0, f64::max) / sec.l;
    let dt = sec
        .dt
        .unwrap_or_else(|| crate::prufer::default_phase_dt(sec.l, kappa_max));
    let t_min = sec.t_min_factor * sec.l;

    struct PhaseRun {
        index: u64,
        phi: f64,
        terminals: Vec<f64>,
        jumps: Vec<crate::prufer::JumpTimes>,
    }

    let outcomes: Vec<std::result::Result<PhaseRun, (u64, String)>> = (0..config.runs as u64)
        .into_par_iter()
        .map(|index| {
            let run = || -> Result<PhaseRun> {
                let path = spec.sample_path(
                    sec.l,
                    dt,
                    crate::torus::PathSeed::new(config.master_seed, index),
                )?;
                let mut phi = 0.0;
                let mut terminals = Vec::with_capacity(sec.lambdas.len());
                let mut jumps = Vec::with_capacity(sec.lambdas.len());
                for (i, &lambda) in sec.lambdas.iter().enumerate() {
                    let rel = crate::prufer::relative_phase(&path, &spec, sec.e0, lambda, sec.l)?;
                    if i == 0 {
                        phi = rel.phi;
                    }
                    terminals.push(rel.terminal());
                    jumps.push(crate::prufer::jump_times(&rel, t_min));
                }
                Ok(PhaseRun { index, phi, terminals, jumps })
            };
            run().map_err(|e| (index, e.to_string()))
        })
        .collect();

    let mut runs = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(r) => runs.push(r),
            Err(e) => skipped.push(e),
        }
    }

    let mut csv = csv_header(config);
    csv.push_str("run,phi");
    for (i, _) in sec.lambdas.iter().enumerate() {
        let _ = write!(csv, ",theta_{i}");
    }
    csv.push('\n');
    for r in &runs {
        let _ = write!(csv, "{},{}", r.index, r.phi);
        for t in &r.terminals {
            let _ = write!(csv, ",{t}");
        }
        csv.push('\n');
    }

    let mut jumps_csv = csv_header(config);
    jumps_csv.push_str("run,lambda_index,time,level\n");
    let mut discarded = 0usize;
    let mut backslides = 0usize;
    for r in &runs {
        for (li, j) in r.jumps.iter().enumerate() {
            discarded += j.discarded_pre_tmin;
            backslides += j.late_backslides;
            for ev in &j.events {
                let _ = writeln!(jumps_csv, "{},{li},{},{}", r.index, ev.time, ev.level);
            }
        }
    }

    let phis: Vec<f64> = runs.iter().map(|r| r.phi).collect();
    let uniformity = crate::stats::uniformity_test(&phis)?;
    let mut checks = vec![serde_json::to_value(&uniformity)?];
    for (i, &lambda) in sec.lambdas.iter().enumerate() {
        let mean =
            runs.iter().map(|r| r.terminals[i]).sum::<f64>() / runs.len().max(1) as f64;
        let pass = (mean - lambda).abs() <= config.tolerances.mean_rel * lambda;
        checks.push(json!({
            "test": format!("phase.drift.lambda_{i}"),
            "lambda": lambda,
            "mean_terminal": mean,
            "pass": pass,
        }));
    }

    let summary = json!({
        "mode": "phase",
        "runs": config.runs,
        "completed": runs.len(),
        "skipped": skipped,
        "lambdas": sec.lambdas,
        "checks": checks,
        "jump_diagnostics": {
            "t_min": t_min,
            "discarded_pre_tmin": discarded,
            "late_backslides": backslides,
        },
        "config_echo": config_echo(config),
        "timestamp": timestamp(),
    });
    let files = vec![
        write_artifact(&config.out_dir, "phase_samples.csv", &csv)?,
        write_artifact(&config.out_dir, "phase_jumps.csv", &jumps_csv)?,
        write_artifact(
            &config.out_dir,
            "phase_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?,
    ];
    Ok(RunArtifacts {
        summary,
        exit_code: skip_exit(skipped.len(), config.runs),
        files,
    })
}

/// Consolidated acceptance report over the sections present in the config.
fn run_report(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let tol = &config.tolerances;
    let mut outcomes: Vec<CriterionOutcome> = Vec::new();

    outcomes.extend(report::check_exact_identities());

    if let (Some(pot), Some(sec)) = (&config.potential, &config.spectrum) {
        let spec = pot.resolve(Some(sec.l))?;
        let ens = report::run_spectrum_ensemble(
            &spec,
            sec,
            &[PI, 2.0 * PI],
            config.runs,
            config.master_seed,
        );
        outcomes.extend(report::check_poisson_limit(&ens, tol, "poisson"));
        outcomes.push(report::check_phase_uniformity(&ens, tol, "uniformity"));
        outcomes.extend(report::check_theta_drift(&ens, tol, "drift"));
    }
    if let (Some(pot), Some(sec)) = (&config.potential, &config.jumpfield) {
        let spec = pot.resolve(Some(sec.n))?;
        let ens = report::run_jumpfield_ensemble(&spec, sec, config.runs, config.master_seed);
        outcomes.extend(report::check_jumpfield(&ens, tol));
    }
    if let (Some(sde), Some(sec)) = (&config.sde, &config.limitsde) {
        let (jumps, _) = report::run_marginal_ensemble(sde, sec, config.runs, config.master_seed);
        outcomes.push(report::check_marginal_intensity(
            &jumps,
            sde.lambda,
            sde.gamma,
            sec.s_bins,
            "marginal.intensity",
        ));
    }
    if let Some(sec) = &config.sinebeta {
        for &beta in &sec.betas {
            let (counts, _) =
                report::run_sine_beta_ensemble(sec, beta, config.runs, config.master_seed)?;
            if beta <= 0.2 {
                outcomes.extend(report::check_sine_beta(
                    &counts,
                    sec.window,
                    tol,
                    &format!("sinebeta[{beta}]"),
                ));
            } else {
                // rigid regime: counts concentrate, the dispersion drops
                // below the Poisson band
                let unsigned: Vec<u64> = counts.iter().map(|&c| c.max(0) as u64).collect();
                let expected = (sec.window.1 - sec.window.0) / (2.0 * PI);
                let d = crate::stats::poisson_dispersion(&unsigned, expected)?;
                outcomes.push(CriterionOutcome::new(
                    &format!("sinebeta[{beta}].rigidity"),
                    &format!("count dispersion below {} at beta = {beta}", tol.dispersion_lo),
                    format!("dispersion = {:.4}", d.statistic),
                    d.statistic < tol.dispersion_lo,
                ));
            }
        }
    }
    if let (Some(sde), Some(sec)) = (&config.sde, &config.explosion) {
        let (record, _) =
            report::run_explosion_ensemble(sde, sec, config.runs, config.master_seed)?;
        outcomes.extend(report::check_explosion(&record, sec, tol));
        let sandwich_cfg = SdeConfig { r0: 0.0, ..sde.clone() };
        outcomes.push(report::check_sandwich(
            &sandwich_cfg,
            1.0,
            50,
            config.master_seed,
        ));
    }

    let table = report::render_table(&outcomes);
    print!("{table}");
    let all_pass = outcomes.iter().all(|o| o.pass);
    let summary = json!({
        "mode": "report",
        "checks": outcomes,
        "all_pass": all_pass,
        "config_echo": config_echo(config),
        "timestamp": timestamp(),
    });
    let files = vec![write_artifact(
        &config.out_dir,
        "report.json",
        &serde_json::to_string_pretty(&summary)?,
    )?];
    Ok(RunArtifacts {
        summary,
        exit_code: if all_pass { 0 } else { 1 },
        files,
    })
}
