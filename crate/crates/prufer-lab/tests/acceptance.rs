//! Acceptance battery: one test per criterion, each printing a PASS/FAIL
//! line per check (run with `--nocapture` to see them on success).
//!
//! The distributional targets are asymptotic statements; several checks pin
//! desk-scale parameters that turn out to sit outside the asymptotic
//! regime of this model (the effective stiffness at `E₀ = 1, F = 2cos x`
//! is `β(E₀) = 17`, so an `8π` window at `L = 400` is still rigid). Those
//! checks are implemented exactly as stated and are expected to fail; the
//! `supplement_*` tests document that the same pipeline approaches the
//! limiting statistics monotonically as the scale grows. See the README's
//! acceptance notes.

mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use prufer_lab::config::{
    ExplosionSection, JumpFieldSection, LimitCheck, LimitSdeSection, SineBetaSection,
    SpectrumSection, Tolerances,
};
use prufer_lab::limit_sde::SdeConfig;
use prufer_lab::prufer::default_phase_dt;
use prufer_lab::report::*;
use prufer_lab::spectrum::count_below;
use prufer_lab::stats::ks_exponential;
use prufer_lab::torus::{PathSeed, PotentialSpec};

const MASTER_SEED: u64 = 42;

fn tolerances() -> Tolerances {
    Tolerances::default()
}

fn spectrum_section(l: f64) -> SpectrumSection {
    SpectrumSection {
        e0: 1.0,
        l,
        window: (0.0, 8.0 * PI),
        dt: None,
    }
}

/// Poisson-window ensemble: α = 0.3, F = 2 cos x, E₀ = 1, L = 400, M = 200,
/// with terminal relative phases at λ = π, 2π for the drift check.
fn alpha03_ensemble() -> &'static SpectrumEnsemble {
    static ENS: OnceLock<SpectrumEnsemble> = OnceLock::new();
    ENS.get_or_init(|| {
        let spec = PotentialSpec::cosine(0.3).expect("valid potential");
        run_spectrum_ensemble(
            &spec,
            &spectrum_section(400.0),
            &[PI, 2.0 * PI],
            200,
            MASTER_SEED,
        )
    })
}

fn assert_all(outcomes: &[CriterionOutcome]) {
    for o in outcomes {
        o.print_line();
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.pass)
        .map(|o| o.id.as_str())
        .collect();
    assert!(failed.is_empty(), "failed checks: {failed:?}");
}

#[test]
fn criterion_01_poisson_limit_of_the_eigenvalue_process() {
    let ens = alpha03_ensemble();
    assert!(ens.skipped.is_empty(), "skipped realizations: {:?}", ens.skipped);
    let outcomes = check_poisson_limit(ens, &tolerances(), "criterion1");
    // mean count is attainable at this scale; the dispersion band and the
    // exponential gap law need the asymptotic regime (see module docs)
    assert_all(&outcomes);
}

#[test]
fn criterion_02_boundary_phase_uniformity() {
    let outcome = check_phase_uniformity(alpha03_ensemble(), &tolerances(), "criterion2");
    assert_all(&[outcome]);
}

#[test]
fn criterion_03_relative_phase_drift() {
    let outcomes = check_theta_drift(alpha03_ensemble(), &tolerances(), "criterion3");
    assert_all(&outcomes);
}

#[test]
fn criterion_04_two_dimensional_jump_field() {
    let spec = PotentialSpec::cosine(0.3).expect("valid potential");
    let sec = JumpFieldSection {
        e0: 1.0,
        n: 400.0,
        lambda_max: 4.0 * PI,
        lambda_cells: 4,
        t_cells: 4,
        dt: None,
    };
    let ens = run_jumpfield_ensemble(&spec, &sec, 400, MASTER_SEED);
    assert!(ens.skipped.is_empty());
    let outcomes = check_jumpfield(&ens, &tolerances());
    assert_all(&outcomes);
}

#[test]
fn criterion_05_marginal_jump_intensity() {
    // the box-size exponent is free here; n = 1e5 sits inside the regime
    // where the first-passage deficit at early times has died out
    let sde = SdeConfig {
        lambda: PI,
        gamma: 2.5,
        dt: 1e-6,
        ..SdeConfig::default()
    };
    let sec = LimitSdeSection {
        alpha: 0.3,
        n: 1e5,
        horizon: 1.0,
        s_bins: 8,
    };
    let (jumps, skipped) = run_marginal_ensemble(&sde, &sec, 500, MASTER_SEED);
    assert!(skipped.is_empty());
    let outcome = check_marginal_intensity(&jumps, sde.lambda, sde.gamma, sec.s_bins, "criterion5");
    assert_all(&[outcome]);
}

#[test]
fn criterion_06_explosion_time_statistics() {
    let sde = SdeConfig {
        c_n: 20.0,
        lambda: PI,
        delta: 0.01,
        epsilon: 0.01,
        dt: 1e-4,
        r0: -15.0,
        ..SdeConfig::default()
    };
    let sec = ExplosionSection {
        max_time: 60.0,
        xi: vec![0.5, 1.0, 2.0],
        limit_check: Some(LimitCheck { c_n: 50.0, r: -8.0 }),
    };
    let (record, skipped) =
        run_explosion_ensemble(&sde, &sec, 2000, MASTER_SEED).expect("quadrature converges");
    assert!(skipped.is_empty(), "unexploded runs: {}", skipped.len());
    let outcomes = check_explosion(&record, &sec, &tolerances());
    assert_all(&outcomes);
}

#[test]
fn criterion_07_pathwise_sandwich() {
    let sde = SdeConfig {
        c_n: 20.0,
        lambda: PI,
        delta: 0.01,
        epsilon: 0.01,
        dt: 1e-4,
        r0: 0.0,
        ..SdeConfig::default()
    };
    let outcome = check_sandwich(&sde, 1.0, 50, MASTER_SEED);
    assert_all(&[outcome]);
}

#[test]
fn criterion_08_small_beta_poissonization() {
    let sec = SineBetaSection {
        betas: vec![0.05],
        window: (0.0, 8.0 * PI),
        horizon: 400.0,
        dt: 0.01,
    };
    let (counts, warning_fraction) =
        run_sine_beta_ensemble(&sec, 0.05, 2000, MASTER_SEED).expect("simulation runs");
    assert!(
        warning_fraction < 0.05,
        "horizon too short: {warning_fraction:.3} of paths unsettled"
    );
    let outcomes = check_sine_beta(&counts, sec.window, &tolerances(), "criterion8");
    assert_all(&outcomes);
}

#[test]
fn criterion_09_regime_contrast() {
    // super-critical decay concentrates the gaps near π: the exponential
    // gap law must be rejected there while the sub-critical run passes
    let spec = PotentialSpec::cosine(0.7).expect("valid potential");
    let clock = run_spectrum_ensemble(&spec, &spectrum_section(400.0), &[], 100, MASTER_SEED);
    assert!(clock.skipped.is_empty());
    let clock_ks = ks_exponential(&clock.pooled_gaps(), 1.0 / PI).expect("gaps exist");
    let clock_p = clock_ks.p_value.unwrap_or(1.0);

    let poisson_ks =
        ks_exponential(&alpha03_ensemble().pooled_gaps(), 1.0 / PI).expect("gaps exist");
    let poisson_p = poisson_ks.p_value.unwrap_or(0.0);

    let reject_clock = clock_p < 0.01;
    let pass_poisson = poisson_p >= 0.01;
    let outcomes = [
        CriterionOutcome::new(
            "criterion9.clock_rejected",
            "α = 0.7 gap law rejected at significance 0.01",
            format!("D = {:.4}, p = {clock_p:.6}", clock_ks.statistic),
            reject_clock,
        ),
        CriterionOutcome::new(
            "criterion9.poisson_passes",
            "α = 0.3 gap law accepted at significance 0.01",
            format!("D = {:.4}, p = {poisson_p:.6}", poisson_ks.statistic),
            pass_poisson,
        ),
    ];
    assert_all(&outcomes);
}

#[test]
fn criterion_10_exact_identities() {
    let mut outcomes = check_exact_identities();

    // oscillation counts against the dense matrix oracle, 20 seeds
    let spec = PotentialSpec::cosine(0.3).expect("valid potential");
    let l = 50.0;
    let dt = default_phase_dt(l, 1.0);
    let mut worst = 0i64;
    for seed in 0..20u64 {
        let path = spec
            .sample_path(l, dt, PathSeed::new(1234, seed))
            .expect("path samples");
        let phase_count = count_below(&path, &spec, l, 1.0).expect("count");
        let fd_count = common::dirichlet_count_below(&path, &spec, l, 1.0, 200_000) as i64;
        worst = worst.max((phase_count - fd_count).abs());
    }
    outcomes.push(CriterionOutcome::new(
        "identity.fd_oracle",
        "oscillation count matches the dense matrix oracle within ±1 on 20 seeds",
        format!("largest deviation = {worst}"),
        worst <= 1,
    ));
    assert_all(&outcomes);
}

#[test]
fn criterion_11_diagnostic_trends() {
    let spec = PotentialSpec::cosine(0.3).expect("valid potential");
    let mut points = Vec::new();
    for n in [100.0, 1_000.0, 10_000.0] {
        points.push(
            run_diagnostic_point(&spec, 1.0, n, PI, 2.0 * PI, 0.5, 200, MASTER_SEED)
                .expect("diagnostic ensemble"),
        );
    }
    let outcomes = check_trends(&points);
    assert_all(&outcomes);
}

// ---------------------------------------------------------------------------
// supplements: monotone approach to the limiting statistics
// ---------------------------------------------------------------------------

#[test]
fn supplement_poissonization_trend_in_box_size() {
    // the desk-scale window of criterion 1 is rigid; growing the box moves
    // the count dispersion toward 1 and the gap law toward Exp(1/π)
    let spec = PotentialSpec::cosine(0.3).expect("valid potential");
    let small = alpha03_ensemble();
    let large = run_spectrum_ensemble(&spec, &spectrum_section(1e5), &[], 120, MASTER_SEED);
    assert!(large.skipped.is_empty());

    let dispersion = |ens: &SpectrumEnsemble| {
        let counts = ens.counts();
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<u64>() as f64 / n;
        counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / ((n - 1.0) * mean)
    };
    let (d_small, d_large) = (dispersion(small), dispersion(&large));
    let ks_small = ks_exponential(&small.pooled_gaps(), 1.0 / PI)
        .expect("gaps")
        .statistic;
    let ks_large = ks_exponential(&large.pooled_gaps(), 1.0 / PI)
        .expect("gaps")
        .statistic;

    let outcomes = [
        CriterionOutcome::new(
            "supplement.dispersion_trend",
            "count dispersion rises toward 1 as the box grows (L = 400 → 1e5)",
            format!("{d_small:.3} → {d_large:.3}"),
            d_large > d_small,
        ),
        CriterionOutcome::new(
            "supplement.gap_distance_trend",
            "KS distance to Exp(1/π) falls as the box grows",
            format!("{ks_small:.3} → {ks_large:.3}"),
            ks_large < ks_small,
        ),
    ];
    assert_all(&outcomes);
}

#[test]
fn supplement_sine_beta_dispersion_trend() {
    // the coupled-phase counts Poissonize as β → 0
    let mut dispersions = Vec::new();
    for (beta, horizon) in [(0.2, 400.0), (0.05, 400.0), (0.02, 1000.0)] {
        let sec = SineBetaSection {
            betas: vec![beta],
            window: (0.0, 8.0 * PI),
            horizon,
            dt: 0.01,
        };
        let (counts, _) =
            run_sine_beta_ensemble(&sec, beta, 600, MASTER_SEED).expect("simulation runs");
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<i64>() as f64 / n;
        let var = counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        dispersions.push(var / mean);
    }
    let outcome = CriterionOutcome::new(
        "supplement.sine_beta_trend",
        "count dispersion rises toward 1 as β falls (0.2, 0.05, 0.02)",
        format!("{dispersions:.3?}"),
        dispersions.windows(2).all(|w| w[1] > w[0]) && dispersions[2] < 1.1,
    );
    assert_all(&[outcome]);
}
