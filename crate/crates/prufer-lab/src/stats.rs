//! Distributional tests and diagnostic functionals for point-process
//! samples.
//!
//! Everything here is a pure function of its sample; permutation tests draw
//! their shuffles from a dedicated seeded stream, so identical samples give
//! identical reports. Kolmogorov–Smirnov p-values use the asymptotic
//! Kolmogorov distribution with the √n scaling; the suite-wide significance
//! floor is 0.01 and the Poisson dispersion band is [0.8, 1.2].

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::prufer::fractional;
use crate::rng::{stream_rng, StreamId};
use crate::special::{chi2_sf, kolmogorov_sf, ln_gamma};
use crate::{LabError, Result};

/// Significance floor shared by every p-valued test in the suite.
pub const SIGNIFICANCE: f64 = 0.01;
/// Index-of-dispersion acceptance band for Poisson counts.
pub const DISPERSION_BAND: (f64, f64) = (0.8, 1.2);

/// Atom configuration of one realization.
#[derive(Debug, Clone, Serialize)]
pub struct PointProcessSample {
    pub atoms: Vec<f64>,
    pub window: (f64, f64),
    pub realization: u64,
}

impl PointProcessSample {
    pub fn new(atoms: Vec<f64>, window: (f64, f64), realization: u64) -> Result<Self> {
        if atoms.windows(2).any(|w| w[1] < w[0]) {
            return Err(LabError::InvalidParameter("atoms must be sorted".into()));
        }
        if atoms
            .iter()
            .any(|&a| a < window.0 - 1e-9 || a > window.1 + 1e-9)
        {
            return Err(LabError::InvalidParameter(
                "atoms must lie inside the window".into(),
            ));
        }
        Ok(Self { atoms, window, realization })
    }

    /// Nearest-neighbour gaps.
    pub fn gaps(&self) -> Vec<f64> {
        self.atoms.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Outcome of one statistical test.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub n: usize,
    pub target: String,
    pub pass: bool,
}

impl TestReport {
    /// Standalone JSON object of the report with the configuration echoed
    /// alongside: `{test, statistic, p_value, n, target, pass, config_echo}`.
    pub fn to_json(&self, config_echo: serde_json::Value) -> serde_json::Value {
        serde_json::json!({
            "test": self.test,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n,
            "target": self.target,
            "pass": self.pass,
            "config_echo": config_echo,
        })
    }
}

fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Two-sided KS test of positive samples against Exp(rate).
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<TestReport> {
    if samples.is_empty() {
        return Err(LabError::EmptySample);
    }
    if !(rate > 0.0) {
        return Err(LabError::InvalidParameter("rate must be positive".into()));
    }
    if samples.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(LabError::InvalidParameter(
            "exponential samples must be non-negative".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = ks_statistic(&sorted, |x| 1.0 - (-rate * x).exp());
    let p = kolmogorov_sf((sorted.len() as f64).sqrt() * d);
    Ok(TestReport {
        test: "ks_exponential".into(),
        statistic: d,
        p_value: Some(p),
        n: sorted.len(),
        target: format!("Exp(rate = {rate})"),
        pass: p >= SIGNIFICANCE,
    })
}

/// Index of dispersion of counts plus a chi-square comparison of the count
/// histogram against Poisson(expected_mean).
pub fn poisson_dispersion(counts: &[u64], expected_mean: f64) -> Result<TestReport> {
    if counts.is_empty() {
        return Err(LabError::EmptySample);
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<u64>() as f64 / n;
    let target = format!("Poisson({expected_mean})");
    if mean == 0.0 {
        // all-zero counts: dispersion degenerates to 0
        return Ok(TestReport {
            test: "poisson_dispersion".into(),
            statistic: 0.0,
            p_value: None,
            n: counts.len(),
            target: format!("{target} [degenerate: zero mean]"),
            pass: false,
        });
    }
    let var = if counts.len() > 1 {
        counts
            .iter()
            .map(|&c| {
                let d = c as f64 - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let dispersion = var / mean;

    let p_value = if counts.len() >= 20 {
        Some(poisson_histogram_chi2(counts, expected_mean))
    } else {
        None
    };
    Ok(TestReport {
        test: "poisson_dispersion".into(),
        statistic: dispersion,
        p_value,
        n: counts.len(),
        target,
        pass: dispersion >= DISPERSION_BAND.0 && dispersion <= DISPERSION_BAND.1,
    })
}

// Chi-square p-value of the count histogram against the Poisson pmf, with
// tail bins pooled so every expected count is at least 5.
fn poisson_histogram_chi2(counts: &[u64], mu: f64) -> f64 {
    let n = counts.len() as f64;
    let max_count = *counts.iter().max().unwrap() as usize;
    let pmf = |k: usize| (-mu + k as f64 * mu.ln() - ln_gamma(k as f64 + 1.0)).exp();

    let mut observed: Vec<f64> = vec![0.0; max_count + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    let expected: Vec<f64> = (0..=max_count).map(|k| n * pmf(k)).collect();

    // pool adjacent values until each expected mass reaches 5, then fold
    // the open tail beyond max_count into the last bin
    let mut obs_bins: Vec<f64> = Vec::new();
    let mut exp_bins: Vec<f64> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for k in 0..=max_count {
        acc_obs += observed[k];
        acc_exp += expected[k];
        if acc_exp >= 5.0 {
            obs_bins.push(acc_obs);
            exp_bins.push(acc_exp);
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    let tail_exp = (n - exp_bins.iter().sum::<f64>()).max(0.0);
    let tail_obs = acc_obs;
    if tail_exp >= 5.0 || exp_bins.is_empty() {
        obs_bins.push(tail_obs);
        exp_bins.push(tail_exp.max(1e-9));
    } else {
        *obs_bins.last_mut().unwrap() += tail_obs;
        *exp_bins.last_mut().unwrap() += tail_exp;
    }
    if obs_bins.len() < 2 {
        return 1.0;
    }
    let chi2: f64 = obs_bins
        .iter()
        .zip(&exp_bins)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    chi2_sf(chi2, (obs_bins.len() - 1) as f64)
}

/// KS test of boundary phases against Uniform[0, π); the circular resultant
/// length is folded into the target description.
pub fn uniformity_test(phases: &[f64]) -> Result<TestReport> {
    if phases.is_empty() {
        return Err(LabError::EmptySample);
    }
    for &p in phases {
        if !(0.0..PI).contains(&p) {
            return Err(LabError::PhaseOutOfRange(p));
        }
    }
    let mut sorted = phases.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = ks_statistic(&sorted, |x| x / PI);
    let p = kolmogorov_sf((sorted.len() as f64).sqrt() * d);
    // phases live on a circle of circumference π
    let (mut s, mut c) = (0.0, 0.0);
    for &x in phases {
        s += (2.0 * x).sin();
        c += (2.0 * x).cos();
    }
    let resultant = (s * s + c * c).sqrt() / phases.len() as f64;
    Ok(TestReport {
        test: "uniformity".into(),
        statistic: d,
        p_value: Some(p),
        n: phases.len(),
        target: format!("Uniform[0, pi), resultant_length = {resultant:.4}"),
        pass: p >= SIGNIFICANCE,
    })
}

/// Pearson correlation of paired counts with a permutation p-value
/// (10⁴ shuffles from a fixed stream).
pub fn independence_test(pairs: &[(f64, f64)]) -> Result<TestReport> {
    if pairs.len() < 3 {
        return Err(LabError::EmptySample);
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(TestReport {
            test: "independence".into(),
            statistic: f64::NAN,
            p_value: None,
            n: pairs.len(),
            target: "zero correlation [degenerate: constant column]".into(),
            pass: false,
        });
    }
    let corr = sxy / (sxx * syy).sqrt();

    let mut rng = stream_rng(0x7065_726d, 0, StreamId::Permutation);
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let shuffles = 10_000;
    let mut extreme = 0usize;
    for _ in 0..shuffles {
        // Fisher-Yates
        for i in (1..ys.len()).rev() {
            let j = rng.random_range(0..=i);
            ys.swap(i, j);
        }
        let mut sxy_p = 0.0;
        let mut syy_p = 0.0;
        let my_p = ys.iter().sum::<f64>() / n;
        for (x, y) in xs.iter().zip(&ys) {
            sxy_p += (x - mx) * (y - my_p);
            syy_p += (y - my_p) * (y - my_p);
        }
        let corr_p = sxy_p / (sxx * syy_p).sqrt();
        if corr_p.abs() >= corr.abs() {
            extreme += 1;
        }
    }
    let p = (extreme + 1) as f64 / (shuffles + 1) as f64;
    Ok(TestReport {
        test: "independence".into(),
        statistic: corr,
        p_value: Some(p),
        n: pairs.len(),
        target: "zero correlation".into(),
        pass: p >= SIGNIFICANCE,
    })
}

/// Fraction of λ-jumps that have a λ′-jump within `tol`; vacuously 1 when
/// there are no λ-jumps. Under the nesting of the limiting atom sets this
/// tends to 1.
pub fn nesting_measure(jumps_lambda: &[f64], jumps_lambda_prime: &[f64], tol: f64) -> f64 {
    if jumps_lambda.is_empty() {
        return 1.0;
    }
    let mut sorted = jumps_lambda_prime.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut matched = 0usize;
    for &t in jumps_lambda {
        let i = sorted.partition_point(|&x| x < t);
        let near_right = i < sorted.len() && (sorted[i] - t).abs() <= tol;
        let near_left = i > 0 && (t - sorted[i - 1]).abs() <= tol;
        if near_left || near_right {
            matched += 1;
        }
    }
    matched as f64 / jumps_lambda.len() as f64
}

/// Ensemble-averaged fraction of time with `{Θ}_π ≥ threshold`.
///
/// Each item is a trajectory with its grid step.
pub fn time_above_threshold<'a>(
    paths: impl IntoIterator<Item = (&'a [f64], f64)>,
    threshold: f64,
) -> Result<f64> {
    if !(threshold > 0.0 && threshold < PI) {
        return Err(LabError::InvalidParameter(format!(
            "threshold must lie in (0, pi), got {threshold}"
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (values, _dt) in paths {
        if values.is_empty() {
            continue;
        }
        let above = values
            .iter()
            .filter(|&&v| fractional(v) >= threshold)
            .count();
        total += above as f64 / values.len() as f64;
        count += 1;
    }
    if count == 0 {
        return Err(LabError::EmptySample);
    }
    Ok(total / count as f64)
}

/// Ensemble-averaged fraction of time where the fractional phases are
/// misordered, `{Θ(λ′)}_π ≤ {Θ(λ)}_π` (ties count as misordered).
pub fn order_violation_measure<'a>(
    paths: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (lo, hi) in paths {
        if lo.len() != hi.len() {
            return Err(LabError::GridMismatch(
                "coupled trajectories must share a grid".into(),
            ));
        }
        if lo.is_empty() {
            continue;
        }
        let violations = lo
            .iter()
            .zip(hi)
            .filter(|(a, b)| fractional(**b) <= fractional(**a))
            .count();
        total += violations as f64 / lo.len() as f64;
        count += 1;
    }
    if count == 0 {
        return Err(LabError::EmptySample);
    }
    Ok(total / count as f64)
}

/// Binned atom-rate estimate with standard errors and a target overlay.
#[derive(Debug, Clone, Serialize)]
pub struct IntensityHistogram {
    pub edges: Vec<f64>,
    pub rate: Vec<f64>,
    pub std_error: Vec<f64>,
    pub target: Vec<f64>,
    pub realizations: usize,
}

impl IntensityHistogram {
    /// Bins whose estimate sits within `k` standard errors of the target.
    pub fn within_errors(&self, k: f64) -> usize {
        self.rate
            .iter()
            .zip(&self.std_error)
            .zip(&self.target)
            .filter(|((r, se), t)| (*r - *t).abs() <= k * se.max(1e-12))
            .count()
    }
}

/// Histogram intensity estimate across an ensemble of samples, compared to
/// a target intensity curve evaluated at the bin centres.
pub fn empirical_intensity(
    samples: &[PointProcessSample],
    bins: usize,
    target: impl Fn(f64) -> f64,
) -> Result<IntensityHistogram> {
    if samples.is_empty() || bins == 0 {
        return Err(LabError::EmptySample);
    }
    let window = samples[0].window;
    if samples.iter().any(|s| s.window != window) {
        return Err(LabError::GridMismatch(
            "samples disagree on the window".into(),
        ));
    }
    let m = samples.len() as f64;
    let width = (window.1 - window.0) / bins as f64;
    let mut counts = vec![0.0f64; bins];
    for s in samples {
        for &a in &s.atoms {
            let mut idx = ((a - window.0) / width) as usize;
            if idx >= bins {
                idx = bins - 1;
            }
            counts[idx] += 1.0;
        }
    }
    let edges: Vec<f64> = (0..=bins).map(|i| window.0 + i as f64 * width).collect();
    let rate: Vec<f64> = counts.iter().map(|c| c / (m * width)).collect();
    // Poisson error bars per bin
    let std_error: Vec<f64> = counts.iter().map(|c| c.sqrt() / (m * width)).collect();
    let target: Vec<f64> = (0..bins)
        .map(|i| target(window.0 + (i as f64 + 0.5) * width))
        .collect();
    Ok(IntensityHistogram {
        edges,
        rate,
        std_error,
        target,
        realizations: samples.len(),
    })
}
