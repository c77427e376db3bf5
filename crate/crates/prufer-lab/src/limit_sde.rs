//! Limiting stochastic differential equations.
//!
//! Three families of diffusions appear in the large-box limit of the
//! relative Prüfer phase:
//!
//! * the coupled phase SDE
//!   `dα_t(λ) = λ (β/4) e^{-βt/4} dt + Re[(e^{iα}-1) dZ_t]`, whose terminal
//!   winding numbers define the β-ensemble bulk point process and degenerate
//!   to Poisson as β → 0;
//! * the reduced relative-phase SDE
//!   `dΘ_t = λ dt + n^{1/2-α} Re[(e^{2iΘ}-1) t^{-α} dZ_t]` on `t ∈ [0,1]`;
//! * the log-tan diffusion `R = log tan(Θ/2)` with drift
//!   `λ_eff(t) cosh R + (C²/2) tanh R` and additive noise `C dW`, whose
//!   explosions to +∞ (restarting at -∞) are the phase wraps through π, and
//!   its stationary envelope approximations `S_±` built from widened
//!   (`δ`) and tilted (`ε`) cosh/tanh envelopes.
//!
//! Explosion is modelled by a threshold `r_cap`; from there the cosh drift
//! blows up in a time far below the step size, so the truncation sits below
//! time resolution. The integrator applies the Brownian increment of each
//! step as a single kick and then integrates the frozen-noise drift flow
//! with adaptive substeps short enough to keep the one-step map monotone.
//! Processes sharing a noise stream therefore consume identical increments
//! and pathwise comparisons between them are meaningful; explosion times are
//! resolved inside the step (bias below one step).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, StreamId};
use crate::{LabError, Result};

/// Drift safety factors of the substep flow: `1 + f'·h` stays positive.
const SLOPE_SAFETY: f64 = 0.2;
const MOVE_CAP: f64 = 0.4;

/// Start of the reduced-phase integration; the `t^{-α}` noise factor is
/// integrable there and the discarded interval contributes `O(t_floor^{1-α})`.
const T_FLOOR: f64 = 1e-3;

/// Parameters of the limiting diffusions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdeConfig {
    /// Diffusion scale `C_n`.
    pub c_n: f64,
    pub lambda: f64,
    /// `γ = 1/(1-2α) > 1`.
    pub gamma: f64,
    /// Envelope half-width δ ≥ 0.
    pub delta: f64,
    /// Envelope tilt ε ∈ [0, 1).
    pub epsilon: f64,
    pub dt: f64,
    /// Explosion threshold; restart happens at `-r_cap`.
    pub r_cap: f64,
    /// Initial value of threshold diffusions.
    pub r0: f64,
    /// Override of the model noise amplitude (0 switches noise off).
    pub noise_scale: Option<f64>,
    /// Variance convention of the complex Brownian motion `Z = X + iY`:
    /// `E|dZ|² = complex_bm_variance · dt`. The default 2 takes X and Y to
    /// be independent standard Brownian motions.
    pub complex_bm_variance: f64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        Self {
            c_n: 20.0,
            lambda: PI,
            gamma: 2.5,
            delta: 0.0,
            epsilon: 0.0,
            dt: 1e-4,
            r_cap: 15.0,
            r0: 0.0,
            noise_scale: None,
            complex_bm_variance: 2.0,
        }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(LabError::InvalidParameter(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.delta >= 0.0) || !(self.epsilon >= 0.0) || self.epsilon >= 1.0 {
            return Err(LabError::InvalidParameter(format!(
                "need delta >= 0 and epsilon in [0, 1), got delta = {}, epsilon = {}",
                self.delta, self.epsilon
            )));
        }
        if !(self.r_cap > 0.0) || !(self.dt > 0.0) || !(self.c_n > 0.0) {
            return Err(LabError::InvalidParameter(
                "c_n, dt and r_cap must be positive".into(),
            ));
        }
        if !(self.complex_bm_variance > 0.0) {
            return Err(LabError::InvalidParameter(
                "complex_bm_variance must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `γ = 1/(1-2α)` for a sub-critical decay exponent.
    pub fn gamma_from_alpha(alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(LabError::InvalidParameter(format!(
                "gamma is defined for alpha in (0, 1/2), got {alpha}"
            )));
        }
        Ok(1.0 / (1.0 - 2.0 * alpha))
    }

    /// Diffusion scale from the operator constants:
    /// `C_n = (1/κ₀) (⟨ψ⟩/2)^{1/2} γ^{1/2} n^{1/(2γ)}`.
    pub fn c_n_from_constants(kappa0: f64, psi_mean: f64, gamma: f64, n: f64) -> f64 {
        (psi_mean / 2.0).sqrt() / kappa0 * gamma.sqrt() * n.powf(1.0 / (2.0 * gamma))
    }

    /// Envelope width and tilt `δ = c n^{-α}`, `ε = c n^{-(j₀α-1)}` with
    /// `j₀ = min{ j : 1 - jα < 0 }`.
    pub fn envelope_widths(n: f64, alpha: f64, c: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(LabError::InvalidParameter(format!(
                "envelope widths need alpha in (0, 1/2), got {alpha}"
            )));
        }
        let j0 = (1.0 / alpha).floor() as i64 + 1;
        let beta_exp = j0 as f64 * alpha - 1.0;
        Ok((c * n.powf(-alpha), c * n.powf(-beta_exp)))
    }
}

/// Which diffusion produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdeKind {
    SineBeta,
    RelativePhase,
    Riccati,
    StationaryPlus,
    StationaryMinus,
}

/// Time factor in the log-tan drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimePower {
    /// Constant coefficient 1 (the stationary-comparison regime).
    Uniform,
    /// `γ t^{γ-1}`, the time-changed drift of the full diffusion.
    GammaPower,
}

/// Discretized trajectory with explosion bookkeeping.
///
/// For the phase-type kinds the `explosions` list holds the first-passage
/// times of the levels `kπ` (the analogue of an explosion in log-tan
/// coordinates).
#[derive(Debug, Clone)]
pub struct SdePath {
    pub kind: SdeKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub explosions: Vec<f64>,
    /// Restarts performed (equals `explosions.len()` for threshold kinds).
    pub restarts: usize,
}

impl SdePath {
    pub fn first_explosion(&self) -> Option<f64> {
        self.explosions.first().copied()
    }

    /// CSV dump `t,value`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Envelope selector for [`envelope`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    CoshPlus,
    CoshMinus,
    TanhPlusEps,
    TanhMinusEps,
}

/// Closed forms of the drift envelopes:
/// `cosh_±` are the sup/inf of cosh over `|s-r| < δ`, `tanh_{±,ε}` the
/// shifted tanh with the ε-tilt switching sides at `r = ∓δ`.
pub fn envelope(kind: EnvelopeKind, r: f64, delta: f64, epsilon: f64) -> f64 {
    debug_assert!(delta >= 0.0 && (0.0..1.0).contains(&epsilon));
    match kind {
        EnvelopeKind::CoshPlus => (r.abs() + delta).cosh(),
        EnvelopeKind::CoshMinus => (r.abs() - delta).max(0.0).cosh(),
        EnvelopeKind::TanhPlusEps => {
            let base = (r + delta).tanh();
            if r > -delta {
                (1.0 + epsilon) * base
            } else {
                (1.0 - epsilon) * base
            }
        }
        EnvelopeKind::TanhMinusEps => {
            let base = (r - delta).tanh();
            if r > delta {
                (1.0 - epsilon) * base
            } else {
                (1.0 + epsilon) * base
            }
        }
    }
}

/// Sign of the stationary envelope approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeSign {
    Plus,
    Minus,
}

// Drift and a local bound on its r-slope, used to size monotone substeps.
trait ThresholdDrift {
    fn drift_and_slope(&self, r: f64, time_factor: f64) -> (f64, f64);
}

struct PlainDrift {
    lambda: f64,
    half_c2: f64,
}

impl ThresholdDrift for PlainDrift {
    #[inline]
    fn drift_and_slope(&self, r: f64, time_factor: f64) -> (f64, f64) {
        let lam = self.lambda * time_factor;
        let ch = if lam != 0.0 { r.cosh() } else { 0.0 };
        (lam * ch + self.half_c2 * r.tanh(), lam * ch + self.half_c2)
    }
}

struct EnvelopeDrift {
    lambda: f64,
    half_c2: f64,
    delta: f64,
    epsilon: f64,
    sign: EnvelopeSign,
}

impl ThresholdDrift for EnvelopeDrift {
    #[inline]
    fn drift_and_slope(&self, r: f64, _time_factor: f64) -> (f64, f64) {
        let (cosh_kind, tanh_kind, tilt) = match self.sign {
            EnvelopeSign::Plus => (EnvelopeKind::CoshPlus, EnvelopeKind::TanhPlusEps, 1.0 + self.epsilon),
            EnvelopeSign::Minus => (EnvelopeKind::CoshMinus, EnvelopeKind::TanhMinusEps, 1.0 - self.epsilon),
        };
        let ch = envelope(cosh_kind, r, self.delta, self.epsilon);
        let th = envelope(tanh_kind, r, self.delta, self.epsilon);
        let lam = self.lambda * tilt;
        // |d/dr cosh_±| <= cosh_+(r) and |d/dr tanh_{±,ε}| <= 1+ε.
        let slope = self.lambda * (1.0 + self.epsilon) * (r.abs() + self.delta).cosh()
            + self.half_c2 * (1.0 + self.epsilon);
        (lam * ch + self.half_c2 * th, slope)
    }
}

/// Integrate the frozen-noise drift flow over `dt` with substeps small
/// enough that every substep map is monotone in the state. Returns the new
/// state and any explosion offsets (threshold crossings restart at -r_cap).
fn drift_flow<D: ThresholdDrift>(
    drift: &D,
    mut r: f64,
    time_factor: f64,
    dt: f64,
    r_cap: f64,
    mut on_explosion: impl FnMut(f64),
) -> f64 {
    let mut remaining = dt;
    while remaining > 0.0 {
        if r >= r_cap {
            on_explosion(dt - remaining);
            r = -r_cap;
        }
        let (f, slope) = drift.drift_and_slope(r, time_factor);
        let mut h = (SLOPE_SAFETY / slope.max(1e-12)).min(remaining);
        let step = f * h;
        if step.abs() > MOVE_CAP {
            h *= MOVE_CAP / step.abs();
        }
        r += f * h;
        remaining -= h;
    }
    if r >= r_cap {
        on_explosion(dt);
        r = -r_cap;
    }
    r
}

struct ThresholdRun {
    values: Vec<f64>,
    times: Vec<f64>,
    explosions: Vec<f64>,
}

fn run_threshold_diffusion<D: ThresholdDrift>(
    drift: &D,
    cfg: &SdeConfig,
    time_power: TimePower,
    horizon: f64,
    seed: (u64, u64),
    record: bool,
    stop_at_first_explosion: bool,
) -> Result<ThresholdRun> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let dt = cfg.dt;
    let steps = (horizon / dt).ceil() as usize;
    let noise_amp = cfg.noise_scale.unwrap_or(cfg.c_n);
    let sigma = noise_amp * dt.sqrt();
    let mut rng = stream_rng(seed.0, seed.1, StreamId::SdeNoise);

    let mut r = cfg.r0;
    let mut values = Vec::new();
    let mut times = Vec::new();
    if record {
        values.reserve(steps + 1);
        times.reserve(steps + 1);
        values.push(r);
        times.push(0.0);
    }
    let mut explosions = Vec::new();

    for j in 0..steps {
        let t = j as f64 * dt;
        let time_factor = match time_power {
            TimePower::Uniform => 1.0,
            TimePower::GammaPower => cfg.gamma * t.max(T_FLOOR).powf(cfg.gamma - 1.0),
        };
        let z: f64 = rng.sample(StandardNormal);
        r += sigma * z;
        r = drift_flow(drift, r, time_factor, dt, cfg.r_cap, |offset| {
            explosions.push(t + offset);
        });
        if record {
            values.push(r);
            times.push(t + dt);
        }
        if stop_at_first_explosion && !explosions.is_empty() {
            break;
        }
    }
    Ok(ThresholdRun { values, times, explosions })
}

/// Log-tan diffusion `dR = (λ·f(t)·cosh R + (C²/2) tanh R) dt + C dW` with
/// explosion/restart bookkeeping.
pub fn simulate_riccati(
    config: &SdeConfig,
    time_power: TimePower,
    horizon: f64,
    seed: (u64, u64),
) -> Result<SdePath> {
    let drift = PlainDrift {
        lambda: config.lambda,
        half_c2: 0.5 * config.c_n * config.c_n,
    };
    let run = run_threshold_diffusion(&drift, config, time_power, horizon, seed, true, false)?;
    Ok(SdePath {
        kind: SdeKind::Riccati,
        times: run.times,
        restarts: run.explosions.len(),
        values: run.values,
        explosions: run.explosions,
    })
}

/// Stationary approximation `S_±` with envelope drift and unit time factor.
pub fn simulate_stationary(
    config: &SdeConfig,
    sign: EnvelopeSign,
    horizon: f64,
    seed: (u64, u64),
) -> Result<SdePath> {
    let drift = EnvelopeDrift {
        lambda: config.lambda,
        half_c2: 0.5 * config.c_n * config.c_n,
        delta: config.delta,
        epsilon: config.epsilon,
        sign,
    };
    let run = run_threshold_diffusion(&drift, config, TimePower::Uniform, horizon, seed, true, false)?;
    Ok(SdePath {
        kind: match sign {
            EnvelopeSign::Plus => SdeKind::StationaryPlus,
            EnvelopeSign::Minus => SdeKind::StationaryMinus,
        },
        times: run.times,
        restarts: run.explosions.len(),
        values: run.values,
        explosions: run.explosions,
    })
}

/// First explosion time of `S_±` started from `config.r0`, or `None` if it
/// does not explode before `max_time`.
pub fn first_explosion_time(
    config: &SdeConfig,
    sign: EnvelopeSign,
    max_time: f64,
    seed: (u64, u64),
) -> Result<Option<f64>> {
    let drift = EnvelopeDrift {
        lambda: config.lambda,
        half_c2: 0.5 * config.c_n * config.c_n,
        delta: config.delta,
        epsilon: config.epsilon,
        sign,
    };
    let run =
        run_threshold_diffusion(&drift, config, TimePower::Uniform, max_time, seed, false, true)?;
    Ok(run.explosions.first().copied())
}

/// Coupled phase family: one driving complex noise, one path per λ.
#[derive(Debug, Clone)]
pub struct SineBetaFamily {
    pub lambdas: Vec<f64>,
    pub paths: Vec<SdePath>,
    /// Terminal phases snapped to the nearest multiple of 2π.
    pub snapped: Vec<f64>,
    /// Distance of each terminal phase from 2πZ.
    pub snap_distance: Vec<f64>,
    /// Set when more than 5% of the paths ended farther than 0.5 from 2πZ,
    /// i.e. the horizon was too short for the windings to settle.
    pub convergence_warning: bool,
}

impl SineBetaFamily {
    /// Point-process count on `[λ_i, λ_j]`: `(α_∞(λ_j) - α_∞(λ_i)) / 2π`.
    pub fn count(&self, i: usize, j: usize) -> i64 {
        ((self.snapped[j] - self.snapped[i]) / (2.0 * PI)).round() as i64
    }
}

/// Simulate the coupled phase SDE for all λ on one complex noise stream.
pub fn simulate_sine_beta(
    beta: f64,
    lambdas: &[f64],
    horizon: f64,
    dt: f64,
    seed: (u64, u64),
) -> Result<SineBetaFamily> {
    simulate_sine_beta_with(beta, lambdas, horizon, dt, seed, 2.0, true)
}

/// Variant exposing the complex-noise variance convention and optional path
/// recording (ensembles only need terminals).
pub fn simulate_sine_beta_with(
    beta: f64,
    lambdas: &[f64],
    horizon: f64,
    dt: f64,
    seed: (u64, u64),
    complex_bm_variance: f64,
    record: bool,
) -> Result<SineBetaFamily> {
    if !(beta > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(LabError::InvalidParameter(
            "horizon and dt must be positive".into(),
        ));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(LabError::InvalidParameter(
            "lambdas must be sorted".into(),
        ));
    }
    let steps = (horizon / dt).ceil() as usize;
    let m = lambdas.len();
    let mut rng = stream_rng(seed.0, seed.1, StreamId::SdeNoise);
    let sigma = (0.5 * complex_bm_variance * dt).sqrt();

    let mut alphas = vec![0.0f64; m];
    let mut records: Vec<Vec<f64>> = if record {
        alphas.iter().map(|&a| vec![a]).collect()
    } else {
        Vec::new()
    };

    let quarter_beta = 0.25 * beta;
    for j in 0..steps {
        let t = j as f64 * dt;
        let drift_base = quarter_beta * (-quarter_beta * t).exp() * dt;
        let dx = sigma * rng.sample::<f64, _>(StandardNormal);
        let dy = sigma * rng.sample::<f64, _>(StandardNormal);
        for (i, a) in alphas.iter_mut().enumerate() {
            // Re[(e^{iα}-1) dZ] with dZ = dX + i dY.
            let (s, c) = a.sin_cos();
            *a += lambdas[i] * drift_base + (c - 1.0) * dx - s * dy;
        }
        if record {
            for (rec, &a) in records.iter_mut().zip(&alphas) {
                rec.push(a);
            }
        }
    }

    let tau = 2.0 * PI;
    let snapped: Vec<f64> = alphas.iter().map(|a| (a / tau).round() * tau).collect();
    let snap_distance: Vec<f64> = alphas
        .iter()
        .zip(&snapped)
        .map(|(a, s)| (a - s).abs())
        .collect();
    let stray = snap_distance.iter().filter(|&&d| d > 0.5).count();
    let convergence_warning = (stray as f64) > 0.05 * m as f64;

    let times: Vec<f64> = if record {
        (0..=steps).map(|j| j as f64 * dt).collect()
    } else {
        Vec::new()
    };
    let paths = if record {
        records
            .into_iter()
            .map(|values| SdePath {
                kind: SdeKind::SineBeta,
                times: times.clone(),
                values,
                explosions: Vec::new(),
                restarts: 0,
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(SineBetaFamily {
        lambdas: lambdas.to_vec(),
        paths,
        snapped,
        snap_distance,
        convergence_warning,
    })
}

/// Reduced relative-phase SDE on `t ∈ [t_floor, horizon]`, with the level
/// first-passage times recorded in `explosions`.
pub fn simulate_relative_phase(
    config: &SdeConfig,
    alpha: f64,
    n: f64,
    horizon: f64,
    seed: (u64, u64),
) -> Result<SdePath> {
    let (values, times, jumps) =
        reduced_phase_core(config, alpha, n, horizon, seed, true)?;
    Ok(SdePath {
        kind: SdeKind::RelativePhase,
        times,
        values,
        explosions: jumps,
        restarts: 0,
    })
}

/// Jump times only; the ensemble runner for the marginal statistics.
pub fn reduced_phase_jump_times(
    config: &SdeConfig,
    alpha: f64,
    n: f64,
    horizon: f64,
    seed: (u64, u64),
) -> Result<Vec<f64>> {
    let (_, _, jumps) = reduced_phase_core(config, alpha, n, horizon, seed, false)?;
    Ok(jumps)
}

fn reduced_phase_core(
    config: &SdeConfig,
    alpha: f64,
    n: f64,
    horizon: f64,
    seed: (u64, u64),
    record: bool,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    config.validate()?;
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(LabError::InvalidParameter(format!(
            "reduced phase SDE needs alpha in (0, 1/2), got {alpha}"
        )));
    }
    if !(n > 0.0) || !(horizon > T_FLOOR) {
        return Err(LabError::InvalidParameter(
            "need n > 0 and horizon > t_floor".into(),
        ));
    }
    let lambda = config.lambda;
    let dt = config.dt;
    let scale = config.noise_scale.unwrap_or_else(|| n.powf(0.5 - alpha));
    let sigma = (0.5 * config.complex_bm_variance * dt).sqrt();
    let mut rng = stream_rng(seed.0, seed.1, StreamId::SdeNoise);

    // Drift-only start: Θ(t_floor) = λ t_floor.
    let mut theta = lambda * T_FLOOR;
    let steps = ((horizon - T_FLOOR) / dt).ceil() as usize;
    let mut values = Vec::new();
    let mut times = Vec::new();
    if record {
        values.reserve(steps + 1);
        times.reserve(steps + 1);
        values.push(theta);
        times.push(T_FLOOR);
    }
    let mut jumps = Vec::new();
    let mut reached = (theta / PI).floor() as i64;

    for j in 0..steps {
        let t = T_FLOOR + j as f64 * dt;
        let noise = scale * t.powf(-alpha);
        let dx = sigma * rng.sample::<f64, _>(StandardNormal);
        let dy = sigma * rng.sample::<f64, _>(StandardNormal);
        let (s2, c2) = (2.0 * theta).sin_cos();
        theta += lambda * dt + noise * ((c2 - 1.0) * dx - s2 * dy);
        let lev = (theta / PI).floor() as i64;
        if lev > reached {
            let passage = t + dt;
            for _ in (reached + 1)..=lev {
                jumps.push(passage);
            }
            reached = lev;
        }
        if record {
            values.push(theta);
            times.push(t + dt);
        }
    }
    Ok((values, times, jumps))
}
