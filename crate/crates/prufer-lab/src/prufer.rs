//! Prüfer phase integration.
//!
//! For `H x = κ² x` the phase `θ_t(κ)` of the solution vector
//! `(x, x'/κ)` obeys
//!
//! ```text
//! dθ/dt = κ - (a(t) F(X_t) / κ) sin² θ,    θ_0 = 0,
//! ```
//!
//! which is integrated with a Heun step on piecewise-constant noise (the
//! driving path is Hölder-½, so higher order buys nothing). All wavenumbers
//! of one realization share a single [`NoisePath`], which is what couples the
//! relative phases `Θ_L(λ) = θ_L(κ₀ + λ/L) - θ_L(κ₀)` across λ.

use std::f64::consts::PI;
use std::io::Write;

use crate::torus::{NoisePath, PotentialSpec};
use crate::{LabError, Result};

/// Default integration step for a box of length `l`: `l·10⁻⁵` per unit
/// wavenumber, so a box is always resolved by ~10⁵ steps.
pub fn default_phase_dt(l: f64, kappa_max: f64) -> f64 {
    l * 1e-5 / kappa_max.max(1.0)
}

#[inline]
fn sin_sq(theta: f64) -> f64 {
    0.5 * (1.0 - (2.0 * theta).cos())
}

/// Right-hand side of the phase equation at frozen noise value `af = a·F`.
#[inline]
pub fn phase_drift(theta: f64, kappa: f64, af: f64) -> f64 {
    kappa - af / kappa * sin_sq(theta)
}

// sin/cos of a step-sized angle: Taylor through x⁷/x⁸ (exact to f64 for
// |x| ≤ 0.05), library call otherwise.
#[inline]
fn rot(x: f64) -> (f64, f64) {
    if x.abs() < 0.05 {
        let x2 = x * x;
        let s = x * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0)));
        let c = 1.0 - x2 * 0.5 * (1.0 - x2 / 12.0 * (1.0 - x2 / 30.0 * (1.0 - x2 / 56.0)));
        (s, c)
    } else {
        x.sin_cos()
    }
}

// Integrator state: the phase plus sin/cos of 2θ, advanced by exact
// rotations so the hot loop never range-reduces a large angle.
#[derive(Debug, Clone, Copy)]
struct PhaseState {
    theta: f64,
    sin2: f64,
    cos2: f64,
}

impl PhaseState {
    #[inline]
    fn new(theta0: f64) -> Self {
        let (sin2, cos2) = (2.0 * theta0).sin_cos();
        Self { theta: theta0, sin2, cos2 }
    }

    /// One Heun step on piecewise-constant noise.
    #[inline]
    fn step(&mut self, kappa: f64, inv_k: f64, af_l: f64, af_r: f64, dt: f64) {
        let k1 = kappa - af_l * inv_k * 0.5 * (1.0 - self.cos2);
        let (rs, rc) = rot(2.0 * dt * k1);
        let cos2_pred = self.cos2 * rc - self.sin2 * rs;
        let k2 = kappa - af_r * inv_k * 0.5 * (1.0 - cos2_pred);
        let delta = 0.5 * dt * (k1 + k2);
        self.theta += delta;
        let (rs2, rc2) = rot(2.0 * delta);
        let s = self.sin2 * rc2 + self.cos2 * rs2;
        let c = self.cos2 * rc2 - self.sin2 * rs2;
        // first-order renormalisation keeps the pair on the unit circle
        let fix = 1.5 - 0.5 * (s * s + c * c);
        self.sin2 = s * fix;
        self.cos2 = c * fix;
    }
}

fn validate_kappa(kappa: f64) -> Result<()> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(LabError::InvalidParameter(format!(
            "wavenumber must be positive, got {kappa}"
        )));
    }
    Ok(())
}

/// Terminal phase `θ_horizon(κ)` without storing the trajectory.
pub fn terminal_phase(path: &NoisePath, kappa: f64, theta0: f64) -> Result<f64> {
    validate_kappa(kappa)?;
    let dt = path.dt();
    let inv_k = 1.0 / kappa;
    let mut state = PhaseState::new(theta0);
    for (af_l, af_r) in path.af_left().iter().zip(path.af_right()) {
        state.step(kappa, inv_k, *af_l, *af_r, dt);
    }
    Ok(state.theta)
}

/// Terminal phases for a batch of wavenumbers in one sweep over the path.
pub fn terminal_phases(path: &NoisePath, kappas: &[f64], theta0: f64) -> Result<Vec<f64>> {
    for &k in kappas {
        validate_kappa(k)?;
    }
    let dt = path.dt();
    let inv_k: Vec<f64> = kappas.iter().map(|k| 1.0 / k).collect();
    let mut states = vec![PhaseState::new(theta0); kappas.len()];
    for (af_l, af_r) in path.af_left().iter().zip(path.af_right()) {
        for ((st, &k), &ik) in states.iter_mut().zip(kappas).zip(&inv_k) {
            st.step(k, ik, *af_l, *af_r, dt);
        }
    }
    Ok(states.iter().map(|st| st.theta).collect())
}

/// Phase trajectory on the full path grid.
#[derive(Debug, Clone)]
pub struct PruferTrajectory {
    pub kappa: f64,
    pub grid_dt: f64,
    pub theta0: f64,
    pub thetas: Vec<f64>,
}

impl PruferTrajectory {
    pub fn terminal(&self) -> f64 {
        *self.thetas.last().expect("trajectory is never empty")
    }

    /// Debug dump `t,theta`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,theta")?;
        for (j, th) in self.thetas.iter().enumerate() {
            writeln!(w, "{},{}", j as f64 * self.grid_dt, th)?;
        }
        Ok(())
    }
}

/// Integrate the phase along `path`, storing every grid value.
pub fn integrate_phase(
    path: &NoisePath,
    spec: &PotentialSpec,
    kappa: f64,
    theta0: f64,
) -> Result<PruferTrajectory> {
    validate_kappa(kappa)?;
    if spec.dim() != path.dim() {
        return Err(LabError::GridMismatch(format!(
            "potential dimension {} does not match path dimension {}",
            spec.dim(),
            path.dim()
        )));
    }
    let dt = path.dt();
    let inv_k = 1.0 / kappa;
    let mut thetas = Vec::with_capacity(path.steps() + 1);
    let mut state = PhaseState::new(theta0);
    thetas.push(state.theta);
    for (af_l, af_r) in path.af_left().iter().zip(path.af_right()) {
        state.step(kappa, inv_k, *af_l, *af_r, dt);
        thetas.push(state.theta);
    }
    Ok(PruferTrajectory { kappa, grid_dt: dt, theta0, thetas })
}

/// Relative phase `Θ(λ)` between `κ₀ + λ/L` and `κ₀` on a shared path,
/// together with the terminal fractional phase at `κ₀`.
#[derive(Debug, Clone)]
pub struct RelativePhase {
    pub lambda: f64,
    pub grid_dt: f64,
    pub big_theta: Vec<f64>,
    /// `{θ_L(√E₀)}_π ∈ [0, π)`.
    pub phi: f64,
}

impl RelativePhase {
    pub fn terminal(&self) -> f64 {
        *self.big_theta.last().expect("trajectory is never empty")
    }
}

/// Two coupled integrations of the phase equation on one path.
pub fn relative_phase(
    path: &NoisePath,
    spec: &PotentialSpec,
    e0: f64,
    lambda: f64,
    l: f64,
) -> Result<RelativePhase> {
    if !(e0 > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "reference energy must be positive, got {e0}"
        )));
    }
    if spec.dim() != path.dim() {
        return Err(LabError::GridMismatch(
            "potential dimension does not match path dimension".into(),
        ));
    }
    let kappa0 = e0.sqrt();
    let kappa1 = kappa0 + lambda / l;
    validate_kappa(kappa1)?;

    let dt = path.dt();
    let (ik0, ik1) = (1.0 / kappa0, 1.0 / kappa1);
    let mut st0 = PhaseState::new(0.0);
    let mut st1 = PhaseState::new(0.0);
    let mut big_theta = Vec::with_capacity(path.steps() + 1);
    big_theta.push(0.0);
    for (af_l, af_r) in path.af_left().iter().zip(path.af_right()) {
        st0.step(kappa0, ik0, *af_l, *af_r, dt);
        st1.step(kappa1, ik1, *af_l, *af_r, dt);
        big_theta.push(st1.theta - st0.theta);
    }
    Ok(RelativePhase {
        lambda,
        grid_dt: dt,
        big_theta,
        phi: fractional(st0.theta),
    })
}

/// `{x}_π = x - ⌊x/π⌋ π ∈ [0, π)`.
pub fn fractional(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// One recorded level crossing of `⌊Θ/π⌋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub level: i64,
}

/// Level crossings of `⌊Θ/π⌋` past the initial transient, plus diagnostics.
#[derive(Debug, Clone, Default)]
pub struct JumpTimes {
    /// Ordered first-passage times, one event per level.
    pub events: Vec<JumpEvent>,
    /// Crossings that happened before `t_min` and were dropped.
    pub discarded_pre_tmin: usize,
    /// Grid intervals with a decreasing floor at `t >= t_min`; the limit
    /// theory forbids these past a finite transient.
    pub late_backslides: usize,
}

/// Extract ordered level-crossing times of `⌊Θ/π⌋`.
///
/// Crossing times are refined by linear interpolation between grid points;
/// multi-level jumps report one event per level. Levels never re-fire: once
/// level k has been passed the trajectory may dip back without generating a
/// duplicate.
pub fn jump_times(rel: &RelativePhase, t_min: f64) -> JumpTimes {
    let dt = rel.grid_dt;
    let mut out = JumpTimes::default();
    if rel.big_theta.len() < 2 {
        return out;
    }
    let floor_level = |theta: f64| (theta / PI).floor() as i64;
    let mut reached = floor_level(rel.big_theta[0]);
    for j in 0..rel.big_theta.len() - 1 {
        let th0 = rel.big_theta[j];
        let th1 = rel.big_theta[j + 1];
        let l1 = floor_level(th1);
        if l1 > reached {
            for level in (reached + 1)..=l1 {
                let target = level as f64 * PI;
                let frac = if th1 > th0 {
                    ((target - th0) / (th1 - th0)).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                let time = (j as f64 + frac) * dt;
                if time < t_min {
                    out.discarded_pre_tmin += 1;
                } else {
                    out.events.push(JumpEvent { time, level });
                }
            }
            reached = l1;
        } else if l1 < floor_level(th0) && (j as f64 + 1.0) * dt >= t_min {
            out.late_backslides += 1;
        }
    }
    out
}
