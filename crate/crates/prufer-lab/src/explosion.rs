//! Mean-explosion-time analytics for the stationary envelope diffusion.
//!
//! Writing `dS₊ = -W₊(S₊) dt + C dW` with
//! `-W₊(r) = λ(1+ε) cosh₊ r + (C²/2) tanh_{+,ε} r`, the expected explosion
//! time from level `r` solves `(C²/2) f'' - W₊ f' = -1, f(∞) = 0`, giving
//! the double integral
//!
//! ```text
//! t(r) = (2/C²) ∫_r^∞ dx ∫_{-∞}^x dy  exp{ (2/C²) (V₊(x) - V₊(y)) }
//! ```
//!
//! with `V₊' = W₊` away from the envelope kinks at `r = 0` and `r = -δ`.
//! The drift has two zeros `a_n ≈ δ + log(λ̃/C²)` (potential well) and
//! `b_n ≈ -(2λ̃/C²) cosh 2δ - δ` (barrier top), `λ̃ = (1+ε)λ/(1-ε)`; the
//! inner integrand peaks at the well, the outer at the barrier, and as the
//! diffusion scale grows the mean time collapses to the sech integral
//! `(1/λ)∫_r^∞ dx / cosh x`, hence to `π/λ` from a deep start.

use serde::Serialize;

use crate::limit_sde::{envelope, EnvelopeKind};
use crate::{LabError, Result};

/// Negated drift `W₊` of the upper stationary approximation, with the
/// continuous antiderivative `V₊`.
#[derive(Debug, Clone)]
pub struct DriftPotential {
    pub c_n: f64,
    pub lambda: f64,
    pub lambda_tilde: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl DriftPotential {
    pub fn new(c_n: f64, lambda: f64, delta: f64, epsilon: f64) -> Result<Self> {
        if !(c_n > 0.0) || !(lambda > 0.0) {
            return Err(LabError::InvalidParameter(
                "c_n and lambda must be positive".into(),
            ));
        }
        if !(delta >= 0.0) || !(0.0..1.0).contains(&epsilon) {
            return Err(LabError::InvalidParameter(
                "need delta >= 0 and epsilon in [0, 1)".into(),
            ));
        }
        Ok(Self {
            c_n,
            lambda,
            lambda_tilde: (1.0 + epsilon) * lambda / (1.0 - epsilon),
            delta,
            epsilon,
        })
    }

    /// `W₊(r)`, minus the drift; negative for large positive r where the
    /// cosh term drives explosion.
    pub fn w_plus(&self, r: f64) -> f64 {
        let half_c2 = 0.5 * self.c_n * self.c_n;
        -(self.lambda * (1.0 + self.epsilon) * envelope(EnvelopeKind::CoshPlus, r, self.delta, self.epsilon)
            + half_c2 * envelope(EnvelopeKind::TanhPlusEps, r, self.delta, self.epsilon))
    }

    /// Continuous antiderivative of `W₊`, anchored at `V₊(0) = 0`.
    pub fn v_plus(&self, r: f64) -> f64 {
        let d = self.delta;
        let e = self.epsilon;
        // ∫ cosh₊ : sinh shifted to be continuous at 0.
        let a1 = if r >= 0.0 {
            (r + d).sinh() - d.sinh()
        } else {
            (r - d).sinh() + d.sinh()
        };
        // ∫ tanh_{+,ε} : log cosh with the tilt switching at -δ,
        // continuity constants log cosh δ.
        let a2 = if r >= -d {
            (1.0 + e) * (log_cosh(r + d) - log_cosh(d))
        } else {
            (1.0 - e) * log_cosh(r + d) - (1.0 + e) * log_cosh(d)
        };
        -(self.lambda * (1.0 + e) * a1 + 0.5 * self.c_n * self.c_n * a2)
    }

    /// Zeros `(a_n, b_n)` of `W₊`, refined by bisection from the asymptotic
    /// seeds. Fails outside the well-separated regime `C² ≫ λ̃`.
    pub fn critical_points(&self) -> Result<(f64, f64)> {
        let c2 = self.c_n * self.c_n;
        let a_seed = self.delta + (self.lambda_tilde / c2).ln();
        let b_seed = -(2.0 * self.lambda_tilde / c2) * (2.0 * self.delta).cosh() - self.delta;
        if !(a_seed < b_seed - 0.5) {
            return Err(LabError::AsymptoticRegime(format!(
                "drift zeros are not separated: seeds {a_seed} and {b_seed}"
            )));
        }
        let mid = 0.5 * (a_seed + b_seed);
        // W₊ < 0 on both flanks, > 0 between the zeros.
        if !(self.w_plus(mid) > 0.0) {
            return Err(LabError::AsymptoticRegime(format!(
                "no positive drift barrier near {mid}; C_n² ≫ λ̃ required"
            )));
        }
        let a_n = bisect(|r| self.w_plus(r), a_seed - 3.0, mid)?;
        let b_n = bisect(|r| -self.w_plus(r), mid, -self.delta)?;
        Ok((a_n, b_n))
    }

    /// Mean explosion time from `r` via the nested double integral.
    ///
    /// `truncation` is the initial distance beyond the drift zeros covered
    /// by the grid; it doubles until both tails of the product integrand
    /// fall below 1e-12 of the bulk, and the grid is refined until the
    /// value is stable to 1e-8 relative.
    ///
    /// The inner cumulative carries a running exponent shift and each
    /// segment uses the exact integral of a log-linear interpolant, so the
    /// enormous dynamic range of `exp(±2V/C²)` never materialises as a
    /// float.
    pub fn mean_explosion_quadrature(&self, r: f64, truncation: f64) -> Result<f64> {
        if !(truncation > 0.0) {
            return Err(LabError::InvalidParameter(
                "truncation must be positive".into(),
            ));
        }
        let (a_n, b_n) = self.critical_points()?;

        let mut reach = truncation;
        for _ in 0..=10 {
            let y_min = r.min(a_n) - reach;
            let x_max = (b_n.max(0.0) + reach).max(r + reach);
            match self.quadrature_on(r, y_min, x_max, a_n, b_n)? {
                QuadratureOutcome::Converged(t) => return Ok(t),
                QuadratureOutcome::TailTooFat => reach *= 2.0,
            }
        }
        Err(LabError::QuadratureDivergence(
            "integrand tails did not decay after 10 truncation doublings".into(),
        ))
    }

    fn quadrature_on(
        &self,
        r: f64,
        y_min: f64,
        x_max: f64,
        a_n: f64,
        b_n: f64,
    ) -> Result<QuadratureOutcome> {
        let q = 2.0 / (self.c_n * self.c_n);
        let mut h = 0.05;
        let mut previous = f64::NAN;
        for _ in 0..14 {
            let grid = graded_grid(y_min, x_max, h, &[r, a_n, b_n, -self.delta, 0.0]);
            let n = grid.len();
            // log of the inner integrand
            let log_g: Vec<f64> = grid.iter().map(|&y| -q * self.v_plus(y)).collect();

            // running-rescaled cumulative: inner(i) = e^{shift[i]} * scaled[i]
            let mut shift = vec![0.0f64; n];
            let mut scaled = vec![0.0f64; n];
            let mut s = log_g[0];
            let mut acc = 0.0f64;
            shift[0] = s;
            for i in 1..n {
                if log_g[i] > s {
                    acc *= (s - log_g[i]).exp();
                    s = log_g[i];
                }
                let u0 = log_g[i - 1] - s;
                let u1 = log_g[i] - s;
                let dy = grid[i] - grid[i - 1];
                let da = u1 - u0;
                // exact integral of exp(linear) over the segment
                acc += if da.abs() > 1e-8 {
                    dy * (u1.exp() - u0.exp()) / da
                } else {
                    dy * 0.5 * (u0.exp() + u1.exp())
                };
                shift[i] = s;
                scaled[i] = acc;
            }

            // outer integrand e^{qV(x)}·inner(x) = e^{shift - log_g}·scaled
            let start = grid.partition_point(|&x| x < r);
            let mut total = 0.0;
            let mut prev: Option<(f64, f64)> = None;
            let mut last_val = 0.0;
            for i in start..n {
                let val = (shift[i] - log_g[i]).exp() * scaled[i];
                if let Some((x_prev, v_prev)) = prev {
                    total += 0.5 * (val + v_prev) * (grid[i] - x_prev);
                }
                prev = Some((grid[i], val));
                last_val = val;
            }
            let t = q * total;
            if !t.is_finite() || t <= 0.0 {
                return Err(LabError::QuadratureDivergence(format!(
                    "integral degenerated to {t} on [{y_min}, {x_max}]"
                )));
            }

            // tails of the product integrand: right end of the outer
            // integral, and the deep-y end of the inner one
            let left_tail_ok = log_g[0] - log_g.iter().cloned().fold(f64::MIN, f64::max)
                < (1e-12f64).ln();
            if q * last_val > 1e-12 * t || !left_tail_ok {
                return Ok(QuadratureOutcome::TailTooFat);
            }

            if previous.is_finite() && (t - previous).abs() <= 1e-8 * t.abs() {
                return Ok(QuadratureOutcome::Converged(t));
            }
            previous = t;
            h *= 0.5;
        }
        Err(LabError::QuadratureDivergence(
            "grid refinement did not stabilise to 1e-8".into(),
        ))
    }
}

enum QuadratureOutcome {
    Converged(f64),
    TailTooFat,
}

/// Numerically stable `log cosh`.
fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

// Piecewise-uniform grid, 8x denser within ±2 of each marker; all markers
// that fall inside the range become grid points.
fn graded_grid(lo: f64, hi: f64, h: f64, markers: &[f64]) -> Vec<f64> {
    let mut cuts: Vec<f64> = vec![lo, hi];
    for &m in markers {
        for edge in [m - 2.0, m, m + 2.0] {
            if edge > lo && edge < hi {
                cuts.push(edge);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let fine = |x: f64| markers.iter().any(|&m| (x - m).abs() <= 2.0 + 1e-12);
    let mut grid = Vec::new();
    grid.push(cuts[0]);
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let step = if fine(mid) { h / 8.0 } else { h };
        let n = ((b - a) / step).ceil().max(1.0) as usize;
        for i in 1..=n {
            grid.push(a + (b - a) * i as f64 / n as f64);
        }
    }
    grid
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(LabError::AsymptoticRegime(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form limit of the mean explosion time:
/// `(1/λ) ∫_r^∞ dx / cosh x = (π - 2 arctan e^r)/λ`.
pub fn limit_mean(lambda: f64, r: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok((std::f64::consts::PI - 2.0 * r.exp().atan()) / lambda)
}

/// Limiting Laplace transform of the rate-normalized explosion time.
pub fn laplace_limit(xi: f64) -> f64 {
    debug_assert!(xi >= 0.0);
    1.0 / (1.0 + xi)
}

/// Monte Carlo explosion times next to their quadrature prediction.
#[derive(Debug, Clone, Serialize)]
pub struct ExplosionRecord {
    pub c_n: f64,
    pub lambda: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub r0: f64,
    pub times: Vec<f64>,
    pub quadrature_mean: Option<f64>,
}

impl ExplosionRecord {
    pub fn mean(&self) -> f64 {
        self.times.iter().sum::<f64>() / self.times.len() as f64
    }

    pub fn std_error(&self) -> f64 {
        let n = self.times.len() as f64;
        let mean = self.mean();
        let var = self
            .times
            .iter()
            .map(|t| (t - mean) * (t - mean))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }

    /// Empirical Laplace transform `E[e^{-ξ (λ/π) ζ}]` with its standard
    /// error.
    pub fn laplace(&self, xi: f64) -> (f64, f64) {
        let rate = self.lambda / std::f64::consts::PI;
        let n = self.times.len() as f64;
        let vals: Vec<f64> = self.times.iter().map(|t| (-xi * rate * t).exp()).collect();
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn critical_points_match_asymptotic_seeds() {
        let pot = DriftPotential::new(20.0, PI, 0.01, 0.01).unwrap();
        let (a_n, b_n) = pot.critical_points().unwrap();
        let c2 = 400.0;
        let a_seed = 0.01 + (pot.lambda_tilde / c2).ln();
        assert!(
            (a_n - a_seed).abs() < 2.0 / c2,
            "a_n = {a_n} vs seed {a_seed}"
        );
        assert!(pot.w_plus(a_n).abs() < 1e-10);
        assert!(pot.w_plus(b_n).abs() < 1e-10);
        assert!(a_n < b_n && b_n < 0.0);
    }

    #[test]
    fn barrier_zero_approaches_origin_for_large_c() {
        let pot = DriftPotential::new(1000.0, PI, 0.0, 0.0).unwrap();
        let (_, b_n) = pot.critical_points().unwrap();
        assert!(b_n < 0.0 && b_n > -1e-5, "b_n = {b_n}");
    }

    #[test]
    fn degenerate_regime_is_flagged() {
        // C² comparable to λ̃: no separated well and barrier.
        let pot = DriftPotential::new(1.0, PI, 0.0, 0.0).unwrap();
        assert!(pot.critical_points().is_err());
    }

    #[test]
    fn v_is_antiderivative_of_w() {
        let pot = DriftPotential::new(20.0, PI, 0.05, 0.02).unwrap();
        let h = 1e-6;
        for i in 0..1000 {
            let r = -9.0 + 18.0 * (i as f64) / 999.0;
            // skip the two kink neighbourhoods
            if r.abs() < 1e-2 || (r + pot.delta).abs() < 1e-2 {
                continue;
            }
            let fd = (pot.v_plus(r + h) - pot.v_plus(r - h)) / (2.0 * h);
            let w = pot.w_plus(r);
            assert!(
                (fd - w).abs() <= 1e-4 * w.abs().max(1.0),
                "V' != W at r = {r}: {fd} vs {w}"
            );
        }
    }

    #[test]
    fn w_is_negative_for_large_r() {
        let pot = DriftPotential::new(20.0, PI, 0.01, 0.01).unwrap();
        for r in [1.0, 3.0, 10.0] {
            assert!(pot.w_plus(r) < 0.0);
        }
    }

    #[test]
    fn limit_mean_examples() {
        assert!((limit_mean(2.0, -40.0).unwrap() - PI / 2.0).abs() < 1e-12);
        assert!((limit_mean(3.0, 0.0).unwrap() - PI / 6.0).abs() < 1e-12);
        // (π - 2 arctan e²) for r = 2, λ = 1
        assert!((limit_mean(1.0, 2.0).unwrap() - 0.269_035_990_748_881_3).abs() < 1e-12);
        assert!(limit_mean(0.0, 1.0).is_err());
        assert!(limit_mean(-1.0, 1.0).is_err());
    }

    #[test]
    fn laplace_limit_values() {
        assert_eq!(laplace_limit(0.0), 1.0);
        assert_eq!(laplace_limit(1.0), 0.5);
        assert_eq!(laplace_limit(3.0), 0.25);
    }

    #[test]
    fn quadrature_is_monotone_decreasing_in_r() {
        let pot = DriftPotential::new(20.0, PI, 0.01, 0.01).unwrap();
        let mut prev = f64::INFINITY;
        for r in [-8.0, -5.0, -2.0, 0.0, 1.0] {
            let t = pot.mean_explosion_quadrature(r, 8.0).unwrap();
            assert!(t < prev, "t({r}) = {t} not below {prev}");
            assert!(t > 0.0);
            prev = t;
        }
    }

    #[test]
    fn quadrature_reaches_the_sech_limit_at_large_c() {
        // ε = δ = 0, C = 50: uniformly within 5% of (π - 2 arctan e^r)/λ.
        let pot = DriftPotential::new(50.0, PI, 0.0, 0.0).unwrap();
        for i in 0..=10 {
            let r = -8.0 + (i as f64);
            let t = pot.mean_explosion_quadrature(r, 8.0).unwrap();
            let lim = limit_mean(PI, r).unwrap();
            assert!(
                (t - lim).abs() <= 0.05 * lim,
                "r = {r}: quadrature {t} vs limit {lim}"
            );
        }
    }

    #[test]
    fn deep_start_mean_approaches_pi_over_lambda() {
        let pot = DriftPotential::new(50.0, PI, 0.0, 0.0).unwrap();
        let t = pot.mean_explosion_quadrature(-8.0, 8.0).unwrap();
        assert!((t - 1.0).abs() < 0.05, "t = {t}");
    }
}
