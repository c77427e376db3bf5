//! Random potential on the flat torus.
//!
//! The potential is `a(t) F(X_t)` where `F` is a smooth mean-zero function on
//! the d-torus given by finitely many Fourier coefficients, `X_t` is Brownian
//! motion on the torus (generator `L = ½Δ`, so coordinate increments have
//! variance `dt`), and `a(t)` is a smooth even decay factor with
//! `a(t) ~ t^{-alpha}`.
//!
//! The module also computes the spectral constants attached to a reference
//! energy `E₀ > 0`: the resolvent `g = (L + 2iκ₀)^{-1} F` with `κ₀ = √E₀`,
//! the gradient pairing `C(E₀) = ⟨∇g, ∇ḡ⟩`, and `β(E₀) = 8E₀ / C(E₀)`. Under
//! the `½Δ` convention a Fourier mode `k` contributes
//! `|k|²|c_k|² / (|k|⁴/4 + 4E₀)` to `C(E₀)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, StreamId};
use crate::{LabError, Result};

/// Integer wave vector on the d-torus.
pub type WaveVector = Vec<i64>;

/// Decay profile of the coupling factor `a(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayProfile {
    /// `a(t) = (1 + t²)^{-alpha/2}`: smooth, even, non-increasing for t > 0,
    /// with `a(t) t^alpha -> 1` and `a'(t) = O(t^{-alpha-1})`.
    PowerDecay,
    /// Constant coupling `a ≡ s`, the decaying-coupling variant where the
    /// scale is tied to the box length instead of the position.
    ConstantCoupling(f64),
}

/// Seed of one noise realization: master seed plus realization index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSeed {
    pub master: u64,
    pub index: u64,
}

impl PathSeed {
    pub fn new(master: u64, index: u64) -> Self {
        Self { master, index }
    }
}

/// Mean-zero trigonometric potential `F` together with the decay profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialTable", into = "PotentialTable")]
pub struct PotentialSpec {
    alpha: f64,
    dim: usize,
    fourier: BTreeMap<WaveVector, Complex64>,
    profile: DecayProfile,
}

impl PotentialSpec {
    /// Build a spec, enforcing the mean-zero and Hermitian invariants.
    ///
    /// A missing conjugate coefficient `c_{-k}` is filled in from `c_k`; if
    /// both are given they must agree. A nonzero `c_0` is rejected.
    pub fn new(
        alpha: f64,
        dim: usize,
        coeffs: impl IntoIterator<Item = (WaveVector, Complex64)>,
        profile: DecayProfile,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InvalidParameter("torus dimension must be >= 1".into()));
        }
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(LabError::InvalidParameter(format!(
                "decay exponent alpha must be positive, got {alpha}"
            )));
        }
        if let DecayProfile::ConstantCoupling(s) = profile {
            if !s.is_finite() || s < 0.0 {
                return Err(LabError::InvalidParameter(format!(
                    "coupling scale must be non-negative, got {s}"
                )));
            }
        }

        let mut fourier: BTreeMap<WaveVector, Complex64> = BTreeMap::new();
        for (k, c) in coeffs {
            if k.len() != dim {
                return Err(LabError::InvalidParameter(format!(
                    "wave vector {k:?} does not have dimension {dim}"
                )));
            }
            if c.norm() == 0.0 {
                continue;
            }
            if k.iter().all(|&ki| ki == 0) {
                return Err(LabError::InvalidParameter(
                    "c_0 must be absent or zero (F has mean zero)".into(),
                ));
            }
            fourier.insert(k, c);
        }

        // Hermitian closure: F is real iff c_{-k} = conj(c_k).
        let keys: Vec<WaveVector> = fourier.keys().cloned().collect();
        for k in keys {
            let minus: WaveVector = k.iter().map(|&ki| -ki).collect();
            let ck = fourier[&k];
            match fourier.get(&minus) {
                None => {
                    fourier.insert(minus, ck.conj());
                }
                Some(cm) => {
                    if (cm - ck.conj()).norm() > 1e-12 * (1.0 + ck.norm()) {
                        return Err(LabError::InvalidParameter(format!(
                            "coefficients at {k:?} and {minus:?} are not Hermitian conjugates"
                        )));
                    }
                }
            }
        }

        Ok(Self { alpha, dim, fourier, profile })
    }

    /// Default potential: d = 1, `F(x) = 2 cos x`, power decay.
    pub fn cosine(alpha: f64) -> Result<Self> {
        Self::new(
            alpha,
            1,
            [
                (vec![1], Complex64::new(1.0, 0.0)),
                (vec![-1], Complex64::new(1.0, 0.0)),
            ],
            DecayProfile::PowerDecay,
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> DecayProfile {
        self.profile
    }

    pub fn fourier(&self) -> &BTreeMap<WaveVector, Complex64> {
        &self.fourier
    }

    /// Same potential with a different decay profile.
    pub fn with_profile(&self, profile: DecayProfile) -> Self {
        let mut out = self.clone();
        out.profile = profile;
        out
    }

    /// Evaluate `F` at a torus point by direct Fourier summation.
    pub fn eval_f(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut sum = 0.0;
        for (k, c) in &self.fourier {
            let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
            // Re(c e^{ik·x}); the conjugate term makes the total real.
            sum += c.re * phase.cos() - c.im * phase.sin();
        }
        sum
    }

    /// Coupling factor `a(t)`.
    pub fn eval_a(&self, t: f64) -> f64 {
        match self.profile {
            DecayProfile::PowerDecay => (1.0 + t * t).powf(-self.alpha / 2.0),
            DecayProfile::ConstantCoupling(s) => s,
        }
    }

    /// Fourier coefficients of the resolvent `(L + 2iκ)^{-1} F` with `L = ½Δ`.
    pub fn resolvent_coeffs(&self, kappa: f64) -> Result<BTreeMap<WaveVector, Complex64>> {
        if kappa == 0.0 || !kappa.is_finite() {
            return Err(LabError::SingularResolvent);
        }
        let mut out = BTreeMap::new();
        for (k, c) in &self.fourier {
            let k2: f64 = k.iter().map(|&ki| (ki as f64) * (ki as f64)).sum();
            let denom = Complex64::new(-0.5 * k2, 2.0 * kappa);
            out.insert(k.clone(), c / denom);
        }
        Ok(out)
    }

    /// Spectral constants at reference energy `e0 > 0`.
    ///
    /// `c_e0` comes from the gradient Fourier sum and `psi_mean` from the
    /// independent identity `⟨ψ⟩ = -2 Re ⟨F g⟩`; the two must agree to
    /// machine precision.
    pub fn compute_constants(&self, e0: f64) -> Result<SpectralConstants> {
        if !(e0 > 0.0) || !e0.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "reference energy must be positive, got {e0}"
            )));
        }
        if self.fourier.is_empty() {
            return Err(LabError::DegeneratePotential);
        }
        let kappa0 = e0.sqrt();
        let resolvent = self.resolvent_coeffs(kappa0)?;

        let mut c_e0 = 0.0;
        for (k, c) in &self.fourier {
            let k2: f64 = k.iter().map(|&ki| (ki as f64) * (ki as f64)).sum();
            c_e0 += k2 * c.norm_sqr() / (k2 * k2 / 4.0 + 4.0 * e0);
        }
        if c_e0 == 0.0 {
            return Err(LabError::DegeneratePotential);
        }

        let mut fg = Complex64::new(0.0, 0.0);
        for (k, c) in &self.fourier {
            fg += c.conj() * resolvent[k];
        }
        let psi_mean = -2.0 * fg.re;

        Ok(SpectralConstants {
            e0,
            kappa0,
            resolvent,
            c_e0,
            beta_e0: 8.0 * e0 / c_e0,
            psi_mean,
        })
    }

    /// Sample one Brownian path on the torus and the potential along it.
    ///
    /// The path is deterministic given `(seed.master, seed.index)` and is
    /// independent of any other realization index.
    pub fn sample_path(&self, horizon: f64, dt: f64, seed: PathSeed) -> Result<NoisePath> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(LabError::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(LabError::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let steps = (horizon / dt).round() as usize;
        if steps == 0 || ((steps as f64) * dt - horizon).abs() > dt {
            return Err(LabError::GridMismatch(format!(
                "dt = {dt} does not divide horizon = {horizon} to within one step"
            )));
        }

        let mut rng = stream_rng(seed.master, seed.index, StreamId::Path);
        let sigma = dt.sqrt();
        let d = self.dim;
        let mut positions = Vec::with_capacity((steps + 1) * d);
        let mut x = vec![0.0f64; d];
        positions.extend_from_slice(&x);
        for _ in 0..steps {
            for xi in x.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *xi = (*xi + sigma * z).rem_euclid(TAU);
            }
            positions.extend_from_slice(&x);
        }

        let f_values: Vec<f64> = (0..=steps)
            .map(|j| self.eval_f(&positions[j * d..(j + 1) * d]))
            .collect();

        // Products a(t_j) f_j and a(t_{j+1}) f_j, precomputed once so the
        // phase integrator's inner loop never touches powf.
        let mut af_left = Vec::with_capacity(steps);
        let mut af_right = Vec::with_capacity(steps);
        let mut a_prev = self.eval_a(0.0);
        for j in 0..steps {
            let a_next = self.eval_a((j + 1) as f64 * dt);
            af_left.push(a_prev * f_values[j]);
            af_right.push(a_next * f_values[j]);
            a_prev = a_next;
        }

        Ok(NoisePath {
            dt,
            steps,
            dim: d,
            positions,
            f_values,
            af_left,
            af_right,
            seed,
        })
    }
}

/// One discretized torus Brownian path with the potential sampled along it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    dt: f64,
    steps: usize,
    dim: usize,
    /// Wrapped positions in `[0, 2π)^d`, flattened with stride `dim`.
    positions: Vec<f64>,
    f_values: Vec<f64>,
    af_left: Vec<f64>,
    af_right: Vec<f64>,
    seed: PathSeed,
}

impl NoisePath {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn seed(&self) -> PathSeed {
        self.seed
    }

    pub fn position(&self, j: usize) -> &[f64] {
        &self.positions[j * self.dim..(j + 1) * self.dim]
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    pub(crate) fn af_left(&self) -> &[f64] {
        &self.af_left
    }

    pub(crate) fn af_right(&self) -> &[f64] {
        &self.af_right
    }

    /// Keep every `factor`-th grid point; the coarse path sees the same
    /// Brownian motion at a coarser resolution. Used by step-size checks.
    pub fn coarsen(&self, spec: &PotentialSpec, factor: usize) -> Result<NoisePath> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(LabError::GridMismatch(format!(
                "coarsening factor {factor} does not divide {} steps",
                self.steps
            )));
        }
        let steps = self.steps / factor;
        let dt = self.dt * factor as f64;
        let d = self.dim;
        let mut positions = Vec::with_capacity((steps + 1) * d);
        let mut f_values = Vec::with_capacity(steps + 1);
        for j in 0..=steps {
            positions.extend_from_slice(self.position(j * factor));
            f_values.push(self.f_values[j * factor]);
        }
        let mut af_left = Vec::with_capacity(steps);
        let mut af_right = Vec::with_capacity(steps);
        let mut a_prev = spec.eval_a(0.0);
        for j in 0..steps {
            let a_next = spec.eval_a((j + 1) as f64 * dt);
            af_left.push(a_prev * f_values[j]);
            af_right.push(a_next * f_values[j]);
            a_prev = a_next;
        }
        Ok(NoisePath {
            dt,
            steps,
            dim: d,
            positions,
            f_values,
            af_left,
            af_right,
            seed: self.seed,
        })
    }

    /// Debug dump `t,x_1..x_d,F`.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "t")?;
        for i in 1..=self.dim {
            write!(w, ",x_{i}")?;
        }
        writeln!(w, ",F")?;
        for j in 0..=self.steps {
            write!(w, "{}", j as f64 * self.dt)?;
            for xi in self.position(j) {
                write!(w, ",{xi}")?;
            }
            writeln!(w, ",{}", self.f_values[j])?;
        }
        Ok(())
    }
}

/// Constants attached to a reference energy, all derived from the resolvent.
#[derive(Debug, Clone)]
pub struct SpectralConstants {
    pub e0: f64,
    pub kappa0: f64,
    pub resolvent: BTreeMap<WaveVector, Complex64>,
    /// `C(E₀) = ⟨∇g, ∇ḡ⟩`, from the gradient Fourier sum.
    pub c_e0: f64,
    /// `β(E₀) = 8 E₀ / C(E₀)`.
    pub beta_e0: f64,
    /// `⟨ψ⟩ = -2 Re ⟨F g⟩`, computed independently of `c_e0`.
    pub psi_mean: f64,
}

// TOML face of the potential: `[potential]` with
// `fourier = [[k_1, .., k_d, re, im], ...]` rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PotentialTable {
    alpha: f64,
    dim: usize,
    fourier: Vec<Vec<f64>>,
    profile: ProfileTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ProfileTable {
    Power,
    Constant(f64),
}

/// Decode `[[k_1, .., k_d, re, im], ...]` rows into coefficient pairs.
pub(crate) fn parse_fourier_rows(
    dim: usize,
    rows: &[Vec<f64>],
) -> Result<Vec<(WaveVector, Complex64)>> {
    let mut coeffs = Vec::with_capacity(rows.len());
    for row in rows {
        if row.len() != dim + 2 {
            return Err(LabError::Config(format!(
                "fourier row {row:?} must have {} entries (k_1..k_{dim}, re, im)",
                dim + 2
            )));
        }
        let mut k = Vec::with_capacity(dim);
        for &ki in &row[..dim] {
            if ki.fract() != 0.0 {
                return Err(LabError::Config(format!(
                    "wave vector component {ki} is not an integer"
                )));
            }
            k.push(ki as i64);
        }
        coeffs.push((k, Complex64::new(row[dim], row[dim + 1])));
    }
    Ok(coeffs)
}

impl TryFrom<PotentialTable> for PotentialSpec {
    type Error = LabError;

    fn try_from(t: PotentialTable) -> Result<Self> {
        let coeffs = parse_fourier_rows(t.dim, &t.fourier)?;
        let profile = match t.profile {
            ProfileTable::Power => DecayProfile::PowerDecay,
            ProfileTable::Constant(s) => DecayProfile::ConstantCoupling(s),
        };
        PotentialSpec::new(t.alpha, t.dim, coeffs, profile)
    }
}

impl From<PotentialSpec> for PotentialTable {
    fn from(s: PotentialSpec) -> Self {
        let fourier = s
            .fourier
            .iter()
            .map(|(k, c)| {
                let mut row: Vec<f64> = k.iter().map(|&ki| ki as f64).collect();
                row.push(c.re);
                row.push(c.im);
                row
            })
            .collect();
        let profile = match s.profile {
            DecayProfile::PowerDecay => ProfileTable::Power,
            DecayProfile::ConstantCoupling(c) => ProfileTable::Constant(c),
        };
        PotentialTable { alpha: s.alpha, dim: s.dim, fourier, profile }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cosine(alpha: f64) -> PotentialSpec {
        PotentialSpec::cosine(alpha).unwrap()
    }

    #[test]
    fn resolvent_of_cosine_at_unit_kappa() {
        // ĝ_1 = 1 / (-1/2 + 2i) = -0.117647... - 0.470588...i
        let g = cosine(0.3).resolvent_coeffs(1.0).unwrap();
        let g1 = g[&vec![1]];
        assert!((g1.re - (-0.117_647_058_823_529_41)).abs() < 1e-15);
        assert!((g1.im - (-0.470_588_235_294_117_64)).abs() < 1e-15);
        // shared |k| and real c make ĝ_{-1} equal to ĝ_1 rather than its
        // conjugate: only the 2iκ part of the denominator is κ-odd.
        assert_eq!(g[&vec![-1]], g1);
    }

    #[test]
    fn resolvent_rejects_zero_kappa() {
        assert!(matches!(
            cosine(0.3).resolvent_coeffs(0.0),
            Err(LabError::SingularResolvent)
        ));
    }

    #[test]
    fn resolvent_of_empty_potential_is_empty() {
        let spec = PotentialSpec::new(0.3, 1, [], DecayProfile::PowerDecay).unwrap();
        assert!(spec.resolvent_coeffs(1.0).unwrap().is_empty());
    }

    #[test]
    fn constants_of_cosine_at_unit_energy() {
        // C(1) = sum over k = ±1 of |k|²|c_k|²/(|k|⁴/4 + 4) = 2/4.25,
        // beta = 8/C = 17 exactly.
        let c = cosine(0.3).compute_constants(1.0).unwrap();
        assert!((c.c_e0 - 2.0 / 4.25).abs() < 1e-15);
        assert!((c.beta_e0 - 17.0).abs() < 1e-12);
        assert!((c.psi_mean - c.c_e0).abs() < 1e-15);
    }

    #[test]
    fn constants_scale_quadratically_in_f() {
        let single = cosine(0.3);
        let doubled = PotentialSpec::new(
            0.3,
            1,
            [
                (vec![1], Complex64::new(2.0, 0.0)),
                (vec![-1], Complex64::new(2.0, 0.0)),
            ],
            DecayProfile::PowerDecay,
        )
        .unwrap();
        let a = single.compute_constants(1.0).unwrap();
        let b = doubled.compute_constants(1.0).unwrap();
        assert!((b.c_e0 - 4.0 * a.c_e0).abs() < 1e-14);
        assert!((b.beta_e0 - a.beta_e0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn psi_identity_for_random_hermitian_maps() {
        let mut rng = stream_rng(2024, 0, StreamId::Synthetic);
        for trial in 0..10 {
            let dim = 1 + (trial % 2);
            let mut coeffs = Vec::new();
            for _ in 0..4 {
                let mut k: WaveVector = (0..dim)
                    .map(|_| rng.random_range(-3i64..=3))
                    .collect();
                if k.iter().all(|&ki| ki == 0) {
                    continue;
                }
                // canonical half-space representative; the constructor adds
                // the conjugate partner
                if k.iter().find(|&&ki| ki != 0).is_some_and(|&ki| ki < 0) {
                    k = k.iter().map(|&ki| -ki).collect();
                }
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                coeffs.push((k, c));
            }
            if coeffs.is_empty() {
                continue;
            }
            let spec = PotentialSpec::new(0.3, dim, coeffs, DecayProfile::PowerDecay).unwrap();
            let e0 = rng.random_range(0.2..4.0);
            let c = spec.compute_constants(e0).unwrap();
            assert!(
                (c.psi_mean - c.c_e0).abs() <= 1e-12 * c.c_e0.abs(),
                "psi_mean = {} vs c_e0 = {} at e0 = {e0}",
                c.psi_mean,
                c.c_e0
            );
        }
    }

    #[test]
    fn degenerate_potential_is_rejected() {
        let spec = PotentialSpec::new(0.3, 1, [], DecayProfile::PowerDecay).unwrap();
        assert!(matches!(
            spec.compute_constants(1.0),
            Err(LabError::DegeneratePotential)
        ));
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let res = PotentialSpec::new(
            0.3,
            1,
            [(vec![0], Complex64::new(1.0, 0.0))],
            DecayProfile::PowerDecay,
        );
        assert!(res.is_err());
    }

    #[test]
    fn eval_a_examples() {
        let spec = cosine(0.3);
        assert_eq!(spec.eval_a(0.0), 1.0);

        let half = cosine(0.5);
        let t = 1e6;
        assert!((half.eval_a(t) * t.sqrt() - 1.0).abs() < 1e-6);

        let constant = spec.with_profile(DecayProfile::ConstantCoupling(0.1));
        assert_eq!(constant.eval_a(57.3), 0.1);
    }

    #[test]
    fn eval_a_is_even_nonincreasing_with_bounded_derivative() {
        let spec = cosine(0.3);
        let mut prev = spec.eval_a(0.0);
        let mut t = 1e-3;
        while t < 1e6 {
            assert!((spec.eval_a(-t) - spec.eval_a(t)).abs() < 1e-15);
            let a = spec.eval_a(t);
            assert!(a <= prev + 1e-15, "a not non-increasing at t = {t}");
            // |a'(t)| t^{alpha+1} stays bounded; finite differences on the
            // log grid.
            let h = 1e-4 * t;
            let deriv = (spec.eval_a(t + h) - spec.eval_a(t - h)) / (2.0 * h);
            assert!(
                deriv.abs() * t.powf(spec.alpha() + 1.0) < 1.0,
                "derivative bound violated at t = {t}"
            );
            prev = a;
            t *= 1.6;
        }
    }

    #[test]
    fn single_step_path_has_two_positions() {
        let spec = cosine(0.3);
        let path = spec.sample_path(0.5, 0.5, PathSeed::new(1, 1)).unwrap();
        assert_eq!(path.steps(), 1);
        assert_eq!(path.f_values().len(), 2);
    }

    #[test]
    fn zero_potential_gives_zero_f_values() {
        let spec = PotentialSpec::new(0.3, 1, [], DecayProfile::PowerDecay).unwrap();
        let path = spec.sample_path(1.0, 0.01, PathSeed::new(3, 0)).unwrap();
        assert!(path.f_values().iter().all(|&f| f == 0.0));
    }

    #[test]
    fn paths_are_deterministic_per_seed() {
        let spec = cosine(0.3);
        let a = spec.sample_path(2.0, 0.01, PathSeed::new(42, 7)).unwrap();
        let b = spec.sample_path(2.0, 0.01, PathSeed::new(42, 7)).unwrap();
        assert_eq!(a, b);
        let c = spec.sample_path(2.0, 0.01, PathSeed::new(42, 8)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn stored_f_values_match_reevaluation() {
        let spec = cosine(0.3);
        let path = spec.sample_path(5.0, 0.005, PathSeed::new(9, 4)).unwrap();
        for j in 0..=path.steps() {
            let f = spec.eval_f(path.position(j));
            assert!((f - path.f_values()[j]).abs() <= 1e-12);
        }
    }

    #[test]
    fn increment_variance_matches_dt() {
        let spec = cosine(0.3);
        let dt = 1e-3;
        let path = spec.sample_path(100.0, dt, PathSeed::new(5, 0)).unwrap();
        let mut sum_sq = 0.0;
        for j in 0..path.steps() {
            let mut d = path.position(j + 1)[0] - path.position(j)[0];
            // unwrap through the torus seam
            if d > std::f64::consts::PI {
                d -= TAU;
            } else if d < -std::f64::consts::PI {
                d += TAU;
            }
            sum_sq += d * d;
        }
        let var = sum_sq / path.steps() as f64;
        assert!(
            (var - dt).abs() < 0.05 * dt,
            "increment variance {var} vs dt {dt}"
        );
    }

    #[test]
    fn rejects_bad_grids() {
        let spec = cosine(0.3);
        assert!(spec.sample_path(1.0, 0.0, PathSeed::new(0, 0)).is_err());
        assert!(spec.sample_path(-1.0, 0.1, PathSeed::new(0, 0)).is_err());
        // dt far beyond the horizon cannot produce a single step
        assert!(spec.sample_path(1.0, 3.0, PathSeed::new(0, 0)).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let spec = cosine(0.3);
        let text = toml::to_string(&spec).unwrap();
        let back: PotentialSpec = toml::from_str(&text).unwrap();
        assert_eq!(spec, back);

        let parsed: PotentialSpec = toml::from_str(
            r#"
            alpha = 0.4
            dim = 1
            fourier = [[1.0, 0.5, 0.0]]
            profile = { constant = 0.1 }
            "#,
        )
        .unwrap();
        assert_eq!(parsed.fourier().len(), 2); // conjugate filled in
        assert_eq!(parsed.profile(), DecayProfile::ConstantCoupling(0.1));
    }
}
