//! Eigenvalues of the Dirichlet restriction `H_L` via Sturm oscillation.
//!
//! `E` is an eigenvalue of `H_L` exactly when `θ_L(√E) ∈ πZ`, so the number
//! of positive eigenvalues in `(0, E]` is `⌊θ_L(√E)/π⌋` and individual
//! eigenvalues are located by bracketing integer-π crossings of the monotone
//! map `κ ↦ θ_L(κ)` and bisecting. Atoms are reported in the rescaled
//! variable `L(κ - √E₀)`, the unfolding in which the limiting point process
//! has intensity `1/π`.

use std::f64::consts::PI;

use crate::prufer::{terminal_phase, terminal_phases};
use crate::torus::{NoisePath, PotentialSpec};
use crate::{LabError, Result};

/// Tolerance absorbing float round-off when a phase sits on an exact
/// multiple of π; an eigenvalue exactly at the window edge is counted.
const LEVEL_TOL: f64 = 1e-9;

/// Coarse-scan resolution: points per expected eigenvalue (spacing π/L in κ).
const COARSE_PER_EXPECTED: usize = 32;

fn level(theta: f64) -> i64 {
    (theta / PI + LEVEL_TOL).floor() as i64
}

/// Number of Dirichlet eigenvalues of `H_L` in `(0, energy]`.
pub fn count_below(
    path: &NoisePath,
    spec: &PotentialSpec,
    l: f64,
    energy: f64,
) -> Result<i64> {
    if !(energy > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "oscillation counting covers the positive spectrum only, got energy {energy}"
        )));
    }
    if (path.horizon() - l).abs() > path.dt() {
        return Err(LabError::GridMismatch(format!(
            "path horizon {} does not cover the box length {l}",
            path.horizon()
        )));
    }
    if spec.dim() != path.dim() {
        return Err(LabError::GridMismatch(
            "potential dimension does not match path dimension".into(),
        ));
    }
    let theta = terminal_phase(path, energy.sqrt(), 0.0)?;
    Ok(level(theta))
}

/// Eigenvalues of one realization inside a rescaled window.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub l: f64,
    pub e0: f64,
    /// Wavenumbers κ with `θ_L(κ) ∈ πZ`, sorted.
    pub eigen_kappas: Vec<f64>,
    /// Rescaled atoms `L(κ_j - √E₀)`, sorted, inside `window`.
    pub atoms: Vec<f64>,
    pub window: (f64, f64),
    /// Oscillation counts at the window edges; their difference must equal
    /// the number of atoms.
    pub count_lo: i64,
    pub count_hi: i64,
    /// Terminal fractional phase `{θ_L(√E₀)}_π` of this realization.
    pub phi: f64,
}

impl SpectrumResult {
    pub fn oscillation_consistent(&self) -> bool {
        self.atoms.len() as i64 == self.count_hi - self.count_lo
    }
}

/// Scan a rescaled window, bracket every integer-π crossing of
/// `κ ↦ θ_L(κ)`, and refine each by bisection.
pub fn solve_window(
    path: &NoisePath,
    spec: &PotentialSpec,
    l: f64,
    e0: f64,
    window: (f64, f64),
) -> Result<SpectrumResult> {
    let (w_lo, w_hi) = window;
    if !w_lo.is_finite() || !w_hi.is_finite() || w_hi < w_lo {
        return Err(LabError::InvalidParameter(format!(
            "window [{w_lo}, {w_hi}] is not a finite interval"
        )));
    }
    if !(e0 > 0.0) {
        return Err(LabError::InvalidParameter("e0 must be positive".into()));
    }
    let kappa0 = e0.sqrt();
    let kappa_lo = kappa0 + w_lo / l;
    let kappa_hi = kappa0 + w_hi / l;
    if kappa_lo <= 0.0 {
        return Err(LabError::InvalidParameter(format!(
            "window bottom reaches non-positive wavenumber {kappa_lo}"
        )));
    }
    if spec.dim() != path.dim() {
        return Err(LabError::GridMismatch(
            "potential dimension does not match path dimension".into(),
        ));
    }

    let theta_at_kappa0 = terminal_phase(path, kappa0, 0.0)?;
    let phi = crate::prufer::fractional(theta_at_kappa0);

    if w_hi == w_lo {
        let theta = terminal_phase(path, kappa_lo, 0.0)?;
        return Ok(SpectrumResult {
            l,
            e0,
            eigen_kappas: Vec::new(),
            atoms: Vec::new(),
            window,
            count_lo: level(theta),
            count_hi: level(theta),
            phi,
        });
    }

    let expected = ((w_hi - w_lo) / PI).ceil().max(1.0) as usize;
    let n_cells = COARSE_PER_EXPECTED * expected;
    let kappas: Vec<f64> = (0..=n_cells)
        .map(|i| kappa_lo + (kappa_hi - kappa_lo) * i as f64 / n_cells as f64)
        .collect();
    let thetas = terminal_phases(path, &kappas, 0.0)?;

    let tol_kappa = 1e-10 * (w_hi - w_lo) / l;
    let mut brackets = Vec::new();
    for i in 0..n_cells {
        bracket_cell(
            path,
            kappas[i],
            kappas[i + 1],
            thetas[i],
            thetas[i + 1],
            0,
            &mut brackets,
        )?;
    }
    let eigen_kappas = refine_brackets(path, brackets, tol_kappa)?;

    let count_lo = level(thetas[0]);
    let count_hi = level(thetas[n_cells]);
    let atoms: Vec<f64> = eigen_kappas.iter().map(|k| l * (k - kappa0)).collect();

    let result = SpectrumResult {
        l,
        e0,
        eigen_kappas,
        atoms,
        window,
        count_lo,
        count_hi,
        phi,
    };
    if !result.oscillation_consistent() {
        return Err(LabError::BracketFailure {
            kappa_lo,
            kappa_hi,
            detail: format!(
                "found {} atoms but oscillation counts differ by {}",
                result.atoms.len(),
                result.count_hi - result.count_lo
            ),
        });
    }
    Ok(result)
}

struct LevelBracket {
    target: f64,
    lo: f64,
    hi: f64,
}

/// Collect one bracket per integer-π level crossed inside a coarse cell. A
/// locally decreasing phase (beyond round-off) triggers one rescan of the
/// cell at 8× resolution before giving up.
fn bracket_cell(
    path: &NoisePath,
    k_lo: f64,
    k_hi: f64,
    th_lo: f64,
    th_hi: f64,
    depth: usize,
    out: &mut Vec<LevelBracket>,
) -> Result<()> {
    if th_hi < th_lo - 1e-6 {
        if depth >= 1 {
            return Err(LabError::BracketFailure {
                kappa_lo: k_lo,
                kappa_hi: k_hi,
                detail: format!("phase decreased from {th_lo} to {th_hi}"),
            });
        }
        let sub = 8;
        let kappas: Vec<f64> = (0..=sub)
            .map(|i| k_lo + (k_hi - k_lo) * i as f64 / sub as f64)
            .collect();
        let thetas = terminal_phases(path, &kappas, 0.0)?;
        for i in 0..sub {
            bracket_cell(path, kappas[i], kappas[i + 1], thetas[i], thetas[i + 1], depth + 1, out)?;
        }
        return Ok(());
    }
    let (m_lo, m_hi) = (level(th_lo), level(th_hi));
    for target_level in (m_lo + 1)..=m_hi {
        out.push(LevelBracket {
            target: target_level as f64 * PI,
            lo: k_lo,
            hi: k_hi,
        });
    }
    Ok(())
}

/// Bisect all brackets in lockstep: each iteration integrates every active
/// midpoint in one sweep over the path.
fn refine_brackets(
    path: &NoisePath,
    mut brackets: Vec<LevelBracket>,
    tol_kappa: f64,
) -> Result<Vec<f64>> {
    loop {
        let active: Vec<usize> = (0..brackets.len())
            .filter(|&i| brackets[i].hi - brackets[i].lo > tol_kappa)
            .collect();
        if active.is_empty() {
            break;
        }
        let mids: Vec<f64> = active
            .iter()
            .map(|&i| 0.5 * (brackets[i].lo + brackets[i].hi))
            .collect();
        let thetas = terminal_phases(path, &mids, 0.0)?;
        for ((&i, &mid), &th) in active.iter().zip(&mids).zip(&thetas) {
            let b = &mut brackets[i];
            if th + LEVEL_TOL * PI < b.target {
                b.lo = mid;
            } else {
                b.hi = mid;
            }
        }
    }
    Ok(brackets.iter().map(|b| 0.5 * (b.lo + b.hi)).collect())
}

/// Cumulative jump counts of `⌊Θ_{n·s}(λ)/π⌋` over a grid of λ values and
/// fractional times `s ∈ [0, 1]`, all sharing one noise path.
#[derive(Debug, Clone)]
pub struct JumpField {
    pub lambda_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// `levels[i][j] = ⌊Θ_{n·t_grid[j]}(lambda_grid[i]) / π⌋`.
    pub levels: Vec<Vec<i64>>,
    /// First-passage events `(s, level)` per λ, in fractional time units.
    pub events: Vec<Vec<(f64, i64)>>,
}

impl JumpField {
    /// Atom count in the rectangle `[t1, t2] × [λ1, λ2]` indexed by grid
    /// positions, via the corner identity
    /// `(Θ_{t2}(λ2)-Θ_{t1}(λ2)) - (Θ_{t2}(λ1)-Θ_{t1}(λ1))` in floor units.
    pub fn rectangle_count(&self, t_idx: (usize, usize), lambda_idx: (usize, usize)) -> i64 {
        let (t1, t2) = t_idx;
        let (l1, l2) = lambda_idx;
        (self.levels[l2][t2] - self.levels[l2][t1])
            - (self.levels[l1][t2] - self.levels[l1][t1])
    }
}

/// Integrate the relative phase for every λ in the grid and record floor
/// levels at the requested fractional times.
pub fn jump_field(
    path: &NoisePath,
    spec: &PotentialSpec,
    e0: f64,
    n: f64,
    lambda_grid: &[f64],
    t_grid: &[f64],
) -> Result<JumpField> {
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidParameter(
            "lambda grid must be strictly increasing".into(),
        ));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidParameter(
            "t grid must be nonempty and strictly increasing".into(),
        ));
    }
    let (t_min, t_max) = (t_grid[0], *t_grid.last().unwrap());
    if t_min < 0.0 || t_max > 1.0 {
        return Err(LabError::InvalidParameter(
            "t grid must lie inside [0, 1]".into(),
        ));
    }
    if n * t_max > path.horizon() + path.dt() {
        return Err(LabError::GridMismatch(format!(
            "path horizon {} shorter than n·t_max = {}",
            path.horizon(),
            n * t_max
        )));
    }
    if !(e0 > 0.0) {
        return Err(LabError::InvalidParameter("e0 must be positive".into()));
    }
    let kappa0 = e0.sqrt();

    let base = crate::prufer::integrate_phase(path, spec, kappa0, 0.0)?;
    let grid_indices: Vec<usize> = t_grid
        .iter()
        .map(|&t| ((n * t / path.dt()).round() as usize).min(path.steps()))
        .collect();

    let mut levels = Vec::with_capacity(lambda_grid.len());
    let mut events = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        if lambda == 0.0 {
            levels.push(vec![0; t_grid.len()]);
            events.push(Vec::new());
            continue;
        }
        let kappa = kappa0 + lambda / n;
        let traj = crate::prufer::integrate_phase(path, spec, kappa, 0.0)?;
        let mut lam_levels = Vec::with_capacity(t_grid.len());
        let mut lam_events = Vec::new();
        let mut reached = 0i64;
        let mut next_grid = 0usize;
        for j in 0..=path.steps() {
            let big_theta = traj.thetas[j] - base.thetas[j];
            let lev = level(big_theta);
            if lev > reached {
                let s = j as f64 * path.dt() / n;
                for k in (reached + 1)..=lev {
                    lam_events.push((s, k));
                }
                reached = lev;
            }
            while next_grid < grid_indices.len() && grid_indices[next_grid] == j {
                lam_levels.push(level(big_theta));
                next_grid += 1;
            }
        }
        levels.push(lam_levels);
        events.push(lam_events);
    }

    Ok(JumpField {
        lambda_grid: lambda_grid.to_vec(),
        t_grid: t_grid.to_vec(),
        levels,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{DecayProfile, PathSeed, PotentialSpec};

    fn zero_potential() -> PotentialSpec {
        PotentialSpec::new(0.3, 1, [], DecayProfile::PowerDecay).unwrap()
    }

    #[test]
    fn free_count_below() {
        let spec = zero_potential();
        let l = 10.0;
        let path = spec.sample_path(l, 1e-4, PathSeed::new(0, 0)).unwrap();
        // Free eigenvalues are (jπ/L)²; θ_L(1)·/π = L/π = 3.18...
        assert_eq!(count_below(&path, &spec, l, 1.0).unwrap(), 3);
        // Boundary case: the level at energy (5π/L)² is counted.
        let boundary = (5.0 * PI / l).powi(2);
        assert_eq!(count_below(&path, &spec, l, boundary).unwrap(), 5);
    }

    #[test]
    fn count_below_rejects_nonpositive_energy() {
        let spec = zero_potential();
        let path = spec.sample_path(5.0, 1e-3, PathSeed::new(0, 0)).unwrap();
        assert!(count_below(&path, &spec, 5.0, 0.0).is_err());
        assert!(count_below(&path, &spec, 5.0, -1.0).is_err());
    }

    #[test]
    fn free_picket_fence() {
        // With F = 0 the atoms sit at jπ - L·κ₀ with exact spacing π.
        let spec = zero_potential();
        let l = 100.0;
        let path = spec.sample_path(l, 1e-3, PathSeed::new(0, 0)).unwrap();
        let window = (0.0, 8.0 * PI);
        let result = solve_window(&path, &spec, l, 1.0, window).unwrap();
        assert!(result.oscillation_consistent());
        assert_eq!(result.atoms.len(), 8);
        for (j, atom) in result.atoms.iter().enumerate() {
            let expected = (32.0 + j as f64) * PI - 100.0;
            assert!(
                (atom - expected).abs() < 1e-6,
                "atom {j}: {atom} vs {expected}"
            );
        }
        for w in result.atoms.windows(2) {
            assert!((w[1] - w[0] - PI).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_width_window_is_empty() {
        let spec = zero_potential();
        let path = spec.sample_path(10.0, 1e-3, PathSeed::new(0, 0)).unwrap();
        let result = solve_window(&path, &spec, 10.0, 1.0, (2.0, 2.0)).unwrap();
        assert!(result.atoms.is_empty());
    }

    #[test]
    fn random_instance_is_oscillation_consistent() {
        let spec = PotentialSpec::cosine(0.3).unwrap();
        let l = 50.0;
        for seed in 0..3 {
            let path = spec
                .sample_path(l, crate::prufer::default_phase_dt(l, 1.1), PathSeed::new(77, seed))
                .unwrap();
            let result = solve_window(&path, &spec, l, 1.0, (0.0, 4.0 * PI)).unwrap();
            assert!(result.oscillation_consistent());
            for w in result.atoms.windows(2) {
                assert!(w[1] > w[0]);
            }
            for atom in &result.atoms {
                assert!(*atom >= -1e-6 && *atom <= 4.0 * PI + 1e-6);
            }
        }
    }

    #[test]
    fn free_jump_field_follows_hyperbolas() {
        // Θ_{nt}(λ) = λ t exactly, so the floor at (t, λ) is ⌊λt/π⌋.
        let spec = zero_potential();
        let n = 50.0;
        let path = spec.sample_path(n, 1e-3, PathSeed::new(0, 0)).unwrap();
        let lambdas = [0.0, PI, 2.0 * PI, 4.0 * PI];
        let t_grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let field = jump_field(&path, &spec, 1.0, n, &lambdas, &t_grid).unwrap();
        for (i, &lam) in lambdas.iter().enumerate() {
            for (j, &t) in t_grid.iter().enumerate() {
                let expected = (lam * t / PI + 1e-9).floor() as i64;
                assert_eq!(field.levels[i][j], expected, "λ = {lam}, t = {t}");
            }
        }
        // Empty λ range ⇒ zero rectangle count.
        assert_eq!(field.rectangle_count((0, 4), (0, 0)), 0);
        // Full rectangle [0,1]×[0,4π] holds ⌊4π/π⌋ = 4 atoms.
        assert_eq!(field.rectangle_count((0, 4), (0, 3)), 4);
    }

    #[test]
    fn rectangle_counts_are_additive() {
        let spec = PotentialSpec::cosine(0.3).unwrap();
        let n = 60.0;
        let path = spec
            .sample_path(n, crate::prufer::default_phase_dt(n, 1.2), PathSeed::new(5, 9))
            .unwrap();
        let lambdas = [0.0, PI, 2.0 * PI, 3.0 * PI];
        let t_grid = [0.0, 0.5, 1.0];
        let field = jump_field(&path, &spec, 1.0, n, &lambdas, &t_grid).unwrap();
        let whole = field.rectangle_count((0, 2), (0, 3));
        let quadrants = field.rectangle_count((0, 1), (0, 1))
            + field.rectangle_count((1, 2), (0, 1))
            + field.rectangle_count((0, 1), (1, 3))
            + field.rectangle_count((1, 2), (1, 3));
        assert_eq!(whole, quadrants);
    }

    #[test]
    fn jump_counts_are_monotone_in_lambda() {
        let spec = PotentialSpec::cosine(0.3).unwrap();
        let n = 60.0;
        for seed in 0..3 {
            let path = spec
                .sample_path(n, crate::prufer::default_phase_dt(n, 1.2), PathSeed::new(31, seed))
                .unwrap();
            let lambdas = [PI, 2.0 * PI, 4.0 * PI];
            let t_grid = [0.0, 0.25, 0.5, 0.75, 1.0];
            let field = jump_field(&path, &spec, 1.0, n, &lambdas, &t_grid).unwrap();
            for j in 0..t_grid.len() {
                for i in 1..lambdas.len() {
                    assert!(
                        field.levels[i][j] >= field.levels[i - 1][j],
                        "seed {seed}: level decreased in λ at t index {j}"
                    );
                }
            }
        }
    }
}
