//! Oscillation counts against the dense finite-difference oracle.

mod common;

use prufer_lab::prufer::default_phase_dt;
use prufer_lab::spectrum::count_below;
use prufer_lab::torus::{PathSeed, PotentialSpec};

const GRID_N: usize = 200_000;

#[test]
fn free_counts_match_oracle_exactly() {
    let spec = PotentialSpec::new(0.3, 1, [], prufer_lab::torus::DecayProfile::PowerDecay)
        .unwrap();
    let l = 10.0;
    let path = spec.sample_path(l, 1e-3, PathSeed::new(0, 0)).unwrap();
    for energy in [0.5, 1.0, 2.0, 4.0] {
        let phase_count = count_below(&path, &spec, l, energy).unwrap();
        let fd_count = common::dirichlet_count_below(&path, &spec, l, energy, GRID_N);
        assert_eq!(phase_count, fd_count as i64, "free count at E = {energy}");
    }
}

#[test]
fn random_counts_match_oracle_within_one() {
    // 20 seeded desk-scale instances at the bulk energy.
    let spec = PotentialSpec::cosine(0.3).unwrap();
    let l = 50.0;
    let dt = default_phase_dt(l, 1.0);
    for seed in 0..20u64 {
        let path = spec.sample_path(l, dt, PathSeed::new(1234, seed)).unwrap();
        let phase_count = count_below(&path, &spec, l, 1.0).unwrap();
        let fd_count = common::dirichlet_count_below(&path, &spec, l, 1.0, GRID_N) as i64;
        assert!(
            (phase_count - fd_count).abs() <= 1,
            "seed {seed}: oscillation count {phase_count} vs finite differences {fd_count}"
        );
    }
}

// Bisect the oracle's Sturm count in energy to locate single eigenvalues.
fn fd_eigenvalue(
    path: &prufer_lab::torus::NoisePath,
    spec: &PotentialSpec,
    l: f64,
    target_index: usize,
    mut e_lo: f64,
    mut e_hi: f64,
) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (e_lo + e_hi);
        if common::dirichlet_count_below(path, spec, l, mid, GRID_N) <= target_index {
            e_lo = mid;
        } else {
            e_hi = mid;
        }
    }
    0.5 * (e_lo + e_hi)
}

#[test]
fn atom_positions_match_matrix_spectrum() {
    // The rescaled atoms of the window solver sit where the dense matrix
    // discretization puts its eigenvalues.
    let spec = PotentialSpec::cosine(0.3).unwrap();
    let l = 50.0;
    let e0: f64 = 1.0;
    let window = (0.0, 4.0 * std::f64::consts::PI);
    let dt = default_phase_dt(l, e0.sqrt() + window.1 / l);
    for seed in [3u64, 11, 27] {
        let path = spec.sample_path(l, dt, PathSeed::new(77, seed)).unwrap();
        let solved = prufer_lab::spectrum::solve_window(&path, &spec, l, e0, window).unwrap();

        let e_lo = (e0.sqrt() + window.0 / l).powi(2);
        let e_hi = (e0.sqrt() + window.1 / l).powi(2);
        let below_window = common::dirichlet_count_below(&path, &spec, l, e_lo, GRID_N);
        let in_window =
            common::dirichlet_count_below(&path, &spec, l, e_hi, GRID_N) - below_window;
        assert!(
            (solved.atoms.len() as i64 - in_window as i64).abs() <= 1,
            "seed {seed}: {} atoms vs {} matrix eigenvalues",
            solved.atoms.len(),
            in_window
        );

        let shared = solved.atoms.len().min(in_window);
        for j in 0..shared {
            let e_j = fd_eigenvalue(&path, &spec, l, below_window + j, e_lo, e_hi);
            let fd_atom = l * (e_j.sqrt() - e0.sqrt());
            assert!(
                (solved.atoms[j] - fd_atom).abs() < 0.02,
                "seed {seed}, atom {j}: {} vs matrix {}",
                solved.atoms[j],
                fd_atom
            );
        }
    }
}
