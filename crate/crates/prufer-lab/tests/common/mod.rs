//! Shared test support: a dense finite-difference oracle for Dirichlet
//! eigenvalue counts, independent of the phase-integration path it checks.

use prufer_lab::torus::{NoisePath, PotentialSpec};

/// Count eigenvalues below `energy` of the standard 3-point discretization
/// of `-d²/dx² + a(x) F(X_x)` on `[0, l]` with Dirichlet ends, using the
/// Sturm/LDLT pivot count on the tridiagonal matrix.
///
/// The potential is evaluated with the same piecewise-constant noise
/// convention the integrator sees: `F` frozen at the left path node.
pub fn dirichlet_count_below(
    path: &NoisePath,
    spec: &PotentialSpec,
    l: f64,
    energy: f64,
    grid_n: usize,
) -> usize {
    let h = l / grid_n as f64;
    let off2 = 1.0 / (h * h * h * h); // off-diagonal squared
    let guard = 1e-280;
    let mut count = 0usize;
    let mut pivot = 0.0f64;
    for i in 1..grid_n {
        let x = i as f64 * h;
        let node = ((x / path.dt()) as usize).min(path.steps());
        let v = spec.eval_a(x) * path.f_values()[node];
        let d = 2.0 / (h * h) + v - energy;
        pivot = if i == 1 {
            d
        } else {
            let safe = if pivot.abs() < guard {
                guard.copysign(pivot)
            } else {
                pivot
            };
            d - off2 / safe
        };
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}
