//! Python bindings: the operator-side objects (potential, noise path,
//! Prüfer phases, eigenvalue windows) and the limit-side simulators and
//! analytics, with plain lists and dicts at the boundary.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use prufer_lab::explosion::{self, DriftPotential};
use prufer_lab::limit_sde::{
    self, EnvelopeKind, EnvelopeSign, SdeConfig, TimePower,
};
use prufer_lab::prufer;
use prufer_lab::spectrum;
use prufer_lab::stats;
use prufer_lab::torus::{self, DecayProfile, PathSeed};
use prufer_lab::LabError;

fn err(e: LabError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Mean-zero trigonometric potential on the d-torus with a decay profile.
#[pyclass(name = "PotentialSpec")]
struct PyPotentialSpec {
    inner: torus::PotentialSpec,
}

#[pymethods]
impl PyPotentialSpec {
    /// Rows are `[k_1, .., k_d, re, im]`; profile is "power",
    /// ("constant", scale) is expressed by passing `constant_coupling`.
    #[new]
    #[pyo3(signature = (alpha, dim, fourier, constant_coupling = None))]
    fn new(
        alpha: f64,
        dim: usize,
        fourier: Vec<Vec<f64>>,
        constant_coupling: Option<f64>,
    ) -> PyResult<Self> {
        let profile = match constant_coupling {
            None => DecayProfile::PowerDecay,
            Some(s) => DecayProfile::ConstantCoupling(s),
        };
        let mut coeffs = Vec::new();
        for row in &fourier {
            if row.len() != dim + 2 {
                return Err(PyValueError::new_err(format!(
                    "fourier row must have {} entries",
                    dim + 2
                )));
            }
            let k: Vec<i64> = row[..dim].iter().map(|&x| x as i64).collect();
            coeffs.push((k, Complex64::new(row[dim], row[dim + 1])));
        }
        Ok(Self {
            inner: torus::PotentialSpec::new(alpha, dim, coeffs, profile).map_err(err)?,
        })
    }

    /// The default potential `F = 2 cos x` in one dimension.
    #[staticmethod]
    fn cosine(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: torus::PotentialSpec::cosine(alpha).map_err(err)? })
    }

    fn eval_f(&self, x: Vec<f64>) -> f64 {
        self.inner.eval_f(&x)
    }

    fn eval_a(&self, t: f64) -> f64 {
        self.inner.eval_a(t)
    }

    /// Spectral constants at the reference energy, as a dict.
    fn constants<'py>(&self, py: Python<'py>, e0: f64) -> PyResult<Bound<'py, PyDict>> {
        let c = self.inner.compute_constants(e0).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("e0", c.e0)?;
        d.set_item("kappa0", c.kappa0)?;
        d.set_item("c_e0", c.c_e0)?;
        d.set_item("beta_e0", c.beta_e0)?;
        d.set_item("psi_mean", c.psi_mean)?;
        Ok(d)
    }

    /// Resolvent coefficients as `[(k, re, im), ...]`.
    fn resolvent(&self, kappa: f64) -> PyResult<Vec<(Vec<i64>, f64, f64)>> {
        let g = self.inner.resolvent_coeffs(kappa).map_err(err)?;
        Ok(g.into_iter().map(|(k, c)| (k, c.re, c.im)).collect())
    }

    /// Sample one Brownian path with the potential evaluated along it.
    fn sample_path(&self, horizon: f64, dt: f64, master: u64, index: u64) -> PyResult<PyNoisePath> {
        Ok(PyNoisePath {
            inner: self
                .inner
                .sample_path(horizon, dt, PathSeed::new(master, index))
                .map_err(err)?,
        })
    }
}

/// One discretized torus Brownian path.
#[pyclass(name = "NoisePath")]
struct PyNoisePath {
    inner: torus::NoisePath,
}

#[pymethods]
impl PyNoisePath {
    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    fn f_values(&self) -> Vec<f64> {
        self.inner.f_values().to_vec()
    }

    fn position(&self, j: usize) -> Vec<f64> {
        self.inner.position(j).to_vec()
    }
}

/// Prüfer phase trajectory θ_t(κ) on the path grid.
#[pyfunction]
fn integrate_phase(
    path: &PyNoisePath,
    spec: &PyPotentialSpec,
    kappa: f64,
    theta0: f64,
) -> PyResult<Vec<f64>> {
    Ok(prufer::integrate_phase(&path.inner, &spec.inner, kappa, theta0)
        .map_err(err)?
        .thetas)
}

/// Relative phase trajectory and the terminal fractional phase `(Θ, φ)`.
#[pyfunction]
fn relative_phase(
    path: &PyNoisePath,
    spec: &PyPotentialSpec,
    e0: f64,
    lambda: f64,
    l: f64,
) -> PyResult<(Vec<f64>, f64)> {
    let rel = prufer::relative_phase(&path.inner, &spec.inner, e0, lambda, l).map_err(err)?;
    Ok((rel.big_theta, rel.phi))
}

/// `{x}_π`.
#[pyfunction]
fn fractional(theta: f64) -> f64 {
    prufer::fractional(theta)
}

/// Dirichlet eigenvalue count of `H_L` in `(0, energy]`.
#[pyfunction]
fn count_below(
    path: &PyNoisePath,
    spec: &PyPotentialSpec,
    l: f64,
    energy: f64,
) -> PyResult<i64> {
    spectrum::count_below(&path.inner, &spec.inner, l, energy).map_err(err)
}

/// Rescaled eigenvalue window: dict with atoms, wavenumbers, counts, φ.
#[pyfunction]
fn solve_window<'py>(
    py: Python<'py>,
    path: &PyNoisePath,
    spec: &PyPotentialSpec,
    l: f64,
    e0: f64,
    window: (f64, f64),
) -> PyResult<Bound<'py, PyDict>> {
    let r = spectrum::solve_window(&path.inner, &spec.inner, l, e0, window).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("atoms", r.atoms)?;
    d.set_item("eigen_kappas", r.eigen_kappas)?;
    d.set_item("count_lo", r.count_lo)?;
    d.set_item("count_hi", r.count_hi)?;
    d.set_item("phi", r.phi)?;
    Ok(d)
}

/// Coupled phase SDE: snapped terminal winding phases per λ.
#[pyfunction]
fn simulate_sine_beta(
    beta: f64,
    lambdas: Vec<f64>,
    horizon: f64,
    dt: f64,
    master: u64,
    index: u64,
) -> PyResult<(Vec<f64>, bool)> {
    let fam = limit_sde::simulate_sine_beta_with(
        beta,
        &lambdas,
        horizon,
        dt,
        (master, index),
        2.0,
        false,
    )
    .map_err(err)?;
    Ok((fam.snapped, fam.convergence_warning))
}

fn sde_config(
    c_n: f64,
    lambda: f64,
    delta: f64,
    epsilon: f64,
    dt: f64,
    r0: f64,
    noise_scale: Option<f64>,
) -> SdeConfig {
    SdeConfig {
        c_n,
        lambda,
        delta,
        epsilon,
        dt,
        r0,
        noise_scale,
        ..SdeConfig::default()
    }
}

/// Log-tan diffusion with explosion/restart; returns `(times, values,
/// explosion_times)`.
#[pyfunction]
#[pyo3(signature = (c_n, lambda, horizon, dt, master, index, r0 = 0.0, gamma_power = false, noise_scale = None))]
#[allow(clippy::too_many_arguments)]
fn simulate_riccati(
    c_n: f64,
    lambda: f64,
    horizon: f64,
    dt: f64,
    master: u64,
    index: u64,
    r0: f64,
    gamma_power: bool,
    noise_scale: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let cfg = sde_config(c_n, lambda, 0.0, 0.0, dt, r0, noise_scale);
    let power = if gamma_power { TimePower::GammaPower } else { TimePower::Uniform };
    let p = limit_sde::simulate_riccati(&cfg, power, horizon, (master, index)).map_err(err)?;
    Ok((p.times, p.values, p.explosions))
}

/// Stationary envelope diffusion `S_±`; sign is +1 or -1.
#[pyfunction]
#[pyo3(signature = (c_n, lambda, delta, epsilon, sign, horizon, dt, master, index, r0 = 0.0))]
#[allow(clippy::too_many_arguments)]
fn simulate_stationary(
    c_n: f64,
    lambda: f64,
    delta: f64,
    epsilon: f64,
    sign: i32,
    horizon: f64,
    dt: f64,
    master: u64,
    index: u64,
    r0: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let cfg = sde_config(c_n, lambda, delta, epsilon, dt, r0, None);
    let s = match sign {
        1 => EnvelopeSign::Plus,
        -1 => EnvelopeSign::Minus,
        _ => return Err(PyValueError::new_err("sign must be +1 or -1")),
    };
    let p = limit_sde::simulate_stationary(&cfg, s, horizon, (master, index)).map_err(err)?;
    Ok((p.times, p.values, p.explosions))
}

/// Drift envelope value; kind is one of "cosh_plus", "cosh_minus",
/// "tanh_plus_eps", "tanh_minus_eps".
#[pyfunction]
fn envelope(kind: &str, r: f64, delta: f64, epsilon: f64) -> PyResult<f64> {
    let k = match kind {
        "cosh_plus" => EnvelopeKind::CoshPlus,
        "cosh_minus" => EnvelopeKind::CoshMinus,
        "tanh_plus_eps" => EnvelopeKind::TanhPlusEps,
        "tanh_minus_eps" => EnvelopeKind::TanhMinusEps,
        _ => return Err(PyValueError::new_err(format!("unknown envelope kind {kind}"))),
    };
    Ok(limit_sde::envelope(k, r, delta, epsilon))
}

/// Zeros `(a_n, b_n)` of the negated drift `W₊`.
#[pyfunction]
fn critical_points(c_n: f64, lambda: f64, delta: f64, epsilon: f64) -> PyResult<(f64, f64)> {
    DriftPotential::new(c_n, lambda, delta, epsilon)
        .and_then(|p| p.critical_points())
        .map_err(err)
}

/// Mean explosion time of `S₊` from `r` by nested quadrature.
#[pyfunction]
#[pyo3(signature = (c_n, lambda, delta, epsilon, r, truncation = 8.0))]
fn mean_explosion_time(
    c_n: f64,
    lambda: f64,
    delta: f64,
    epsilon: f64,
    r: f64,
    truncation: f64,
) -> PyResult<f64> {
    DriftPotential::new(c_n, lambda, delta, epsilon)
        .and_then(|p| p.mean_explosion_quadrature(r, truncation))
        .map_err(err)
}

/// Closed-form scale limit `(π - 2 arctan e^r)/λ`.
#[pyfunction]
fn limit_mean(lambda: f64, r: f64) -> PyResult<f64> {
    explosion::limit_mean(lambda, r).map_err(err)
}

/// Limiting Laplace transform `1/(1+ξ)`.
#[pyfunction]
fn laplace_limit(xi: f64) -> f64 {
    explosion::laplace_limit(xi)
}

fn report_dict<'py>(py: Python<'py>, r: stats::TestReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("test", r.test)?;
    d.set_item("statistic", r.statistic)?;
    d.set_item("p_value", r.p_value)?;
    d.set_item("n", r.n)?;
    d.set_item("target", r.target)?;
    d.set_item("pass", r.pass)?;
    Ok(d)
}

/// Kolmogorov–Smirnov test against Exp(rate).
#[pyfunction]
fn ks_exponential<'py>(
    py: Python<'py>,
    samples: Vec<f64>,
    rate: f64,
) -> PyResult<Bound<'py, PyDict>> {
    report_dict(py, stats::ks_exponential(&samples, rate).map_err(err)?)
}

/// Index of dispersion plus Poisson histogram chi-square.
#[pyfunction]
fn poisson_dispersion<'py>(
    py: Python<'py>,
    counts: Vec<u64>,
    expected_mean: f64,
) -> PyResult<Bound<'py, PyDict>> {
    report_dict(py, stats::poisson_dispersion(&counts, expected_mean).map_err(err)?)
}

/// Kolmogorov–Smirnov test against Uniform[0, π).
#[pyfunction]
fn uniformity_test<'py>(py: Python<'py>, phases: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    report_dict(py, stats::uniformity_test(&phases).map_err(err)?)
}

#[pymodule]
fn pruferlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPotentialSpec>()?;
    m.add_class::<PyNoisePath>()?;
    m.add_function(wrap_pyfunction!(integrate_phase, m)?)?;
    m.add_function(wrap_pyfunction!(relative_phase, m)?)?;
    m.add_function(wrap_pyfunction!(fractional, m)?)?;
    m.add_function(wrap_pyfunction!(count_below, m)?)?;
    m.add_function(wrap_pyfunction!(solve_window, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_sine_beta, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_riccati, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(envelope, m)?)?;
    m.add_function(wrap_pyfunction!(critical_points, m)?)?;
    m.add_function(wrap_pyfunction!(mean_explosion_time, m)?)?;
    m.add_function(wrap_pyfunction!(limit_mean, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_limit, m)?)?;
    m.add_function(wrap_pyfunction!(ks_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_dispersion, m)?)?;
    m.add_function(wrap_pyfunction!(uniformity_test, m)?)?;
    Ok(())
}
