//! Python bindings: lattices, parameters, density matrices and the main
//! simulation entry points. Matrices and series cross the boundary as plain
//! lists so the module has no NumPy dependency.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ringcav::hilbert::make_lattice;
use ringcav::meanfield::{self, MeanFieldConfig};
use ringcav::model::build_hamiltonian;
use ringcav::observables::wigner::{self, WignerOptions};
use ringcav::observables::{self, Mode};
use ringcav::quantum::{self, IntegratorConfig, Trajectory};
use ringcav::steady::{self, SteadyOptions};
use ringcav::{DensityState, Error, LatticeSpec, PhysicalParams, RationalAngle};

create_exception!(ringcav, ConvergenceError, PyRuntimeError);
create_exception!(ringcav, TruncationError, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::StepUnderflow { .. } | Error::TraceDrift { .. } | Error::NotConverged { .. } | Error::Eigensolver(_) => {
            ConvergenceError::new_err(e.to_string())
        }
        Error::SupportViolation { .. } | Error::CutoffTooSmall { .. } => TruncationError::new_err(e.to_string()),
        Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn angle(sin_phi: (i64, i64)) -> PyResult<RationalAngle> {
    RationalAngle::new(sin_phi.0, sin_phi.1).map_err(to_py)
}

fn mode(name: &str) -> PyResult<Mode> {
    match name {
        "plus" | "+" => Ok(Mode::Plus),
        "minus" | "-" => Ok(Mode::Minus),
        _ => Err(PyValueError::new_err(format!("mode must be 'plus' or 'minus', got {name:?}"))),
    }
}

/// Model parameters in recoil units; `sin_phi` is a fraction `(a, b)`.
#[pyclass(name = "PhysicalParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyParams(PhysicalParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (eta, u0, delta_c, kappa, sin_phi = (1, 2)))]
    fn new(eta: f64, u0: f64, delta_c: f64, kappa: f64, sin_phi: (i64, i64)) -> PyResult<Self> {
        let p = PhysicalParams {
            eta,
            u0,
            delta_c,
            kappa,
            angle: angle(sin_phi)?,
        };
        p.validate().map_err(to_py)?;
        Ok(Self(p))
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta
    }

    #[getter]
    fn u0(&self) -> f64 {
        self.0.u0
    }

    #[getter]
    fn delta_c(&self) -> f64 {
        self.0.delta_c
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }

    #[getter]
    fn sin_phi(&self) -> (i64, i64) {
        (self.0.angle.numerator(), self.0.angle.denominator())
    }

    fn with_eta(&self, eta: f64) -> Self {
        Self(self.0.with_eta(eta))
    }

    fn __repr__(&self) -> String {
        format!(
            "PhysicalParams(eta={}, u0={}, delta_c={}, kappa={}, sin_phi={})",
            self.0.eta, self.0.u0, self.0.delta_c, self.0.kappa, self.0.angle
        )
    }
}

/// Truncated atom ⊗ mode₊ ⊗ mode₋ space.
#[pyclass(name = "Lattice", frozen, from_py_object)]
#[derive(Clone)]
struct PyLattice(LatticeSpec);

#[pymethods]
impl PyLattice {
    #[new]
    #[pyo3(signature = (sin_phi, n_max, cut_plus, cut_minus))]
    fn new(sin_phi: (i64, i64), n_max: usize, cut_plus: usize, cut_minus: usize) -> PyResult<Self> {
        make_lattice(angle(sin_phi)?, n_max, cut_plus, cut_minus)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims()
    }

    #[getter]
    fn momentum_quantum(&self) -> f64 {
        self.0.momentum_quantum_f64()
    }

    /// Momentum kicks `(pump₊, pump₋, mode exchange)` in lattice units.
    #[getter]
    fn kicks(&self) -> [i64; 3] {
        self.0.kicks().as_array()
    }

    fn ground_state(&self) -> PyState {
        PyState(DensityState::ground(&self.0))
    }

    fn __repr__(&self) -> String {
        format!("Lattice(sin_phi={}, dims={:?})", self.0.angle(), self.0.dims())
    }
}

#[pyclass(name = "DensityState", frozen, from_py_object)]
#[derive(Clone)]
struct PyState(DensityState);

#[pymethods]
impl PyState {
    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.dims().to_vec()
    }

    fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    fn min_eigenvalue(&self) -> f64 {
        self.0.min_eigenvalue()
    }

    fn hermiticity_error(&self) -> f64 {
        self.0.hermiticity_error()
    }

    /// Row-major nested list of matrix elements.
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.matrix();
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
            .collect()
    }

    fn trace_distance(&self, other: &PyState) -> f64 {
        self.0.trace_distance(&other.0)
    }

    fn log_negativity(&self) -> f64 {
        observables::log_negativity(&self.0)
    }

    fn reduced_mode(&self, which: &str) -> PyResult<PyState> {
        observables::reduced_mode(&self.0, mode(which)?)
            .map(PyState)
            .map_err(to_py)
    }

    fn reduced_atom(&self) -> PyResult<PyState> {
        observables::reduced_atom(&self.0).map(PyState).map_err(to_py)
    }

    fn photon_distribution(&self, which: &str) -> PyResult<Vec<f64>> {
        observables::photon_distribution(&self.0, mode(which)?).map_err(to_py)
    }

    /// `[(p, probability), ...]` with p in units of ħk.
    fn momentum_distribution(&self, lattice: &PyLattice) -> PyResult<Vec<(f64, f64)>> {
        observables::momentum_stats(&self.0, &lattice.0)
            .map(|s| s.distribution)
            .map_err(to_py)
    }

    fn order_parameters(&self, lattice: &PyLattice) -> PyResult<BTreeMap<&'static str, Complex64>> {
        let o = observables::order_parameters(&self.0, &lattice.0).map_err(to_py)?;
        Ok(BTreeMap::from([
            ("theta_plus", o.theta_plus),
            ("theta_minus", o.theta_minus),
            ("bunching_plus", o.bunching_plus),
            ("bunching_minus", o.bunching_minus),
        ]))
    }

    fn to_text(&self) -> String {
        ringcav::io::snapshot_text(&self.0)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<PyState> {
        ringcav::io::parse_snapshot(text).map(PyState).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("DensityState(dims={:?})", self.0.dims())
    }
}

type Series = (Vec<f64>, BTreeMap<String, Vec<f64>>);

fn series(traj: &Trajectory) -> Series {
    let columns = traj.series.iter().cloned().collect();
    (traj.times.clone(), columns)
}

/// Quantum dynamics from the ground state. Returns `(times, columns, final)`.
#[pyfunction]
#[pyo3(signature = (params, lattice, t_final = 4.0, record_interval = 0.05, rel_tol = 1e-7, abs_tol = 1e-9))]
fn evolve_quantum(
    py: Python<'_>,
    params: &PyParams,
    lattice: &PyLattice,
    t_final: f64,
    record_interval: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> PyResult<(Vec<f64>, BTreeMap<String, Vec<f64>>, PyState)> {
    let cfg = IntegratorConfig {
        t_final,
        record_interval,
        rel_tol,
        abs_tol,
        ..Default::default()
    };
    let (p, spec) = (params.0, lattice.0.clone());
    let traj = py
        .detach(move || {
            let h = build_hamiltonian(&spec, &p)?;
            quantum::evolve(&DensityState::ground(&spec), &h, &spec, p.kappa, &cfg)
        })
        .map_err(to_py)?;
    let last = traj.final_state().expect("final state is kept").clone();
    let (t, c) = series(&traj);
    Ok((t, c, PyState(last)))
}

/// Steady state and a dictionary of solver diagnostics.
#[pyfunction]
#[pyo3(signature = (params, lattice, residual_tol = 1e-7, t_max = 400.0))]
fn steady_state(
    py: Python<'_>,
    params: &PyParams,
    lattice: &PyLattice,
    residual_tol: f64,
    t_max: f64,
) -> PyResult<(PyState, BTreeMap<&'static str, f64>)> {
    let opts = SteadyOptions {
        residual_tol,
        t_max,
        ..Default::default()
    };
    let (p, spec) = (params.0, lattice.0.clone());
    let r = py
        .detach(move || {
            let h = build_hamiltonian(&spec, &p)?;
            steady::steady_state(&h, &spec, p.kappa, &opts, None)
        })
        .map_err(to_py)?;
    let info = BTreeMap::from([
        ("residual", r.residual),
        ("time", r.time),
        ("degenerate", if r.degenerate { 1.0 } else { 0.0 }),
    ]);
    Ok((PyState(r.rho_ss), info))
}

/// Mean-field dynamics from the seeded flat state. Returns `(times, columns)`.
#[pyfunction]
#[pyo3(signature = (params, t_final = 4.0, dt = 1e-3, record_interval = 0.05, grid_points = 256, seed = 1e-3))]
fn evolve_meanfield(
    py: Python<'_>,
    params: &PyParams,
    t_final: f64,
    dt: f64,
    record_interval: f64,
    grid_points: usize,
    seed: f64,
) -> PyResult<Series> {
    let cfg = MeanFieldConfig {
        dt,
        t_final,
        record_interval,
        grid_points,
        seed,
    };
    let p = params.0;
    let (traj, _) = py
        .detach(move || {
            let init = meanfield::default_initial(p.angle, &cfg)?;
            meanfield::evolve(init, &p, &cfg)
        })
        .map_err(to_py)?;
    Ok(series(&traj))
}

/// Wigner function of a single-mode state: `(axis, rows)` with
/// `rows[i][j] = W(axis[j] + i·axis[i])`.
#[pyfunction]
#[pyo3(signature = (state, points = 101, half_width = None))]
fn wigner_grid(state: &PyState, points: usize, half_width: Option<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let w = wigner::wigner(&state.0, &WignerOptions { points, half_width }, None).map_err(to_py)?;
    let n = w.axis.len();
    let rows = (0..n).map(|i| (0..n).map(|j| w.values[(i, j)]).collect()).collect();
    Ok((w.axis, rows))
}

/// Field magnitude from the Wigner maxima of a single-mode state.
#[pyfunction]
#[pyo3(signature = (state, points = 101, half_width = None))]
fn extract_field(
    state: &PyState,
    points: usize,
    half_width: Option<f64>,
) -> PyResult<(f64, bool, Vec<(f64, f64)>)> {
    let w = wigner::wigner(&state.0, &WignerOptions { points, half_width }, None).map_err(to_py)?;
    let f = wigner::extract_field(&w).map_err(to_py)?;
    Ok((f.magnitude, f.is_annulus, f.radial_profile))
}

#[pyfunction]
fn phase_averaged_coherent(lam: f64, cutoff: usize) -> PyState {
    PyState(wigner::phase_averaged_coherent(lam, cutoff))
}

#[pyfunction]
fn is_passive(populations: Vec<f64>) -> bool {
    observables::is_passive(&populations)
}

#[pymodule]
#[pyo3(name = "ringcav")]
fn ringcav_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyParams>()?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(evolve_quantum, m)?)?;
    m.add_function(wrap_pyfunction!(steady_state, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_meanfield, m)?)?;
    m.add_function(wrap_pyfunction!(wigner_grid, m)?)?;
    m.add_function(wrap_pyfunction!(extract_field, m)?)?;
    m.add_function(wrap_pyfunction!(phase_averaged_coherent, m)?)?;
    m.add_function(wrap_pyfunction!(is_passive, m)?)?;
    m.add("ConvergenceError", m.py().get_type::<ConvergenceError>())?;
    m.add("TruncationError", m.py().get_type::<TruncationError>())?;
    Ok(())
}
