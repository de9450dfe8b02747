//! Python module `bpswall`. Results come back as plain dicts and lists.

use bpswall::abelian_wall::{self as ah, AbelianHiggsParams, WallBc};
use bpswall::ew_minimizer::{self as ew, EwAsymptotics, EwOptions, EwParams, EwProblem};
use bpswall::liouville_cs::{self as cs, LumpForm, SolutionFamily};
use bpswall::u2_minimizer::{self as u2, U2Asymptotics, U2Params, U2Problem};
use bpswall::verify::{self, check_closed_form};
use bpswall::wspace::build_measure;
use bpswall::Profile;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use pythonize::pythonize;
use serde::Serialize;

fn err(e: bpswall::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    Ok(pythonize(py, v)?)
}

fn profile_dict<'py>(py: Python<'py>, p: &Profile) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("x", p.grid().points())?;
    for (k, v) in p.fields() {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Uniform grid on `[x_min, x_max]` with `n` nodes.
#[pyclass(name = "Grid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyGrid(bpswall::Grid);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(x_min: f64, x_max: f64, n: usize) -> PyResult<Self> {
        bpswall::Grid::new(x_min, x_max, n).map(Self).map_err(err)
    }

    #[staticmethod]
    fn symmetric(half_width: f64, n: usize) -> PyResult<Self> {
        bpswall::Grid::symmetric(half_width, n).map(Self).map_err(err)
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.0.x_min()
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.0.x_max()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    fn points(&self) -> Vec<f64> {
        self.0.points()
    }

    fn __repr__(&self) -> String {
        format!("Grid({}, {}, {})", self.0.x_min(), self.0.x_max(), self.0.n())
    }
}

/// Closed-form Liouville solutions of the Chern-Simons systems.
#[pyclass(name = "SolutionFamily", frozen)]
struct PyFamily(SolutionFamily);

#[pymethods]
impl PyFamily {
    /// Nonrelativistic walls, either sign of `kappa`.
    #[staticmethod]
    #[pyo3(signature = (kappa, x0=0.0, u0=0.0))]
    fn jp(kappa: f64, x0: f64, u0: f64) -> PyResult<Self> {
        SolutionFamily::jp(kappa, x0, u0).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (kappa, phi0, x0=0.0))]
    fn topological(kappa: f64, phi0: f64, x0: f64) -> PyResult<Self> {
        SolutionFamily::topological(kappa, x0, phi0).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (kappa, u0, x0=0.0))]
    fn lump(kappa: f64, u0: f64, x0: f64) -> PyResult<Self> {
        SolutionFamily::lump(kappa, x0, u0).map(Self).map_err(err)
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa()
    }

    fn u(&self, x: f64) -> f64 {
        self.0.u(x)
    }

    fn du(&self, x: f64) -> f64 {
        self.0.du(x)
    }

    fn phi(&self, x: f64) -> f64 {
        self.0.phi(x)
    }

    fn sample_u(&self, grid: &PyGrid) -> Vec<f64> {
        self.0.sample_u(&grid.0)
    }

    /// Sup-norm residual of the field equation on `grid`.
    fn residual<'py>(&self, py: Python<'py>, grid: &PyGrid) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &check_closed_form(&self.0, &grid.0).map_err(err)?)
    }
}

fn wall<'py>(py: Python<'py>, e: f64, xi: f64, bc: WallBc, grid: Option<PyGrid>) -> PyResult<Bound<'py, PyDict>> {
    let params = AbelianHiggsParams::new(e, xi).map_err(err)?;
    let grid = match grid {
        Some(g) => g.0,
        None => ah::default_grid(params.lambda(), &bc).map_err(err)?,
    };
    let sol = ah::solve_wall(&params, &bc, &grid).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("profile", profile_dict(py, &sol.profile)?)?;
    d.set_item("tail_warning", &sol.tail_warning)?;
    d.set_item("tails", to_py(py, &ah::wall_tail_report(&sol, params.lambda(), &bc).map_err(err)?)?)?;
    d.set_item("residuals", to_py(py, &verify::check_ah_second_order(&sol.profile, &params).map_err(err)?)?)?;
    Ok(d)
}

/// Abelian Higgs wall, Higgs phase on the left.
#[pyfunction]
#[pyo3(signature = (e=1.0, xi=1.0, x_ref=0.0, u_ref=-1.0, grid=None))]
fn higgs_to_magnetic<'py>(py: Python<'py>, e: f64, xi: f64, x_ref: f64, u_ref: f64, grid: Option<PyGrid>) -> PyResult<Bound<'py, PyDict>> {
    wall(py, e, xi, WallBc::HiggsToMagnetic { x_ref, u_ref }, grid)
}

/// Abelian Higgs wall with magnetic phases on both sides.
#[pyfunction]
#[pyo3(signature = (e=1.0, xi=1.0, x0=0.0, u0=-1.0, grid=None))]
fn magnetic_to_magnetic<'py>(py: Python<'py>, e: f64, xi: f64, x0: f64, u0: f64, grid: Option<PyGrid>) -> PyResult<Bound<'py, PyDict>> {
    wall(py, e, xi, WallBc::MagneticToMagnetic { x0, u0 }, grid)
}

#[pyfunction]
#[pyo3(signature = (kappa, phi0, x0=0.0))]
fn wall_energy<'py>(py: Python<'py>, kappa: f64, phi0: f64, x0: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &cs::wall_energy(kappa, phi0, x0).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (kappa, phi0, form="exact"))]
fn lump_energy<'py>(py: Python<'py>, kappa: f64, phi0: f64, form: &str) -> PyResult<Bound<'py, PyAny>> {
    let form: LumpForm = form.parse().map_err(err)?;
    to_py(py, &cs::lump_energy(kappa, phi0, form).map_err(err)?)
}

/// Lump energies over `kappas × phi0s`; `phi0s=None` uses the default lattice.
#[pyfunction]
#[pyo3(signature = (kappas, phi0s=None, form="exact"))]
fn energy_curve<'py>(py: Python<'py>, kappas: Vec<f64>, phi0s: Option<Vec<f64>>, form: &str) -> PyResult<Bound<'py, PyAny>> {
    let form: LumpForm = form.parse().map_err(err)?;
    let phi0s = phi0s.unwrap_or_else(|| cs::default_phi0_lattice(99));
    to_py(py, &cs::energy_curve(&kappas, &phi0s, form).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (e=1.0, gamma=1.0, xi=1.0, alpha1=1.0, alpha2=1.0, beta1=1.0, beta2=1.0, beta=1.0, tol=1e-8, grid=None))]
#[allow(clippy::too_many_arguments)]
fn u2_wall<'py>(
    py: Python<'py>,
    e: f64,
    gamma: f64,
    xi: f64,
    alpha1: f64,
    alpha2: f64,
    beta1: f64,
    beta2: f64,
    beta: f64,
    tol: f64,
    grid: Option<PyGrid>,
) -> PyResult<Bound<'py, PyAny>> {
    let params = U2Params::new(e, gamma, xi).map_err(err)?;
    let asym = U2Asymptotics { alpha1, alpha2, beta1, beta2 };
    u2::check_admissible(&asym, gamma).map_err(err)?;
    let grid = match grid {
        Some(g) => g.0,
        None => u2::default_grid(&params).map_err(err)?,
    };
    let problem = U2Problem::new(params, asym, &grid, build_measure(&grid, beta).map_err(err)?).map_err(err)?;
    let r = py.detach(|| problem.minimize(None, tol)).map_err(err)?;
    to_py(py, &r)
}

/// `beta=None` uses `min(|alpha2|, |beta2|)/2`.
#[pyfunction]
#[pyo3(signature = (g=1.0, theta=std::f64::consts::FRAC_PI_4, phi0=1.0, alpha1=1.5, beta1=1.5, alpha2=-2.0, beta2=-2.0, beta=None, tol=1e-8, restarts=5, seed=0, grid=None))]
#[allow(clippy::too_many_arguments)]
fn ew_wall<'py>(
    py: Python<'py>,
    g: f64,
    theta: f64,
    phi0: f64,
    alpha1: f64,
    beta1: f64,
    alpha2: f64,
    beta2: f64,
    beta: Option<f64>,
    tol: f64,
    restarts: usize,
    seed: u64,
    grid: Option<PyGrid>,
) -> PyResult<Bound<'py, PyAny>> {
    let params = EwParams::new(g, theta, phi0).map_err(err)?;
    let asym = EwAsymptotics { alpha1, beta1, alpha2, beta2 };
    asym.validate(&params).map_err(err)?;
    let grid = match grid {
        Some(g) => g.0,
        None => ew::default_grid(&params, &asym).map_err(err)?,
    };
    let measure = build_measure(&grid, beta.unwrap_or(0.5 * asym.min_abs_second())).map_err(err)?;
    let problem = EwProblem::new(params, asym, &grid, measure).map_err(err)?;
    let opts = EwOptions { tol, restarts, seed, ..Default::default() };
    let r = py.detach(|| problem.minimize(&opts)).map_err(err)?;
    to_py(py, &r)
}

/// Second-order refinement checks for every system.
#[pyfunction]
fn refinement_suite(py: Python<'_>) -> PyResult<Bound<'_, PyAny>> {
    let r = py.detach(verify::refinement_suite).map_err(err)?;
    to_py(py, &r)
}

#[pymodule]
#[pyo3(name = "bpswall")]
fn bpswall_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(higgs_to_magnetic, m)?)?;
    m.add_function(wrap_pyfunction!(magnetic_to_magnetic, m)?)?;
    m.add_function(wrap_pyfunction!(wall_energy, m)?)?;
    m.add_function(wrap_pyfunction!(lump_energy, m)?)?;
    m.add_function(wrap_pyfunction!(energy_curve, m)?)?;
    m.add_function(wrap_pyfunction!(u2_wall, m)?)?;
    m.add_function(wrap_pyfunction!(ew_wall, m)?)?;
    m.add_function(wrap_pyfunction!(refinement_suite, m)?)?;
    Ok(())
}
