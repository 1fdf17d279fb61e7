//! Python bindings. Frequencies on `SystemParams` and `NoiseModel` are
//! angular (rad/s), as in the Rust crate; use `hz()` to convert. Sweep
//! configurations use the text format of the command-line tool.

use nalgebra::Matrix4;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use optonoise_core::config::ConfigMap;
use optonoise_core::steady_state::SweepDirection;
use optonoise_core::sweep::{Cell, HEADER};
use optonoise_core::{check, covariance, entanglement, noise, params, pipeline, steady_state, sweep, Error};

create_exception!(optonoise, OptonoiseError, PyException);
create_exception!(optonoise, DomainError, OptonoiseError);
create_exception!(optonoise, ConfigError, OptonoiseError);
create_exception!(optonoise, UnstableError, OptonoiseError);
create_exception!(optonoise, NumericalError, OptonoiseError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Domain { .. } => DomainError::new_err(msg),
        Error::Config(_) => ConfigError::new_err(msg),
        Error::Unstable { .. } => UnstableError::new_err(msg),
        Error::Numerical { .. } => NumericalError::new_err(msg),
        Error::Io { .. } => PyOSError::new_err(msg),
    }
}

type Rows = Vec<Vec<f64>>;
type FoldPair = ((f64, f64), (f64, f64));

fn matrix_from(rows: Rows) -> PyResult<Matrix4<f64>> {
    if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
        return Err(DomainError::new_err("expected a 4x4 matrix"));
    }
    Ok(Matrix4::from_fn(|i, j| rows[i][j]))
}

fn matrix_to(m: &Matrix4<f64>) -> Rows {
    (0..4).map(|i| (0..4).map(|j| m[(i, j)]).collect()).collect()
}

#[pyfunction]
fn hz(nu: f64) -> f64 {
    params::hz(nu)
}

#[pyclass(name = "SystemParams", get_all, set_all, from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    cavity_length: f64,
    mirror_mass: f64,
    mechanical_freq: f64,
    mechanical_damping: f64,
    cavity_decay: f64,
    laser_wavelength: f64,
    input_power: f64,
    detuning: f64,
    bath_temperature: f64,
}

impl From<params::SystemParams> for PySystemParams {
    fn from(p: params::SystemParams) -> Self {
        PySystemParams {
            cavity_length: p.cavity_length,
            mirror_mass: p.mirror_mass,
            mechanical_freq: p.mechanical_freq,
            mechanical_damping: p.mechanical_damping,
            cavity_decay: p.cavity_decay,
            laser_wavelength: p.laser_wavelength,
            input_power: p.input_power,
            detuning: p.detuning,
            bath_temperature: p.bath_temperature,
        }
    }
}

impl PySystemParams {
    fn core(&self) -> params::SystemParams {
        params::SystemParams {
            cavity_length: self.cavity_length,
            mirror_mass: self.mirror_mass,
            mechanical_freq: self.mechanical_freq,
            mechanical_damping: self.mechanical_damping,
            cavity_decay: self.cavity_decay,
            laser_wavelength: self.laser_wavelength,
            input_power: self.input_power,
            detuning: self.detuning,
            bath_temperature: self.bath_temperature,
        }
    }

    fn derived(&self) -> PyResult<(params::SystemParams, params::DerivedParams)> {
        let p = self.core();
        let d = params::derive(&p).map_err(to_py)?;
        Ok((p, d))
    }
}

#[pymethods]
impl PySystemParams {
    /// Keyword arguments override the benchmark values.
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        let mut p = PySystemParams::from(params::SystemParams::benchmark());
        let Some(kwargs) = kwargs else { return Ok(p) };
        for (key, value) in kwargs.iter() {
            let key: String = key.extract()?;
            let value: f64 = value.extract()?;
            let slot = match key.as_str() {
                "cavity_length" => &mut p.cavity_length,
                "mirror_mass" => &mut p.mirror_mass,
                "mechanical_freq" => &mut p.mechanical_freq,
                "mechanical_damping" => &mut p.mechanical_damping,
                "cavity_decay" => &mut p.cavity_decay,
                "laser_wavelength" => &mut p.laser_wavelength,
                "input_power" => &mut p.input_power,
                "detuning" => &mut p.detuning,
                "bath_temperature" => &mut p.bath_temperature,
                other => return Err(ConfigError::new_err(format!("unknown parameter {other:?}"))),
            };
            *slot = value;
        }
        Ok(p)
    }

    #[staticmethod]
    fn benchmark() -> Self {
        params::SystemParams::benchmark().into()
    }

    fn validate(&self) -> PyResult<()> {
        self.core().validate().map_err(to_py)
    }

    /// Derived quantities as a dict.
    fn derive<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let (_, d) = self.derived()?;
        let out = PyDict::new(py);
        out.set_item("laser_freq", d.laser_freq)?;
        out.set_item("cavity_freq", d.cavity_freq)?;
        out.set_item("single_photon_coupling", d.single_photon_coupling)?;
        out.set_item("drive_amplitude", d.drive_amplitude)?;
        out.set_item("thermal_occupation", d.thermal_occupation)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.core())
    }
}

#[pyclass(name = "NoiseModel", get_all, from_py_object)]
#[derive(Clone)]
struct PyNoiseModel {
    linewidth: f64,
    correlation_rate: f64,
}

impl PyNoiseModel {
    fn core(&self) -> noise::NoiseModel {
        noise::NoiseModel {
            linewidth: self.linewidth,
            correlation_rate: self.correlation_rate,
        }
    }
}

#[pymethods]
impl PyNoiseModel {
    /// Linewidth Γ_L and correlation rate γ_c, both in rad/s.
    #[new]
    fn new(linewidth: f64, correlation_rate: f64) -> PyResult<Self> {
        noise::NoiseModel::new(linewidth, correlation_rate).map_err(to_py)?;
        Ok(PyNoiseModel {
            linewidth,
            correlation_rate,
        })
    }

    /// Phase-noise power spectrum at angular frequency `omega`.
    fn spectrum(&self, omega: f64) -> f64 {
        noise::phase_noise_spectrum(omega, &self.core())
    }

    fn __repr__(&self) -> String {
        format!("NoiseModel(linewidth={}, correlation_rate={})", self.linewidth, self.correlation_rate)
    }
}

#[pyclass(name = "SteadyState", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySteadyState {
    alpha_re: f64,
    alpha_im: f64,
    photon_number: f64,
    displacement: f64,
    effective_detuning: f64,
    enhanced_coupling: f64,
    eta: f64,
    branch_index: usize,
    stable: bool,
    max_real_part: f64,
    tangent: bool,
}

impl From<&steady_state::SteadyState> for PySteadyState {
    fn from(s: &steady_state::SteadyState) -> Self {
        PySteadyState {
            alpha_re: s.alpha_s.re,
            alpha_im: s.alpha_s.im,
            photon_number: s.photon_number,
            displacement: s.displacement,
            effective_detuning: s.effective_detuning,
            enhanced_coupling: s.enhanced_coupling,
            eta: s.eta,
            branch_index: s.branch_index,
            stable: s.stable,
            max_real_part: s.max_real_part,
            tangent: s.tangent,
        }
    }
}

#[pymethods]
impl PySteadyState {
    fn __repr__(&self) -> String {
        format!(
            "SteadyState(branch_index={}, photon_number={:e}, eta={}, stable={})",
            self.branch_index, self.photon_number, self.eta, self.stable
        )
    }
}

#[pyclass(name = "BranchAnalysis", get_all, frozen, skip_from_py_object)]
struct PyBranchAnalysis {
    steady: Py<PySteadyState>,
    drift: Rows,
    diffusion: Rows,
    phase_noise: f64,
    covariance: Rows,
    condition: f64,
    ill_conditioned: bool,
    phonons: f64,
    phonons_raw: f64,
    phonons_asymptotic: f64,
    log_negativity: f64,
    nu_min: f64,
}

/// All steady-state branches, sorted by photon number.
#[pyfunction]
fn solve_branches(params: &PySystemParams) -> PyResult<Vec<PySteadyState>> {
    let (p, d) = params.derived()?;
    let branches = steady_state::solve_branches(&p, &d).map_err(to_py)?;
    Ok(branches.iter().map(PySteadyState::from).collect())
}

/// Lower-branch end and upper-branch end as (photons, power) pairs, or None
/// when the detuning admits a single branch at every power.
#[pyfunction]
fn fold_points(params: &PySystemParams) -> PyResult<Option<FoldPair>> {
    let (p, d) = params.derived()?;
    Ok(steady_state::fold_points(&p, &d).map(|(lo, hi)| ((lo.photons, lo.power), (hi.photons, hi.power))))
}

/// Stationary analysis of every stable branch; unstable branches are skipped.
#[pyfunction]
fn analyze(py: Python<'_>, params: &PySystemParams, noise: &PyNoiseModel) -> PyResult<Vec<PyBranchAnalysis>> {
    let (p, d) = params.derived()?;
    let nm = noise.core();
    let mut out = Vec::new();
    for ss in steady_state::solve_branches(&p, &d).map_err(to_py)? {
        if !ss.stable {
            continue;
        }
        let r = pipeline::analyze_branch(&p, &d, &nm, &ss).map_err(to_py)?;
        out.push(PyBranchAnalysis {
            steady: Py::new(py, PySteadyState::from(&ss))?,
            drift: matrix_to(&r.drift),
            diffusion: matrix_to(&r.diffusion.matrix),
            phase_noise: r.diffusion.phase_noise,
            covariance: matrix_to(&r.covariance.matrix),
            condition: r.covariance.condition,
            ill_conditioned: r.covariance.ill_conditioned,
            phonons: r.phonons.clamped,
            phonons_raw: r.phonons.raw,
            phonons_asymptotic: r.asymptotics.exact_noise_limit,
            log_negativity: r.entanglement.log_negativity,
            nu_min: r.entanglement.nu_min,
        });
    }
    Ok(out)
}

/// Phase-noise strength N for a drift matrix; method is "resolvent" or "quadrature".
#[pyfunction]
#[pyo3(signature = (drift, photons, noise, method = "resolvent"))]
fn phase_noise_n(drift: Rows, photons: f64, noise: &PyNoiseModel, method: &str) -> PyResult<f64> {
    let method = match method {
        "resolvent" => noise::NoiseMethod::Resolvent,
        "quadrature" => noise::NoiseMethod::Quadrature,
        other => return Err(ConfigError::new_err(format!("unknown method {other:?}"))),
    };
    noise::phase_noise_n(&matrix_from(drift)?, photons, &noise.core(), method).map_err(to_py)
}

/// Stationary covariance V solving A V + V Aᵀ + D = 0.
#[pyfunction]
fn solve_lyapunov(drift: Rows, diffusion: Rows) -> PyResult<Rows> {
    let v = covariance::solve_lyapunov(&matrix_from(drift)?, &matrix_from(diffusion)?).map_err(to_py)?;
    Ok(matrix_to(&v.matrix))
}

#[pyfunction]
fn log_negativity(covariance: Rows) -> PyResult<f64> {
    let r = entanglement::log_negativity_of(&matrix_from(covariance)?).map_err(to_py)?;
    Ok(r.log_negativity)
}

/// Adiabatic power sweep up then down; one dict per trace point.
#[pyfunction]
fn hysteresis<'py>(py: Python<'py>, params: &PySystemParams, powers: Vec<f64>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let trace = steady_state::hysteresis_sweep(&params.core(), &powers).map_err(to_py)?;
    trace
        .points
        .iter()
        .map(|pt| {
            let row = PyDict::new(py);
            let dir = match pt.direction {
                SweepDirection::Up => "up",
                SweepDirection::Down => "down",
            };
            row.set_item("direction", dir)?;
            row.set_item("power", pt.power)?;
            row.set_item("photon_number", pt.photons)?;
            row.set_item("branch_index", pt.branch_index)?;
            row.set_item("eta", pt.eta)?;
            row.set_item("stable", pt.stable)?;
            row.set_item("terminal", pt.terminal)?;
            Ok(row)
        })
        .collect()
}

fn cell_into(row: &Bound<'_, PyDict>, key: &str, cell: Cell) -> PyResult<()> {
    match cell {
        Cell::Float(v) => row.set_item(key, v),
        Cell::Int(v) => row.set_item(key, v),
        Cell::Bool(v) => row.set_item(key, v),
        Cell::Text(v) => row.set_item(key, v),
    }
}

/// Runs a sweep from configuration text (the `key = value` file format)
/// and returns one dict per output row, absent values as None.
#[pyfunction]
fn run_sweep<'py>(py: Python<'py>, config: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = ConfigMap::parse(config).and_then(|m| m.build()).map_err(to_py)?;
    let records = py.detach(|| sweep::run_sweep(&cfg)).map_err(to_py)?;
    records
        .iter()
        .map(|rec| {
            let row = PyDict::new(py);
            for (key, cell) in HEADER.iter().zip(rec.cells()) {
                cell_into(&row, key, cell)?;
            }
            Ok(row)
        })
        .collect()
}

/// Same sweep rendered as CSV or JSON text.
#[pyfunction]
fn render_sweep(py: Python<'_>, config: &str) -> PyResult<String> {
    let cfg = ConfigMap::parse(config).and_then(|m| m.build()).map_err(to_py)?;
    let records = py.detach(|| sweep::run_sweep(&cfg)).map_err(to_py)?;
    Ok(sweep::render(&records, cfg.format))
}

/// Built-in oracle checks as (name, passed, detail) tuples.
#[pyfunction]
fn run_checks(py: Python<'_>) -> Vec<(String, bool, String)> {
    py.detach(check::run_checks)
        .into_iter()
        .map(|c| (c.name.to_string(), c.passed, c.detail))
        .collect()
}

#[pymodule]
fn optonoise(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("OptonoiseError", py.get_type::<OptonoiseError>())?;
    m.add("DomainError", py.get_type::<DomainError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("UnstableError", py.get_type::<UnstableError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyNoiseModel>()?;
    m.add_class::<PySteadyState>()?;
    m.add_class::<PyBranchAnalysis>()?;
    m.add_function(wrap_pyfunction!(hz, m)?)?;
    m.add_function(wrap_pyfunction!(solve_branches, m)?)?;
    m.add_function(wrap_pyfunction!(fold_points, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(phase_noise_n, m)?)?;
    m.add_function(wrap_pyfunction!(solve_lyapunov, m)?)?;
    m.add_function(wrap_pyfunction!(log_negativity, m)?)?;
    m.add_function(wrap_pyfunction!(hysteresis, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(render_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
