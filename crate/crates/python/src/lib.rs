//! Python bindings. The plain functions are usable from Rust as well; the
//! `#[pyfunction]` wrappers only convert errors.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use weaklab::fields::Grid1D;
use weaklab::gauge::{EmScenario, GaugeSpec};
use weaklab::labcli::run::{cyclotron_period as period, run_bfield, run_efield};
use weaklab::labcli::{exit_code, parse_config, run_scenario, self_check, ScenarioConfig, ScenarioKind};
use weaklab::operators::{OperatorKind, OperatorSpec};
use weaklab::states::table2_state;
use weaklab::units::{nm, FS};
use weaklab::weakeval::{fdlhd, fdrhd, lhd, rhd, PostState, PreState, SelectionPair};
use weaklab::{Error, Result};

/// (name, passed, detail) of one check.
pub type Line = (String, bool, String);

/// (x, y, t, estimate, flagged) of one sensor reading.
pub type Reading = (f64, f64, f64, f64, bool);

fn lines(checks: Vec<weaklab::labcli::CheckLine>) -> Vec<Line> {
    checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect()
}

/// Packet parameters of a tabulated state in SI units, plus its central k and velocity.
pub fn state_params(name: &str) -> Result<BTreeMap<String, f64>> {
    let p = table2_state(name.parse()?);
    Ok(BTreeMap::from([
        ("energy_j".to_string(), p.energy),
        ("center_m".to_string(), p.center),
        ("sigma_m".to_string(), p.sigma),
        ("k_c_per_m".to_string(), p.k_c()),
        ("v_c_m_per_s".to_string(), p.v_c()),
    ]))
}

/// Position weak-value time derivatives for a tabulated pre/post pair in free
/// space, on the default 0.2 nm mesh over [-400, 1200] nm.
pub fn position_derivatives(pre: &str, post: &str, stride_steps: usize, theta: Option<f64>) -> Result<BTreeMap<String, f64>> {
    let grid = Grid1D::span(nm(-400.0), nm(1200.0), nm(0.2), 0.01 * FS)?;
    let sel = SelectionPair::new(
        PreState::Packet { params: table2_state(pre.parse()?), grid },
        PostState::Packet(table2_state(post.parse()?)),
        EmScenario::free(),
        theta.map(GaugeSpec::cosine),
    );
    let x = OperatorSpec::new(OperatorKind::Position);
    let tau = stride_steps as f64 * grid.dt;
    Ok(BTreeMap::from([
        ("fdlhd".to_string(), fdlhd(&x, tau, 0.0, &sel)?.value),
        ("fdrhd".to_string(), fdrhd(&x, 0.0, tau, &sel)?.value),
        ("lhd".to_string(), lhd(&x, 0.0, &sel)?.value),
        ("rhd".to_string(), rhd(&x, 0.0, &sel)?.value),
    ]))
}

/// Run a scenario given as INI text, writing its files; returns the checks.
pub fn scenario_checks(config: &str, out: Option<&str>) -> Result<Vec<Line>> {
    let mut cfg = parse_config(config)?;
    if let Some(dir) = out {
        cfg.out = dir.into();
    }
    Ok(lines(run_scenario(&cfg)?.checks))
}

/// The invariant suites; the default scenario when no config is given.
pub fn check_lines(config: Option<&str>) -> Result<Vec<Line>> {
    let cfg = match config {
        Some(text) => parse_config(text)?,
        None => ScenarioConfig::defaults(ScenarioKind::Fig2a),
    };
    Ok(lines(self_check(&cfg)))
}

/// Sensor readings of an efield or bfield scenario, without writing files.
pub fn sensor_readings(config: &str) -> Result<Vec<Reading>> {
    let cfg = parse_config(config)?;
    let run = match cfg.kind {
        ScenarioKind::EField => run_efield(&cfg)?,
        ScenarioKind::BField => run_bfield(&cfg)?.sensor,
        k => return Err(Error::ConfigValue { key: "run.kind".into(), msg: format!("{k} has no sensor") }),
    };
    Ok(run.readings.iter().map(|r| (r.position[0], r.position[1], r.t, r.estimate, r.flagged)).collect())
}

fn py_err(e: Error) -> PyErr {
    match exit_code(&e) {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyfunction]
#[pyo3(name = "state_params")]
fn py_state_params(name: &str) -> PyResult<BTreeMap<String, f64>> {
    state_params(name).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "position_derivatives", signature = (pre, post, stride_steps = 50, theta = None))]
fn py_position_derivatives(pre: &str, post: &str, stride_steps: usize, theta: Option<f64>) -> PyResult<BTreeMap<String, f64>> {
    position_derivatives(pre, post, stride_steps, theta).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "run_scenario", signature = (config, out = None))]
fn py_run_scenario(config: &str, out: Option<&str>) -> PyResult<Vec<Line>> {
    scenario_checks(config, out).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "self_check", signature = (config = None))]
fn py_self_check(config: Option<&str>) -> PyResult<Vec<Line>> {
    check_lines(config).map_err(py_err)
}

#[pyfunction]
#[pyo3(name = "sensor_readings")]
fn py_sensor_readings(config: &str) -> PyResult<Vec<Reading>> {
    sensor_readings(config).map_err(py_err)
}

/// Cyclotron period (s) of the effective-mass electron in a field of `b` tesla.
#[pyfunction]
fn cyclotron_period(b: f64) -> f64 {
    period(b)
}

#[pymodule]
#[pyo3(name = "weaklab")]
fn weaklab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(py_state_params, m)?)?;
    m.add_function(wrap_pyfunction!(py_position_derivatives, m)?)?;
    m.add_function(wrap_pyfunction!(py_run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(py_self_check, m)?)?;
    m.add_function(wrap_pyfunction!(py_sensor_readings, m)?)?;
    m.add_function(wrap_pyfunction!(cyclotron_period, m)?)?;
    Ok(())
}
