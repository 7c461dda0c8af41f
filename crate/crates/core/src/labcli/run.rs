//! Scenario orchestration and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::bohmian::{integrate_ensemble, sample_initial_positions, AnalyticSource, FieldSource, Trajectory, VelocitySource};
use crate::error::{Error, Result};
use crate::fields::{Grid1D, Grid2D};
use crate::gauge::{EmScenario, GaugeSpec};
use crate::operators::{OperatorKind, OperatorSpec};
use crate::propagator::{packet_pair, Analytic2D, StepLog};
use crate::sensing::{
    estimate_b, estimate_e, lorentz_acceleration, mean_spread, oscillation_period, summarize, BSetup, ESetup,
    SensorRun,
};
use crate::states::{landau_superposition, LandauParams, PacketParams};
use crate::units::{HBAR, M0, M_EFF, NM, Q};
use crate::weakeval::{fdlhd, fdrhd, lhd, rhd, weak_value, PostState, PreState, SelectionPair};

use super::config::{ScenarioConfig, ScenarioKind};

const POSITION: OperatorSpec = OperatorSpec::new(OperatorKind::Position);

/// One acceptance or self-check line.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeRow {
    pub theta: f64,
    pub stride: f64,
    pub fdlhd: f64,
    pub fdrhd: f64,
    pub lhd: f64,
    pub rhd: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub theta: f64,
    pub t_l: f64,
    pub t_r: f64,
    pub re: f64,
    pub im: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct DerivativeRun {
    pub rows: Vec<DerivativeRow>,
    pub series: Vec<SeriesRow>,
    pub trajectories: Vec<Trajectory>,
    pub log: StepLog,
}

fn grid_1d(cfg: &ScenarioConfig) -> Result<Grid1D> {
    Grid1D::span(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.dx, cfg.grid.dt)
}

fn grid_2d(cfg: &ScenarioConfig) -> Result<Grid2D> {
    let g = &cfg.grid;
    Grid2D::new(Grid1D::span(g.x_min, g.x_max, g.dx, g.dt)?, Grid1D::span(g.y_min, g.y_max, g.dy, g.dt)?)
}

fn gauges(thetas: &[f64]) -> Vec<(f64, Option<GaugeSpec>)> {
    if thetas.is_empty() {
        vec![(0.0, None)]
    } else {
        thetas.iter().map(|&t| (t, Some(GaugeSpec::cosine(t)))).collect()
    }
}

/// Derivative sweep over θ and strides for a free 1D pre/post packet pair.
pub fn run_derivatives(cfg: &ScenarioConfig) -> Result<DerivativeRun> {
    let grid = grid_1d(cfg)?;
    let em = EmScenario::free();
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (theta, gauge) in gauges(&cfg.thetas) {
        let sel = SelectionPair::new(
            PreState::Packet { params: cfg.pre, grid },
            PostState::Packet(cfg.post),
            em.clone(),
            gauge,
        );
        let l = lhd(&POSITION, 0.0, &sel)?;
        let r = rhd(&POSITION, 0.0, &sel)?;
        let w0 = weak_value(&POSITION, 0.0, 0.0, &sel)?;
        series.push(SeriesRow { theta, t_l: 0.0, t_r: 0.0, re: w0.value.re, im: w0.value.im, flagged: w0.flagged });
        for &k in &cfg.stride_steps {
            let tau = k as f64 * grid.dt;
            let fl = fdlhd(&POSITION, tau, 0.0, &sel)?;
            let fr = fdrhd(&POSITION, 0.0, tau, &sel)?;
            for (t_l, t_r) in [(tau, 0.0), (0.0, tau)] {
                let w = weak_value(&POSITION, t_l, t_r, &sel)?;
                series.push(SeriesRow { theta, t_l, t_r, re: w.value.re, im: w.value.im, flagged: w.flagged });
            }
            rows.push(DerivativeRow {
                theta,
                stride: tau,
                fdlhd: fl.value,
                fdrhd: fr.value,
                lhd: l.value,
                rhd: r.value,
                flagged: fl.flagged || fr.flagged || l.flagged || r.flagged,
            });
        }
    }
    // Pre-state trajectories in the Coulomb gauge.
    let pair = packet_pair(&cfg.pre, grid, 0.0, &em, None)?;
    let starts = sample_initial_positions(&pair.cur, cfg.trajectories, cfg.seed);
    let mut src = FieldSource::new(pair, &em)?;
    let every = ((cfg.t_end / grid.dt / 100.0).round() as usize).max(1);
    let trajectories = integrate_ensemble(&starts, &mut src, cfg.t_end, every, cfg.seed)?;
    Ok(DerivativeRun { rows, series, trajectories, log: src.log })
}

/// (max − min) over θ at each stride, maximised over strides, divided by `scale`.
pub fn theta_spread(rows: &[DerivativeRow], value: impl Fn(&DerivativeRow) -> f64, scale: f64) -> f64 {
    let mut strides: Vec<f64> = rows.iter().map(|r| r.stride).collect();
    strides.sort_by(|a, b| a.total_cmp(b));
    strides.dedup();
    strides
        .iter()
        .map(|&s| {
            let v: Vec<f64> = rows.iter().filter(|r| r.stride == s).map(&value).collect();
            let hi = v.iter().copied().fold(f64::MIN, f64::max);
            let lo = v.iter().copied().fold(f64::MAX, f64::min);
            (hi - lo) / scale.abs()
        })
        .fold(0.0, f64::max)
}

type Column = fn(&DerivativeRow) -> f64;

fn mean_of(rows: &[DerivativeRow], value: impl Fn(&DerivativeRow) -> f64) -> f64 {
    rows.iter().map(value).sum::<f64>() / rows.len() as f64
}

fn max_rel(rows: &[DerivativeRow], value: impl Fn(&DerivativeRow) -> f64, target: f64) -> f64 {
    rows.iter().map(|r| (value(r) - target).abs() / target.abs()).fold(0.0, f64::max)
}

/// The pass/fail lines for the three derivative panels.
pub fn derivative_checks(kind: ScenarioKind, cfg: &ScenarioConfig, run: &DerivativeRun) -> Vec<CheckLine> {
    let rows = &run.rows;
    let mut out = Vec::new();
    let drift = run.log.norm_drift();
    out.push(CheckLine::new("norm drift", drift < 1e-4, format!("{drift:.3e} (< 1e-4)")));
    if rows.iter().any(|r| r.flagged) {
        out.push(CheckLine::new("denominators", false, "flagged samples present"));
    }
    match kind {
        ScenarioKind::Fig2a | ScenarioKind::Fig2b => {
            let a = kind == ScenarioKind::Fig2a;
            let v = if a { cfg.pre.v_c() } else { cfg.post.v_c() };
            let (fd_main, fd_zero): (Column, Column) =
                if a { (|r| r.fdlhd, |r| r.fdrhd) } else { (|r| r.fdrhd, |r| r.fdlhd) };
            let (th_main, th_zero): (Column, Column) =
                if a { (|r| r.lhd, |r| r.rhd) } else { (|r| r.rhd, |r| r.lhd) };
            let (m, z) = if a { ("FDLHD", "FDRHD") } else { ("FDRHD", "FDLHD") };
            let (tm, tz) = if a { ("LHD", "RHD") } else { ("RHD", "LHD") };
            let e = max_rel(rows, fd_main, v);
            out.push(CheckLine::new(format!("{m} = v_c"), e < 0.05, format!("max rel err {e:.3e} vs {v:.4e} m/s (< 5%)")));
            let zmax = rows.iter().map(|r| fd_zero(r).abs()).fold(0.0, f64::max) / v;
            out.push(CheckLine::new(format!("{z} ~ 0"), zmax < 0.05, format!("max |{z}|/v_c {zmax:.3e} (< 5%)")));
            let tmax = rows.iter().map(|r| (th_main(r) - fd_main(r)).abs() / fd_main(r).abs()).fold(0.0, f64::max);
            out.push(CheckLine::new(format!("{tm} matches {m}"), tmax < 0.02, format!("max rel diff {tmax:.3e} (< 2%)")));
            let tzero = rows.iter().map(|r| th_zero(r).abs()).fold(0.0, f64::max) / v;
            out.push(CheckLine::new(format!("{tz} ~ 0"), tzero < 0.05, format!("max |{tz}|/v_c {tzero:.3e} (< 5%)")));
            let spreads = [
                theta_spread(rows, |r| r.fdlhd, v),
                theta_spread(rows, |r| r.fdrhd, v),
                theta_spread(rows, |r| r.lhd, v),
                theta_spread(rows, |r| r.rhd, v),
            ];
            let s = spreads.iter().copied().fold(0.0, f64::max);
            out.push(CheckLine::new("theta independence", s < 0.01, format!("max spread/v_c {s:.3e} (< 1%)")));
        }
        ScenarioKind::Fig2c => {
            let sl = theta_spread(rows, |r| r.lhd, mean_of(rows, |r| r.lhd));
            let sr = theta_spread(rows, |r| r.rhd, mean_of(rows, |r| r.rhd));
            out.push(CheckLine::new("LHD gauge dependent", sl > 0.10, format!("theta spread {sl:.3e} of mean (> 10%, EXPECTED)")));
            out.push(CheckLine::new("RHD gauge dependent", sr > 0.10, format!("theta spread {sr:.3e} of mean (> 10%, EXPECTED)")));
            let sfl = theta_spread(rows, |r| r.fdlhd, mean_of(rows, |r| r.fdlhd));
            let sfr = theta_spread(rows, |r| r.fdrhd, mean_of(rows, |r| r.fdrhd));
            out.push(CheckLine::new("FDLHD gauge independent", sfl < 0.01, format!("theta spread {sfl:.3e} (< 1%)")));
            out.push(CheckLine::new("FDRHD gauge independent", sfr < 0.01, format!("theta spread {sfr:.3e} (< 1%)")));
            let sum_t = |r: &DerivativeRow| r.lhd + r.rhd;
            let sum_fd = |r: &DerivativeRow| r.fdlhd + r.fdrhd;
            let agree = rows.iter().map(|r| (sum_t(r) - sum_fd(r)).abs() / sum_fd(r).abs()).fold(0.0, f64::max);
            out.push(CheckLine::new("LHD+RHD = FDLHD+FDRHD", agree < 0.02, format!("max rel diff {agree:.3e} (< 2%)")));
            let s1 = theta_spread(rows, sum_t, mean_of(rows, sum_t));
            let s2 = theta_spread(rows, sum_fd, mean_of(rows, sum_fd));
            let s = s1.max(s2);
            out.push(CheckLine::new("sums gauge independent", s < 0.01, format!("theta spread {s:.3e} (< 1%)")));
        }
        _ => {}
    }
    out
}

pub fn e_setup(cfg: &ScenarioConfig) -> Result<ESetup> {
    Ok(ESetup {
        e: cfg.e_field,
        packet: cfg.pre,
        grid: grid_1d(cfg)?,
        gauge: cfg.thetas.first().map(|&t| GaugeSpec::cosine(t)),
        mode: cfg.kinetic_mode,
    })
}

pub fn run_efield(cfg: &ScenarioConfig) -> Result<SensorRun> {
    let setup = e_setup(cfg)?;
    let stride = cfg.stride_steps[0] as f64 * setup.grid.dt;
    estimate_e(&setup, cfg.trajectories, &cfg.sample_times(setup.grid.dt), cfg.seed, stride, cfg.refine)
}

pub fn efield_checks(cfg: &ScenarioConfig, run: &SensorRun) -> Vec<CheckLine> {
    let mut out = Vec::new();
    let drift = run.log.norm_drift();
    out.push(CheckLine::new("norm drift", drift < 1e-4, format!("{drift:.3e} (< 1e-4)")));
    let (mean, spread) = run.mean();
    let n = run.readings.iter().filter(|r| !r.flagged).count();
    if cfg.e_field != 0.0 {
        let e = (mean - cfg.e_field).abs() / cfg.e_field.abs();
        out.push(CheckLine::new(
            "E estimate",
            e < 0.05,
            format!("mean {mean:.5e} V/m, spread {spread:.3e}, n={n}, rel err {e:.3e} (< 5%)"),
        ));
    } else {
        out.push(CheckLine::new("E estimate", mean.abs() < 5e4, format!("mean {mean:.3e} V/m (|mean| < 5e4), n={n}")));
    }
    if cfg.refine {
        let worst = run
            .readings
            .iter()
            .filter_map(|r| r.refined.map(|d| (d - r.estimate).abs() / r.estimate.abs()))
            .fold(0.0, f64::max);
        out.push(CheckLine::new("stride doubling", worst < 0.02, format!("max change {worst:.3e} (< 2%)")));
    }
    out
}

pub fn analytic_state(cfg: &ScenarioConfig) -> Result<Arc<Analytic2D>> {
    let grid = grid_2d(cfg)?;
    if cfg.landau.b == 0.0 {
        let py = PacketParams::new(0.0, 0.0, 100.0 * NM)?;
        return Ok(Arc::new(Analytic2D::FreePacket { px: cfg.pre, py }));
    }
    let lp = LandauParams::equal_weights(cfg.landau.b, cfg.landau.k_y, cfg.landau.levels)?;
    Ok(Arc::new(Analytic2D::Landau(landau_superposition(&lp, grid)?)))
}

pub fn b_setup(cfg: &ScenarioConfig) -> Result<BSetup> {
    Ok(BSetup { state: analytic_state(cfg)?, grid: grid_2d(cfg)?, anchor: cfg.anchor, traj_dt: cfg.traj_dt })
}

#[derive(Debug, Clone)]
pub struct BFieldRun {
    pub sensor: SensorRun,
    pub b: f64,
    pub periods: Vec<f64>,
    /// Bohmian −(qB/m)v_x over the measured y-acceleration, per reading.
    pub lorentz_ratio: Vec<f64>,
}

pub fn run_bfield(cfg: &ScenarioConfig) -> Result<BFieldRun> {
    let setup = b_setup(cfg)?;
    let stride = cfg.stride_steps[0] as f64 * cfg.grid.dt;
    let times = cfg.sample_times(cfg.traj_dt);
    let sensor = estimate_b(&setup, cfg.trajectories, &times, cfg.seed, stride, cfg.refine, cfg.t_end + cfg.period_window)?;
    let b = setup.state.b();
    let periods = if b != 0.0 { sensor.trajectories.iter().filter_map(oscillation_period).collect() } else { vec![] };
    let mut lorentz_ratio = Vec::new();
    if b != 0.0 {
        for r in sensor.readings.iter().filter(|r| !r.flagged) {
            let src = AnalyticSource::new(setup.state.clone(), setup.grid, r.t, cfg.grid.dt);
            if let Some(v) = src.velocity(r.position) {
                lorentz_ratio.push(lorentz_acceleration(b, v[0]) / r.derivative);
            }
        }
    }
    Ok(BFieldRun { sensor, b, periods, lorentz_ratio })
}

pub fn cyclotron_period(b: f64) -> f64 {
    2.0 * std::f64::consts::PI * M_EFF / (Q * b).abs()
}

pub fn bfield_checks(cfg: &ScenarioConfig, run: &BFieldRun) -> Vec<CheckLine> {
    let mut out = Vec::new();
    let (mean, spread) = run.sensor.mean();
    let n = run.sensor.readings.iter().filter(|r| !r.flagged).count();
    let skipped = run.sensor.skipped.len();
    if run.b != 0.0 {
        let e = (mean - run.b).abs() / run.b.abs();
        out.push(CheckLine::new(
            "B estimate",
            e < 0.05,
            format!("mean {mean:.5} T, spread {spread:.3e}, n={n}, turning points skipped {skipped}, rel err {e:.3e} (< 5%)"),
        ));
        let want = cyclotron_period(run.b);
        let (p, _) = mean_spread(&run.periods);
        let e = (p - want).abs() / want;
        out.push(CheckLine::new(
            "oscillation period",
            !run.periods.is_empty() && e < 0.05,
            format!("{:.4} ps from {} trajectories vs {:.4} ps (< 5%)", p * 1e12, run.periods.len(), want * 1e12),
        ));
        let (ratio, _) = mean_spread(&run.lorentz_ratio);
        out.push(CheckLine::new(
            "Lorentz cross-check",
            (ratio - 1.0).abs() < 0.05,
            format!("mean Bohmian/measured y-acceleration {ratio:.4} (within 5%)"),
        ));
    } else {
        let acc: Vec<f64> = run.sensor.readings.iter().map(|r| r.derivative).collect();
        let (a, _) = mean_spread(&acc);
        let scale = run.sensor.readings.iter().map(|r| r.velocity.abs()).fold(0.0, f64::max) * 1e12;
        out.push(CheckLine::new(
            "y-acceleration ~ 0",
            a.abs() < 1e-3 * scale,
            format!("mean {a:.3e} m/s^2 vs |v|/ps scale {scale:.3e}"),
        ));
    }
    if cfg.refine {
        let worst = run
            .sensor
            .readings
            .iter()
            .filter_map(|r| r.refined.map(|d| (d - r.estimate).abs() / r.estimate.abs()))
            .fold(0.0, f64::max);
        out.push(CheckLine::new("stride halving", worst < 0.01, format!("max change {worst:.3e} (< 1%)")));
    }
    out
}

/// Everything a run produced, for the caller and the manifest.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckLine>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn e(v: f64) -> String {
    format!("{v:.12e}")
}

pub fn derivatives_csv(rows: &[DerivativeRow]) -> String {
    let mut s = String::from("theta_rad,stride_s,fdlhd_m_per_s,fdrhd_m_per_s,lhd_m_per_s,rhd_m_per_s,flagged\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            e(r.theta),
            e(r.stride),
            e(r.fdlhd),
            e(r.fdrhd),
            e(r.lhd),
            e(r.rhd),
            r.flagged
        );
    }
    s
}

/// Trajectory rows, keeping every `every`-th sample plus the last.
pub fn trajectories_csv(trajs: &[Trajectory], two_d: bool, every: usize) -> String {
    let mut s = String::from(if two_d { "traj_id,t_s,x_m,y_m\n" } else { "traj_id,t_s,x_m\n" });
    for (id, tr) in trajs.iter().enumerate() {
        let n = tr.t.len();
        for i in (0..n).filter(|i| i % every.max(1) == 0 || *i == n - 1) {
            if two_d {
                let _ = writeln!(s, "{id},{},{},{}", e(tr.t[i]), e(tr.pos[i][0]), e(tr.pos[i][1]));
            } else {
                let _ = writeln!(s, "{id},{},{}", e(tr.t[i]), e(tr.pos[i][0]));
            }
        }
    }
    s
}

pub fn sensor_csv(run: &SensorRun, two_d: bool) -> String {
    let mut s = String::from(if two_d { "t_s,x_m,y_m,estimate,unit,flagged\n" } else { "t_s,x_m,estimate,unit,flagged\n" });
    for r in &run.readings {
        if two_d {
            let _ = writeln!(s, "{},{},{},{},{},{}", e(r.t), e(r.position[0]), e(r.position[1]), e(r.estimate), r.unit, r.flagged);
        } else {
            let _ = writeln!(s, "{},{},{},{},{}", e(r.t), e(r.position[0]), e(r.estimate), r.unit, r.flagged);
        }
    }
    s
}

pub fn sensor_summary_csv(run: &SensorRun) -> String {
    let mut s = String::from("t_s,mean,spread,count,unit\n");
    let unit = run.readings.first().map(|r| r.unit).unwrap_or("");
    for row in summarize(&run.readings) {
        let _ = writeln!(s, "{},{},{},{},{unit}", e(row.t), e(row.mean), e(row.spread), row.count);
    }
    s
}

fn series_csv(rows: &[SeriesRow]) -> String {
    let mut s = String::from("theta_rad,t_l_s,t_r_s,re_m,im_m,flagged\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{},{}", e(r.theta), e(r.t_l), e(r.t_r), e(r.re), e(r.im), r.flagged);
    }
    s
}

/// Velocity and field-derivative inputs per reading.
fn sensor_inputs_csv(run: &SensorRun, two_d: bool) -> String {
    let mut s =
        String::from(if two_d { "t_s,x_m,y_m,velocity_m_per_s,derivative,flagged\n" } else { "t_s,x_m,velocity_m_per_s,derivative,flagged\n" });
    for r in &run.readings {
        let pos = if two_d { format!("{},{}", e(r.position[0]), e(r.position[1])) } else { e(r.position[0]) };
        let _ = writeln!(s, "{},{pos},{},{},{}", e(r.t), e(r.velocity), e(r.derivative), r.flagged);
    }
    s
}

fn write(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body)?;
    files.push(p);
    Ok(())
}

fn manifest(cfg: &ScenarioConfig, drift: f64, checks: &[CheckLine], extra: &str) -> String {
    let mut s = String::new();
    let now = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let _ = writeln!(s, "created_unix_s = {now}");
    let _ = writeln!(s, "kind = {}", cfg.kind);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "q_c = {:e}", Q);
    let _ = writeln!(s, "hbar_j_s = {:e}", HBAR);
    let _ = writeln!(s, "m0_kg = {:e}", M0);
    let _ = writeln!(s, "m_eff_kg = {:e}", M_EFF);
    let g = &cfg.grid;
    let _ = writeln!(s, "grid = x[{:e}, {:e}] dx {:e}, y[{:e}, {:e}] dy {:e}, dt {:e}", g.x_min, g.x_max, g.dx, g.y_min, g.y_max, g.dy, g.dt);
    let _ = writeln!(s, "thetas_rad = {:?}", cfg.thetas);
    let _ = writeln!(s, "stride_steps = {:?}", cfg.stride_steps);
    let _ = writeln!(s, "trajectories = {}", cfg.trajectories);
    let _ = writeln!(s, "norm_drift = {drift:e}");
    s.push_str(extra);
    for c in checks {
        let _ = writeln!(s, "{c}");
    }
    s
}

/// Run a scenario, write its files under `cfg.out`, return the checks.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    fs::create_dir_all(&cfg.out)?;
    let dir = cfg.out.as_path();
    // An error record from an earlier failed run would contradict these outputs.
    match fs::remove_file(dir.join("error.txt")) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
        _ => {}
    }
    let mut files = Vec::new();
    let (checks, drift, extra) = match cfg.kind {
        ScenarioKind::Fig2a | ScenarioKind::Fig2b | ScenarioKind::Fig2c | ScenarioKind::Custom => {
            let run = run_derivatives(cfg)?;
            write(dir, "derivatives.csv", &derivatives_csv(&run.rows), &mut files)?;
            write(dir, "weak_values.csv", &series_csv(&run.series), &mut files)?;
            write(dir, "trajectories.csv", &trajectories_csv(&run.trajectories, false, 1), &mut files)?;
            (derivative_checks(cfg.kind, cfg, &run), run.log.norm_drift(), String::new())
        }
        ScenarioKind::EField => {
            let run = run_efield(cfg)?;
            write(dir, "sensor.csv", &sensor_csv(&run, false), &mut files)?;
            write(dir, "sensor_summary.csv", &sensor_summary_csv(&run), &mut files)?;
            write(dir, "weak_values.csv", &sensor_inputs_csv(&run, false), &mut files)?;
            write(dir, "trajectories.csv", &trajectories_csv(&run.trajectories, false, 1), &mut files)?;
            let extra = format!("skipped_readings = {}\n", run.skipped.len());
            (efield_checks(cfg, &run), run.log.norm_drift(), extra)
        }
        ScenarioKind::BField => {
            let run = run_bfield(cfg)?;
            let every = ((10e-15 / cfg.traj_dt).round() as usize).max(1);
            write(dir, "sensor.csv", &sensor_csv(&run.sensor, true), &mut files)?;
            write(dir, "sensor_summary.csv", &sensor_summary_csv(&run.sensor), &mut files)?;
            write(dir, "weak_values.csv", &sensor_inputs_csv(&run.sensor, true), &mut files)?;
            write(dir, "trajectories.csv", &trajectories_csv(&run.sensor.trajectories, true, every), &mut files)?;
            let extra = format!("skipped_readings = {}\nperiods_s = {:?}\n", run.sensor.skipped.len(), run.periods);
            // The state is evolved in closed form; its norm is exact.
            (bfield_checks(cfg, &run), 0.0, extra)
        }
    };
    files.push(dir.join("manifest.txt"));
    fs::write(dir.join("manifest.txt"), manifest(cfg, drift, &checks, &extra))?;
    Ok(RunReport { files, checks })
}

/// Machine-readable error record written next to the outputs.
pub fn error_record(err: &Error, code: i32) -> String {
    format!("exit_code = {code}\nerror = {err:?}\nmessage = {err}\n")
}
