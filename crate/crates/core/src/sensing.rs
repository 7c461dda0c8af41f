//! Local field sensors built from time derivatives of weak values.

use std::sync::Arc;

use crate::bohmian::{
    bohm_velocity, euler, quantum_potential, sample_initial_positions, AnalyticSource, FieldSource, Trajectory,
    VelocitySource,
};
use crate::error::{Error, Result};
use crate::fields::{Axis, Grid1D, Grid2D};
use crate::gauge::{EmScenario, GaugeSpec};
use crate::operators::{OperatorKind, OperatorSpec};
use crate::propagator::{packet_pair, steps_for, Analytic2D, StatePair, StepLog};
use crate::states::PacketParams;
use crate::units::{M_EFF, Q};
use crate::weakeval::{fdlhd, fdrhd, mixed_second_derivative, weak_value, PostState, PreState, SelectionPair};

/// Readings with |v_B| below this are refused.
pub const MIN_SPEED: f64 = 1e3;

const POSITION: OperatorSpec = OperatorSpec::new(OperatorKind::Position);
const POSITION_Y: OperatorSpec = OperatorSpec::new(OperatorKind::PositionY);
const VELOCITY: OperatorSpec = OperatorSpec::new(OperatorKind::Velocity);
const KINETIC: OperatorSpec = OperatorSpec::new(OperatorKind::KineticEnergy);

#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading {
    pub position: [f64; 2],
    pub t: f64,
    pub estimate: f64,
    pub unit: &'static str,
    /// Velocity entering the ratio (m/s).
    pub velocity: f64,
    /// The weak-value time derivative entering the ratio.
    pub derivative: f64,
    /// Estimate at the refined (E: doubled, B: halved) stride, if requested.
    pub refined: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSummary {
    pub t: f64,
    pub mean: f64,
    pub spread: f64,
    pub count: usize,
}

pub fn mean_spread(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let spread = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, spread)
}

/// Per-time mean and standard deviation over unflagged readings.
pub fn summarize(readings: &[SensorReading]) -> Vec<TimeSummary> {
    let mut times: Vec<f64> = readings.iter().map(|r| r.t).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();
    times
        .into_iter()
        .map(|t| {
            let v: Vec<f64> = readings.iter().filter(|r| r.t == t && !r.flagged).map(|r| r.estimate).collect();
            let (mean, spread) = mean_spread(&v);
            TimeSummary { t, mean, spread, count: v.len() }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KineticMode {
    /// ½m V̂² weak value.
    Direct,
    /// ½m v_B² + Q.
    Bohmian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KineticValue {
    pub direct: f64,
    pub bohmian: f64,
    pub flagged: bool,
}

/// Kinetic-energy weak value at x after t_R, by the operator and by the Bohmian route.
/// `pre` is the pair prepared at the reading time.
pub fn kinetic_weak_value(
    x: f64,
    t_r: f64,
    pre: &StatePair,
    em: &EmScenario,
    gauge: Option<&GaugeSpec>,
) -> Result<KineticValue> {
    let sel = SelectionPair::new(PreState::Pair(pre.clone()), PostState::Point(vec![x]), em.clone(), gauge.cloned());
    let w = weak_value(&KINETIC, 0.0, t_r, &sel)?;
    let evolved = crate::propagator::evolve(pre, em, None, t_r)?.cur;
    let g = *evolved.grid.x_axis();
    let (k, wt) = g.locate(x).ok_or(Error::TrajectoryLost(evolved.t))?;
    let v = bohm_velocity(&evolved, em, Axis::X)?;
    let q = quantum_potential(&evolved);
    let lerp = |f: &[Option<f64>]| -> Option<f64> { Some(f[k]? * (1.0 - wt) + f[k + 1]? * wt) };
    let (vb, qb) = match (lerp(&v), lerp(&q)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::TrajectoryLost(evolved.t)),
    };
    Ok(KineticValue { direct: w.real(), bohmian: 0.5 * M_EFF * vb * vb + qb, flagged: w.flagged })
}

/// E at x from ∂_{t_R} of the kinetic weak value divided by q v_B.
pub fn estimate_e_at(
    x: f64,
    pre: &StatePair,
    em: &EmScenario,
    gauge: Option<&GaugeSpec>,
    stride: f64,
    mode: KineticMode,
) -> Result<SensorReading> {
    let sel = SelectionPair::new(PreState::Pair(pre.clone()), PostState::Point(vec![x]), em.clone(), gauge.cloned());
    let v = weak_value(&VELOCITY, 0.0, 0.0, &sel)?;
    if v.real().abs() < MIN_SPEED {
        return Err(Error::NearZeroVelocity(v.real()));
    }
    let (deriv, flagged) = match mode {
        KineticMode::Direct => {
            let d = fdrhd(&KINETIC, 0.0, stride, &sel)?;
            (d.value, d.flagged)
        }
        KineticMode::Bohmian => {
            let a = kinetic_weak_value(x, 0.0, pre, em, gauge)?;
            let b = kinetic_weak_value(x, stride, pre, em, gauge)?;
            ((b.bohmian - a.bohmian) / stride, a.flagged || b.flagged)
        }
    };
    Ok(SensorReading {
        position: [x, 0.0],
        t: pre.t(),
        estimate: deriv / (Q * v.real()),
        unit: "V/m",
        velocity: v.real(),
        derivative: deriv,
        refined: None,
        flagged: flagged || v.flagged,
    })
}

#[derive(Debug, Clone)]
pub struct ESetup {
    pub e: f64,
    pub packet: PacketParams,
    pub grid: Grid1D,
    pub gauge: Option<GaugeSpec>,
    pub mode: KineticMode,
}

#[derive(Debug, Clone)]
pub struct SensorRun {
    pub trajectories: Vec<Trajectory>,
    pub readings: Vec<SensorReading>,
    pub log: StepLog,
    /// Readings refused (e.g. near-zero velocity): (trajectory, time, error).
    pub skipped: Vec<(usize, f64, Error)>,
}

impl SensorRun {
    pub fn mean(&self) -> (f64, f64) {
        let v: Vec<f64> = self.readings.iter().filter(|r| !r.flagged).map(|r| r.estimate).collect();
        mean_spread(&v)
    }
}

/// The E protocol over an ensemble: trajectories from |ψ(0)|², one reading per
/// trajectory point at each sample time (sample times are multiples of dt).
pub fn estimate_e(
    setup: &ESetup,
    n_traj: usize,
    times: &[f64],
    seed: u64,
    stride: f64,
    refine: bool,
) -> Result<SensorRun> {
    let em = EmScenario::uniform_e(setup.e);
    let pair = packet_pair(&setup.packet, setup.grid, 0.0, &em, None)?;
    let starts = sample_initial_positions(&pair.cur, n_traj, seed);
    let mut src = FieldSource::new(pair, &em)?;
    let dt = setup.grid.dt;
    let sample_steps: Vec<usize> = times.iter().map(|&t| steps_for(t, dt)).collect::<Result<_>>()?;
    let last = sample_steps.iter().copied().max().unwrap_or(0);
    let mut pos = starts.clone();
    let mut trajs: Vec<Trajectory> = starts.iter().map(|&p| Trajectory { t: vec![0.0], pos: vec![p], seed }).collect();
    let mut snapshots: Vec<(usize, StatePair, Vec<[f64; 2]>)> = Vec::new();
    for s in 0..=last {
        if s > 0 {
            for p in pos.iter_mut() {
                *p = euler(*p, &src)?;
            }
            src.advance()?;
            for (tr, p) in trajs.iter_mut().zip(&pos) {
                tr.t.push(src.time());
                tr.pos.push(*p);
            }
        }
        if sample_steps.contains(&s) {
            snapshots.push((s, src.pair().clone(), pos.clone()));
        }
    }
    let mut readings = Vec::new();
    let mut skipped = Vec::new();
    for (_, pair, points) in &snapshots {
        for (j, p) in points.iter().enumerate() {
            match estimate_e_at(p[0], pair, &em, setup.gauge.as_ref(), stride, setup.mode) {
                Ok(mut r) => {
                    if refine {
                        let r2 = estimate_e_at(p[0], pair, &em, setup.gauge.as_ref(), 2.0 * stride, setup.mode)?;
                        r.refined = Some(r2.estimate);
                    }
                    readings.push(r);
                }
                Err(e @ Error::NearZeroVelocity(_)) => skipped.push((j, pair.t(), e)),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(SensorRun { trajectories: decimate(trajs, 100), readings, log: src.log, skipped })
}

/// Keep every `every`-th sample plus the last.
fn decimate(trajs: Vec<Trajectory>, every: usize) -> Vec<Trajectory> {
    trajs
        .into_iter()
        .map(|tr| {
            let n = tr.t.len();
            let keep: Vec<usize> = (0..n).filter(|i| i % every == 0 || *i == n - 1).collect();
            Trajectory { t: keep.iter().map(|&i| tr.t[i]).collect(), pos: keep.iter().map(|&i| tr.pos[i]).collect(), seed: tr.seed }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostAnchor {
    /// Post-selection at the reading point for every weak value.
    Fixed,
    /// The t_R-shifted weak values are post-selected where the Bohmian
    /// trajectory through the reading point is at t + t_R.
    Comoving,
}

#[derive(Debug, Clone)]
pub struct BSetup {
    pub state: Arc<Analytic2D>,
    pub grid: Grid2D,
    pub anchor: PostAnchor,
    /// Trajectory integration step (multiple of the grid dt).
    pub traj_dt: f64,
}

/// Point reached from `p` at time t after `t_r`, stepping with the grid dt.
fn follow(state: &Arc<Analytic2D>, grid: Grid2D, p: [f64; 2], t: f64, t_r: f64) -> Result<[f64; 2]> {
    let dt = grid.x.dt;
    let n = steps_for(t_r, dt)?;
    let mut src = AnalyticSource::new(state.clone(), grid, t, dt);
    let mut q = p;
    for _ in 0..n {
        q = euler(q, &src)?;
        src.advance()?;
    }
    Ok(q)
}

/// B at a trajectory point from the mixed derivative of the y weak value over
/// the FDLHD of the x weak value.
pub fn estimate_b_at(setup: &BSetup, p: [f64; 2], t: f64, stride: f64) -> Result<SensorReading> {
    let grid = setup.grid;
    let src = AnalyticSource::new(setup.state.clone(), grid, t, grid.x.dt);
    let vb = src.velocity(p).ok_or(Error::TrajectoryLost(t))?;
    if vb[0].abs() < MIN_SPEED {
        return Err(Error::NearZeroVelocity(vb[0]));
    }
    let post = match setup.anchor {
        PostAnchor::Fixed => PostState::Point(p.to_vec()),
        PostAnchor::Comoving => {
            let (state, t0) = (setup.state.clone(), t);
            let cache = Arc::new(std::sync::Mutex::new(Vec::<(f64, [f64; 2])>::new()));
            PostState::Tracked(Arc::new(move |t_r: f64| {
                if t_r == 0.0 {
                    return p.to_vec();
                }
                let mut c = cache.lock().unwrap();
                if let Some((_, q)) = c.iter().find(|(s, _)| *s == t_r) {
                    return q.to_vec();
                }
                // A lost sub-trajectory falls back to the fixed point.
                let q = follow(&state, grid, p, t0, t_r).unwrap_or(p);
                c.push((t_r, q));
                q.to_vec()
            }))
        }
    };
    let sel = SelectionPair::new(
        PreState::Analytic {
            state: setup.state.clone(),
            t0: t,
            spacing: [grid.x.dx, grid.y.dx],
            dt: grid.x.dt,
            peak: setup.state.peak_modulus(),
        },
        post,
        setup.state.em(),
        None,
    );
    let acc = mixed_second_derivative(&POSITION_Y, stride, stride, &sel)?;
    let vx = fdlhd(&POSITION, stride, 0.0, &sel)?;
    if vx.value.abs() < MIN_SPEED {
        return Err(Error::NearZeroVelocity(vx.value));
    }
    Ok(SensorReading {
        position: p,
        t,
        estimate: -(M_EFF / Q) * acc.value / vx.value,
        unit: "T",
        velocity: vx.value,
        derivative: acc.value,
        refined: None,
        flagged: acc.flagged || vx.flagged,
    })
}

/// The B protocol over an ensemble of Bohmian trajectories of the 2D state.
pub fn estimate_b(
    setup: &BSetup,
    n_traj: usize,
    times: &[f64],
    seed: u64,
    stride: f64,
    refine: bool,
    t_end: f64,
) -> Result<SensorRun> {
    let start_field = setup.state.field_on(setup.grid, 0.0);
    let starts = sample_initial_positions(&start_field, n_traj, seed);
    drop(start_field);
    let mut src = AnalyticSource::new(setup.state.clone(), setup.grid, 0.0, setup.traj_dt);
    let sample_steps: Vec<usize> = times.iter().map(|&t| steps_for(t, setup.traj_dt)).collect::<Result<_>>()?;
    let last = steps_for(t_end, setup.traj_dt)?.max(sample_steps.iter().copied().max().unwrap_or(0));
    let mut pos = starts.clone();
    let mut trajs: Vec<Trajectory> = starts.iter().map(|&p| Trajectory { t: vec![0.0], pos: vec![p], seed }).collect();
    let mut points: Vec<(f64, Vec<[f64; 2]>)> = Vec::new();
    for s in 0..=last {
        if s > 0 {
            for p in pos.iter_mut() {
                *p = euler(*p, &src)?;
            }
            src.advance()?;
            for (tr, p) in trajs.iter_mut().zip(&pos) {
                tr.t.push(src.time());
                tr.pos.push(*p);
            }
        }
        if sample_steps.contains(&s) {
            points.push((src.time(), pos.clone()));
        }
    }
    let mut readings = Vec::new();
    let mut skipped = Vec::new();
    for (t, pts) in &points {
        for (j, p) in pts.iter().enumerate() {
            match estimate_b_at(setup, *p, *t, stride) {
                Ok(mut r) => {
                    if refine {
                        r.refined = Some(estimate_b_at(setup, *p, *t, 0.5 * stride)?.estimate);
                    }
                    readings.push(r);
                }
                Err(e @ Error::NearZeroVelocity(_)) => skipped.push((j, *t, e)),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(SensorRun { trajectories: trajs, readings, log: StepLog::default(), skipped })
}

/// Period of x(t) from successive midline crossings; a crossing only counts
/// once x has left a band of 10% of the range around the midline, so jitter
/// near turning points is ignored. Needs at least three crossings.
pub fn oscillation_period(tr: &Trajectory) -> Option<f64> {
    let x: Vec<f64> = tr.pos.iter().map(|p| p[0]).collect();
    let hi = x.iter().copied().fold(f64::MIN, f64::max);
    let lo = x.iter().copied().fold(f64::MAX, f64::min);
    let mid = 0.5 * (hi + lo);
    let band = 0.1 * (hi - lo);
    if !(band > 0.0) {
        return None;
    }
    let mut side = 0i8;
    let mut last_cross = None;
    let mut crossings = Vec::new();
    for i in 1..x.len() {
        if (x[i - 1] - mid) * (x[i] - mid) <= 0.0 && x[i] != x[i - 1] {
            let f = (mid - x[i - 1]) / (x[i] - x[i - 1]);
            last_cross = Some(tr.t[i - 1] + f * (tr.t[i] - tr.t[i - 1]));
        }
        let now = if x[i] > mid + band { 1 } else if x[i] < mid - band { -1 } else { 0 };
        if now != 0 && now != side {
            if side != 0 {
                crossings.extend(last_cross);
            }
            side = now;
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    let full: Vec<f64> = crossings.windows(3).map(|w| w[2] - w[0]).collect();
    Some(full.iter().sum::<f64>() / full.len() as f64)
}

/// Bohmian y-acceleration along a trajectory expected from the Lorentz force.
pub fn lorentz_acceleration(b: f64, vx: f64) -> f64 {
    -(Q / M_EFF) * b * vx
}
