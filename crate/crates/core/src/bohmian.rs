//! Bohmian and osmotic velocities, the quantum potential, trajectories and
//! |ψ|²-distributed sampling.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fields::{central_diff, Axis, Grid, Grid2D, WaveField};
use crate::gauge::EmScenario;
use crate::propagator::{steps_for, Analytic2D, StatePair, StepLog, StepRecord, Stepper, LEAK_TOLERANCE};
use crate::units::{HBAR, M_EFF, Q};

/// Density (relative to peak density) below which velocities are not evaluated.
pub const MASK_DENSITY: f64 = 1e-10;

fn mask(psi: &WaveField) -> Vec<bool> {
    let peak = psi.amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    psi.amps.iter().map(|a| a.norm_sqr() > MASK_DENSITY * peak).collect()
}

/// (ħ/m*) Im(∂ψ/ψ) − q A/m* along `axis`, None where the density is masked.
pub fn bohm_velocity(psi: &WaveField, em: &EmScenario, axis: Axis) -> Result<Vec<Option<f64>>> {
    let em = em.in_gauge(psi.gauge.as_ref())?;
    let d = central_diff(psi, axis)?;
    let m = mask(psi);
    let c = axis as usize;
    Ok((0..psi.amps.len())
        .map(|i| {
            m[i].then(|| {
                let (x, y) = psi.grid.coords(i);
                HBAR / M_EFF * (d[i] / psi.amps[i]).im - Q * em.a(x, y, psi.t)[c] / M_EFF
            })
        })
        .collect())
}

/// (ħ/m*) ∇R/R along `axis`.
pub fn osmotic_velocity(psi: &WaveField, axis: Axis) -> Result<Vec<Option<f64>>> {
    let d = central_diff(psi, axis)?;
    let m = mask(psi);
    Ok((0..psi.amps.len()).map(|i| m[i].then(|| HBAR / M_EFF * (d[i] / psi.amps[i]).re)).collect())
}

/// −(ħ²/2m*) ∇²R/R with three-point Laplacians; the rim is left masked.
pub fn quantum_potential(psi: &WaveField) -> Vec<Option<f64>> {
    let r: Vec<f64> = psi.amps.iter().map(|a| a.norm()).collect();
    let m = mask(psi);
    let mut out = vec![None; r.len()];
    match psi.grid {
        Grid::One(g) => {
            for k in 1..g.nx - 1 {
                if m[k] {
                    let lap = (r[k + 1] - 2.0 * r[k] + r[k - 1]) / (g.dx * g.dx);
                    out[k] = Some(-HBAR * HBAR / (2.0 * M_EFF) * lap / r[k]);
                }
            }
        }
        Grid::Two(g) => {
            for k in 1..g.x.nx - 1 {
                for l in 1..g.y.nx - 1 {
                    let i = g.index(k, l);
                    if m[i] {
                        let lx = (r[g.index(k + 1, l)] - 2.0 * r[i] + r[g.index(k - 1, l)]) / (g.x.dx * g.x.dx);
                        let ly = (r[g.index(k, l + 1)] - 2.0 * r[i] + r[g.index(k, l - 1)]) / (g.y.dx * g.y.dx);
                        out[i] = Some(-HBAR * HBAR / (2.0 * M_EFF) * (lx + ly) / r[i]);
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    /// (x, y); y is 0 for 1D trajectories.
    pub pos: Vec<[f64; 2]>,
    pub seed: u64,
}

impl Trajectory {
    pub fn last(&self) -> [f64; 2] {
        *self.pos.last().unwrap()
    }

    /// Linear interpolation of the recorded positions at time t.
    pub fn at(&self, t: f64) -> Option<[f64; 2]> {
        let i = self.t.partition_point(|&s| s <= t);
        if i == 0 || (i == self.t.len() && t > *self.t.last()?) {
            return None;
        }
        if i == self.t.len() {
            return Some(self.last());
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let w = (t - t0) / (t1 - t0);
        let (a, b) = (self.pos[i - 1], self.pos[i]);
        Some([a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])])
    }
}

/// Time-indexed velocity field that trajectories are integrated through.
pub trait VelocitySource {
    fn time(&self) -> f64;
    fn dt(&self) -> f64;
    /// Cell sizes; the second entry is ignored for 1D sources.
    fn spacing(&self) -> [f64; 2];
    fn dims(&self) -> usize;
    fn velocity(&self, pos: [f64; 2]) -> Option<[f64; 2]>;
    fn advance(&mut self) -> Result<()>;
}

/// Constant velocity everywhere.
#[derive(Debug, Clone)]
pub struct UniformSource {
    pub v: [f64; 2],
    pub t: f64,
    pub dt: f64,
    pub spacing: [f64; 2],
}

impl VelocitySource for UniformSource {
    fn time(&self) -> f64 {
        self.t
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn spacing(&self) -> [f64; 2] {
        self.spacing
    }
    fn dims(&self) -> usize {
        2
    }
    fn velocity(&self, _pos: [f64; 2]) -> Option<[f64; 2]> {
        Some(self.v)
    }
    fn advance(&mut self) -> Result<()> {
        self.t += self.dt;
        Ok(())
    }
}

/// 1D field propagated by the stepper; velocities interpolated linearly between nodes.
pub struct FieldSource {
    stepper: Stepper,
    em: EmScenario,
    pair: StatePair,
    v: Vec<Option<f64>>,
    steps: usize,
    pub log: StepLog,
}

impl FieldSource {
    pub fn new(pair: StatePair, em: &EmScenario) -> Result<Self> {
        let stepper = Stepper::new(em, pair.cur.gauge.as_ref(), pair.grid())?;
        let v = bohm_velocity(&pair.cur, em, Axis::X)?;
        let log = StepLog { records: vec![StepRecord { step: 0, t: pair.t(), norm: pair.cur.norm(), boundary: pair.cur.boundary_amplitude() }] };
        Ok(Self { stepper, em: em.clone(), pair, v, steps: 0, log })
    }

    pub fn field(&self) -> &WaveField {
        &self.pair.cur
    }

    pub fn pair(&self) -> &StatePair {
        &self.pair
    }
}

impl VelocitySource for FieldSource {
    fn time(&self) -> f64 {
        self.pair.t()
    }
    fn dt(&self) -> f64 {
        self.pair.grid().dt
    }
    fn spacing(&self) -> [f64; 2] {
        let dx = self.pair.grid().dx;
        [dx, dx]
    }
    fn dims(&self) -> usize {
        1
    }
    fn velocity(&self, pos: [f64; 2]) -> Option<[f64; 2]> {
        let (k, w) = self.pair.grid().locate(pos[0])?;
        let (a, b) = (self.v[k]?, self.v[k + 1]?);
        Some([a + w * (b - a), 0.0])
    }
    fn advance(&mut self) -> Result<()> {
        let next = self.stepper.step(&self.pair, self.steps)?;
        self.steps += 1;
        let prev = std::mem::replace(&mut self.pair.cur, next);
        self.pair.prev = prev;
        let boundary = self.pair.cur.boundary_amplitude();
        if boundary > LEAK_TOLERANCE {
            return Err(Error::BoundaryLeak { step: self.steps, amplitude: boundary });
        }
        self.log.records.push(StepRecord { step: self.steps, t: self.pair.t(), norm: self.pair.cur.norm(), boundary });
        self.v = bohm_velocity(&self.pair.cur, &self.em, Axis::X)?;
        Ok(())
    }
}

/// Exact 2D dynamics evaluated on the nodes of `grid` around each query point,
/// with the same central differences the grid operators use.
pub struct AnalyticSource {
    pub state: Arc<Analytic2D>,
    pub grid: Grid2D,
    pub t: f64,
    pub dt: f64,
    peak_density: f64,
    coeffs: Vec<Complex64>,
}

impl AnalyticSource {
    pub fn new(state: Arc<Analytic2D>, grid: Grid2D, t0: f64, dt: f64) -> Self {
        let peak = state.peak_modulus();
        let mut s = Self { state, grid, t: t0, dt, peak_density: peak * peak, coeffs: Vec::new() };
        s.refresh();
        s
    }

    fn refresh(&mut self) {
        if let Analytic2D::Landau(ls) = self.state.as_ref() {
            self.coeffs = ls.coeffs_at(self.t);
        }
    }

    fn value(&self, x: f64, y: f64) -> Complex64 {
        match self.state.as_ref() {
            Analytic2D::Landau(ls) => ls.value_with(x, y, &self.coeffs),
            other => other.value(x, y, self.t),
        }
    }

    fn node_velocity(&self, k: usize, l: usize) -> Option<[f64; 2]> {
        let (x, y) = (self.grid.x.x(k), self.grid.y.x(l));
        let (hx, hy) = (self.grid.x.dx, self.grid.y.dx);
        let p = self.value(x, y);
        if !(p.norm_sqr() > MASK_DENSITY * self.peak_density) {
            return None;
        }
        let dpx = (self.value(x + hx, y) - self.value(x - hx, y)) / (2.0 * hx);
        let dpy = (self.value(x, y + hy) - self.value(x, y - hy)) / (2.0 * hy);
        let b = self.state.b();
        Some([HBAR / M_EFF * (dpx / p).im, HBAR / M_EFF * (dpy / p).im - Q * x * b / M_EFF])
    }
}

impl VelocitySource for AnalyticSource {
    fn time(&self) -> f64 {
        self.t
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn spacing(&self) -> [f64; 2] {
        [self.grid.x.dx, self.grid.y.dx]
    }
    fn dims(&self) -> usize {
        2
    }
    fn velocity(&self, pos: [f64; 2]) -> Option<[f64; 2]> {
        let (k, wx) = self.grid.x.locate(pos[0])?;
        let mut y = pos[1];
        if self.state.y_uniform() {
            // The flow does not depend on y; fold y back into the window.
            let span = self.grid.y.x_max() - self.grid.y.x0;
            y -= ((y - self.grid.y.x0) / span).floor() * span;
        }
        let (l, wy) = self.grid.y.locate(y)?;
        let mut v = [0.0; 2];
        for (dk, fx) in [(0, 1.0 - wx), (1, wx)] {
            for (dl, fy) in [(0, 1.0 - wy), (1, wy)] {
                let n = self.node_velocity(k + dk, l + dl)?;
                v[0] += fx * fy * n[0];
                v[1] += fx * fy * n[1];
            }
        }
        Some(v)
    }
    fn advance(&mut self) -> Result<()> {
        self.t += self.dt;
        self.refresh();
        Ok(())
    }
}

/// One explicit Euler step of length dt, split so no sub-step crosses more than a cell.
pub(crate) fn euler(pos: [f64; 2], src: &dyn VelocitySource) -> Result<[f64; 2]> {
    let mut p = pos;
    let mut left = src.dt();
    let h = src.spacing();
    let d = src.dims();
    while left > 0.0 {
        let v = src.velocity(p).ok_or(Error::TrajectoryLost(src.time()))?;
        let mut step = left;
        for a in 0..d {
            if v[a].abs() * step > h[a] {
                step = h[a] / v[a].abs();
            }
        }
        // Guard against stalls from rounding.
        step = step.max(left * 1e-6);
        for a in 0..d {
            p[a] += v[a] * step;
        }
        left -= step;
    }
    Ok(p)
}

/// Integrate many trajectories through one source from its current time to t1.
/// Positions are recorded every `record_every` steps (and always at both ends).
pub fn integrate_ensemble(
    starts: &[[f64; 2]],
    src: &mut dyn VelocitySource,
    t1: f64,
    record_every: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    let t0 = src.time();
    let n = steps_for(t1 - t0, src.dt())?;
    let mut trajs: Vec<Trajectory> =
        starts.iter().map(|&p| Trajectory { t: vec![t0], pos: vec![p], seed }).collect();
    let mut cur: Vec<[f64; 2]> = starts.to_vec();
    for s in 1..=n {
        for p in cur.iter_mut() {
            *p = euler(*p, src)?;
        }
        src.advance()?;
        if (record_every > 0 && s % record_every == 0) || s == n {
            let t = src.time();
            for (tr, p) in trajs.iter_mut().zip(&cur) {
                tr.t.push(t);
                tr.pos.push(*p);
            }
        }
    }
    Ok(trajs)
}

/// Single trajectory from x0 at the source's time t0 to t1, sampled every step.
pub fn integrate_trajectory(x0: [f64; 2], src: &mut dyn VelocitySource, t0: f64, t1: f64) -> Result<Trajectory> {
    if (src.time() - t0).abs() > 1e-6 * src.dt() {
        return Err(Error::TimeMismatch(src.time(), t0));
    }
    if src.velocity(x0).is_none() {
        return Err(Error::TrajectoryLost(t0));
    }
    Ok(integrate_ensemble(&[x0], src, t1, 1, 0)?.remove(0))
}

fn draw_from(weights: &[f64], origin: f64, h: f64, rng: &mut ChaCha8Rng) -> f64 {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    let u: f64 = rng.random::<f64>() * acc;
    let k = cdf.partition_point(|&c| c <= u).min(weights.len() - 1);
    let below = if k == 0 { 0.0 } else { cdf[k - 1] };
    let frac = if weights[k] > 0.0 { (u - below) / weights[k] } else { 0.5 };
    origin + (k as f64 - 0.5 + frac) * h
}

/// n positions distributed as |ψ|² (cell-wise constant density around each node).
pub fn sample_initial_positions(psi: &WaveField, n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match psi.grid {
        Grid::One(g) => {
            let w: Vec<f64> = psi.amps.iter().map(|a| a.norm_sqr()).collect();
            (0..n).map(|_| [draw_from(&w, g.x0, g.dx, &mut rng), 0.0]).collect()
        }
        Grid::Two(g) => {
            let ny = g.y.nx;
            let rows: Vec<f64> = (0..g.x.nx).map(|k| psi.amps[k * ny..(k + 1) * ny].iter().map(|a| a.norm_sqr()).sum()).collect();
            (0..n)
                .map(|_| {
                    let x = draw_from(&rows, g.x.x0, g.x.dx, &mut rng);
                    let k = g.x.nearest(x);
                    let cols: Vec<f64> = psi.amps[k * ny..(k + 1) * ny].iter().map(|a| a.norm_sqr()).collect();
                    [x, draw_from(&cols, g.y.x0, g.y.dx, &mut rng)]
                })
                .collect()
        }
    }
}

/// Kolmogorov–Smirnov distance between samples and the cell-wise density |ψ|² of a 1D field.
pub fn ks_distance(samples: &[f64], psi: &WaveField) -> f64 {
    let g = *psi.grid.x_axis();
    let w: Vec<f64> = psi.amps.iter().map(|a| a.norm_sqr()).collect();
    let mut prefix = vec![0.0; g.nx + 1];
    for k in 0..g.nx {
        prefix[k + 1] = prefix[k] + w[k];
    }
    let total = prefix[g.nx];
    let cdf = |x: f64| -> f64 {
        let s = (x - g.x0) / g.dx + 0.5;
        if s <= 0.0 {
            return 0.0;
        }
        let k = s.floor() as usize;
        if k >= g.nx {
            return 1.0;
        }
        (prefix[k] + (s - k as f64) * w[k]) / total
    };
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}
