//! Time evolution: the explicit three-level stepper (Coulomb and gauged forms),
//! and exact evolution of separable 2D states (Landau superpositions, free packets).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{normalize, Grid, Grid1D, Grid2D, WaveField};
use crate::gauge::{apply_gauge, EmScenario, FieldKind, GaugeSpec};
use crate::operators::{apply, OperatorKind, OperatorSpec};
use crate::states::{gaussian_field, hermite_functions, LandauParams, PacketParams, BOX_TOLERANCE};
use crate::units::{HBAR, M_EFF, Q};

/// Largest boundary amplitude (relative to peak) tolerated during stepping.
pub const LEAK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StatePair {
    pub prev: WaveField,
    pub cur: WaveField,
}

impl StatePair {
    pub fn new(prev: WaveField, cur: WaveField) -> Result<Self> {
        if prev.grid != cur.grid {
            return Err(Error::GridMismatch);
        }
        if prev.gauge != cur.gauge {
            return Err(Error::GaugeMixing);
        }
        let dt = cur.grid.dt();
        if (cur.t - prev.t - dt).abs() > 1e-18_f64.max(1e-9 * dt) {
            return Err(Error::TimeMismatch(prev.t, cur.t));
        }
        Ok(Self { prev, cur })
    }

    pub fn t(&self) -> f64 {
        self.cur.t
    }

    pub fn grid(&self) -> Grid1D {
        *self.cur.grid.x_axis()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub boundary: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepLog {
    pub records: Vec<StepRecord>,
}

impl StepLog {
    /// max |norm(t) − norm(first)| / norm(first).
    pub fn norm_drift(&self) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        self.records.iter().map(|r| (r.norm - first.norm).abs() / first.norm).fold(0.0, f64::max)
    }

    pub fn max_boundary(&self) -> f64 {
        self.records.iter().map(|r| r.boundary).fold(0.0, f64::max)
    }
}

/// ħΔt/(Δx² m*), the dimensionless step of the kinetic stencil.
pub fn stability_coefficient(g: &Grid1D) -> f64 {
    HBAR * g.dt / (g.dx * g.dx * M_EFF)
}

/// Three-level stepper for 1D fields. The gauge terms use the discrete
/// derivatives of g on the space/time mesh.
#[derive(Debug, Clone)]
pub struct Stepper {
    em: EmScenario,
    gauge: Option<GaugeSpec>,
    grid: Grid1D,
    boundary: Boundary,
    check_leak: bool,
    static_potential: Option<Vec<f64>>,
}

impl Stepper {
    pub fn new(em: &EmScenario, gauge: Option<&GaugeSpec>, grid: Grid1D) -> Result<Self> {
        if matches!(em.kind, FieldKind::Landau { .. }) {
            return Err(Error::Unsupported("the finite-difference stepper is one-dimensional".into()));
        }
        if !em.is_coulomb() {
            return Err(Error::Unsupported("stepper takes Coulomb potentials plus an explicit gauge".into()));
        }
        let c = stability_coefficient(&grid);
        if c > 0.5 {
            return Err(Error::UnstableStep(format!("coefficient hbar*dt/(dx^2 m) = {c:.4} > 0.5")));
        }
        let vmax = (0..grid.nx).map(|k| (Q * em.a_s(grid.x(k), 0.0, 0.0)).abs()).fold(0.0, f64::max);
        let bound = grid.dt * (2.0 * HBAR * HBAR / (M_EFF * grid.dx * grid.dx) + vmax) / HBAR;
        if bound > 1.0 {
            return Err(Error::UnstableStep(format!("dt * max|H| / hbar = {bound:.4} > 1")));
        }
        let static_potential = if gauge.is_none() && !em.time_dependent() {
            Some((0..grid.nx).map(|k| Q * em.a_s(grid.x(k), 0.0, 0.0)).collect())
        } else {
            None
        };
        Ok(Self { em: em.clone(), gauge: gauge.cloned(), grid, boundary: Boundary::Dirichlet, check_leak: true, static_potential })
    }

    pub fn with_boundary(mut self, b: Boundary) -> Self {
        self.boundary = b;
        self.check_leak = b == Boundary::Dirichlet;
        self
    }

    pub fn without_leak_check(mut self) -> Self {
        self.check_leak = false;
        self
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn gauge(&self) -> Option<&GaugeSpec> {
        self.gauge.as_ref()
    }

    pub fn em(&self) -> &EmScenario {
        &self.em
    }

    /// The discrete Hamiltonian the stepper integrates: next = prev − 2i(Δt/ħ) H ψ.
    pub fn hamiltonian_action(&self, psi: &[Complex64], t: f64, out: &mut [Complex64]) {
        let g = &self.grid;
        let n = g.nx;
        let kin = -HBAR * HBAR / (2.0 * M_EFF * g.dx * g.dx);
        let (left, right) = match self.boundary {
            Boundary::Dirichlet => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
            Boundary::Periodic => (psi[n - 1], psi[0]),
        };
        let at = |k: isize| -> Complex64 {
            if k < 0 {
                left
            } else if k as usize >= n {
                right
            } else {
                psi[k as usize]
            }
        };
        let lap_edge = |k: usize| at(k as isize + 1) - 2.0 * psi[k] + at(k as isize - 1);
        out[0] = kin * lap_edge(0);
        out[n - 1] = kin * lap_edge(n - 1);
        for k in 1..n - 1 {
            out[k] = kin * (psi[k + 1] - 2.0 * psi[k] + psi[k - 1]);
        }
        match (&self.static_potential, &self.gauge) {
            (Some(v), _) => {
                for k in 0..n {
                    out[k] += v[k] * psi[k];
                }
            }
            (None, None) => {
                for k in 0..n {
                    out[k] += Q * self.em.a_s(g.x(k), 0.0, t) * psi[k];
                }
            }
            (None, Some(gs)) => {
                let i = Complex64::i();
                let (dx, dt) = (g.dx, g.dt);
                for k in 0..n {
                    let x = g.x(k);
                    let (gm, g0, gp) = (gs.g(x - dx, t), gs.g(x, t), gs.g(x + dx, t));
                    let gx = (gp - gm) / (2.0 * dx);
                    let gxx = (gp - 2.0 * g0 + gm) / (dx * dx);
                    let gt = (gs.g(x, t + dt) - gs.g(x, t - dt)) / (2.0 * dt);
                    let dpsi = (at(k as isize + 1) - at(k as isize - 1)) / (2.0 * dx);
                    out[k] += Q * self.em.a_s(x, 0.0, t) * psi[k]
                        + i * (HBAR * Q / (2.0 * M_EFF)) * gxx * psi[k]
                        + i * (HBAR * Q / M_EFF) * gx * dpsi
                        + (Q * Q / (2.0 * M_EFF)) * gx * gx * psi[k]
                        - Q * gt * psi[k];
                }
            }
        }
    }

    fn check_field(&self, f: &WaveField) -> Result<()> {
        if f.grid != Grid::One(self.grid) {
            return Err(Error::GridMismatch);
        }
        if f.gauge.as_ref() != self.gauge.as_ref() {
            return Err(Error::GaugeMixing);
        }
        Ok(())
    }

    /// One step; returns ψ at cur.t + dt.
    pub fn step(&self, sp: &StatePair, index: usize) -> Result<WaveField> {
        self.check_field(&sp.cur)?;
        let n = self.grid.nx;
        let mut h = vec![Complex64::new(0.0, 0.0); n];
        self.hamiltonian_action(&sp.cur.amps, sp.cur.t, &mut h);
        let f = Complex64::new(0.0, -2.0 * self.grid.dt / HBAR);
        let amps: Vec<Complex64> = sp.prev.amps.iter().zip(&h).map(|(p, hv)| p + f * hv).collect();
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NumericalBlowup(index));
        }
        let mut next = sp.cur.with_amps(amps);
        next.t = sp.cur.t + self.grid.dt;
        Ok(next)
    }

    /// Advance `steps` steps, logging every step and calling `on_step` after each.
    pub fn run(
        &self,
        sp: &StatePair,
        steps: usize,
        mut log: Option<&mut StepLog>,
        mut on_step: impl FnMut(&StatePair) -> Result<()>,
    ) -> Result<StatePair> {
        self.check_field(&sp.prev)?;
        let mut pair = sp.clone();
        for s in 0..steps {
            let next = self.step(&pair, s)?;
            let prev = std::mem::replace(&mut pair.cur, next);
            pair.prev = prev;
            let boundary = if self.check_leak || log.is_some() { pair.cur.boundary_amplitude() } else { 0.0 };
            if self.check_leak && boundary > LEAK_TOLERANCE {
                return Err(Error::BoundaryLeak { step: s, amplitude: boundary });
            }
            if let Some(l) = log.as_deref_mut() {
                l.records.push(StepRecord { step: s + 1, t: pair.cur.t, norm: pair.cur.norm(), boundary });
            }
            on_step(&pair)?;
        }
        Ok(pair)
    }

    pub fn evolve(&self, sp: &StatePair, duration: f64) -> Result<StatePair> {
        self.run(sp, steps_for(duration, self.grid.dt)?, None, |_| Ok(()))
    }

    /// Pair whose `cur` is `f`, with `prev` reconstructed by a fourth-order
    /// Taylor step of this stepper's Hamiltonian backwards by dt.
    pub fn bootstrap(&self, f: &WaveField) -> Result<StatePair> {
        self.check_field(f)?;
        let n = self.grid.nx;
        let dt = self.grid.dt;
        let tm = f.t - 0.5 * dt;
        let mut term = f.amps.clone();
        let mut acc = f.amps.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for order in 1..=4 {
            self.hamiltonian_action(&term, tm, &mut buf);
            let c = Complex64::new(0.0, dt / HBAR / order as f64);
            for k in 0..n {
                term[k] = c * buf[k];
                acc[k] += term[k];
            }
        }
        let mut prev = f.with_amps(acc);
        prev.t = f.t - dt;
        Ok(StatePair { prev, cur: f.clone() })
    }
}

/// Number of steps in `duration`; must be a non-negative multiple of dt.
pub fn steps_for(duration: f64, dt: f64) -> Result<usize> {
    if !(duration >= 0.0) {
        return Err(Error::BadDuration(duration));
    }
    let n = (duration / dt).round();
    if (n * dt - duration).abs() > 1e-6 * duration.max(dt) {
        return Err(Error::BadDuration(duration));
    }
    Ok(n as usize)
}

pub fn step_coulomb(sp: &StatePair, em: &EmScenario) -> Result<WaveField> {
    if sp.cur.gauge.is_some() {
        return Err(Error::GaugeMixing);
    }
    Stepper::new(em, None, sp.grid())?.step(sp, 0)
}

pub fn step_gauged(sp: &StatePair, em: &EmScenario, gs: &GaugeSpec) -> Result<WaveField> {
    Stepper::new(em, Some(gs), sp.grid())?.step(sp, 0)
}

pub fn evolve(sp: &StatePair, em: &EmScenario, gs: Option<&GaugeSpec>, duration: f64) -> Result<StatePair> {
    Stepper::new(em, gs, sp.grid())?.evolve(sp, duration)
}

pub fn evolve_logged(
    sp: &StatePair,
    em: &EmScenario,
    gs: Option<&GaugeSpec>,
    duration: f64,
    log: &mut StepLog,
) -> Result<StatePair> {
    let st = Stepper::new(em, gs, sp.grid())?;
    st.run(sp, steps_for(duration, st.grid.dt)?, Some(log), |_| Ok(()))
}

/// U(duration) O ψ, without renormalization. ψ carries the gauge `gs` if given.
pub fn evolve_applied(
    o: &OperatorSpec,
    psi: &WaveField,
    em: &EmScenario,
    gs: Option<&GaugeSpec>,
    duration: f64,
) -> Result<WaveField> {
    let st = Stepper::new(em, gs, *psi.grid.x_axis())?;
    let f = apply(o, psi, Some(em))?;
    Ok(st.evolve(&st.bootstrap(&f)?, duration)?.cur)
}

/// Pre-state pair with `cur` = the packet exactly as parametrized, at time `t`.
/// Free Coulomb dynamics use the analytic snapshot at t − dt; otherwise the
/// earlier level comes from the stepper's own Hamiltonian.
pub fn packet_pair(p: &PacketParams, grid: Grid1D, t: f64, em: &EmScenario, gs: Option<&GaugeSpec>) -> Result<StatePair> {
    let cur = normalize(&gaussian_field(p, grid, t, 0.0))?;
    let r = cur.boundary_amplitude();
    if !(r < BOX_TOLERANCE) {
        return Err(Error::BoxTooSmall(r));
    }
    let gauged = |f: &WaveField| match gs {
        Some(g) => apply_gauge(f, g),
        None => Ok(f.clone()),
    };
    if em.kind == FieldKind::Free && em.is_coulomb() {
        let prev = normalize(&gaussian_field(p, grid, t - grid.dt, -grid.dt))?;
        StatePair::new(gauged(&prev)?, gauged(&cur)?)
    } else {
        Stepper::new(em, gs, grid)?.bootstrap(&gauged(&cur)?)
    }
}

/// Landau superposition with its decomposition; evolves by phases c_n(t) = c_n(0) e^{−iE_n t/ħ}.
#[derive(Debug, Clone, PartialEq)]
pub struct LandauState {
    pub lp: LandauParams,
    pub grid: Grid2D,
    /// Level profiles sampled on the x nodes of `grid`.
    profiles: Vec<Vec<f64>>,
    /// Factor making the field discretely normalized on `grid`.
    scale: f64,
}

impl LandauState {
    pub(crate) fn new(lp: LandauParams, grid: Grid2D) -> Self {
        let n = lp.n_max();
        let l = lp.l_b();
        let c = lp.center();
        let mut profiles = vec![Vec::with_capacity(grid.x.nx); n];
        for k in 0..grid.x.nx {
            let h = hermite_functions(n - 1, (grid.x.x(k) - c) / l);
            for (j, p) in profiles.iter_mut().enumerate() {
                p.push(h[j] / l.sqrt());
            }
        }
        let mut s = Self { lp, grid, profiles, scale: 1.0 };
        let norm_x: f64 = (0..grid.x.nx).map(|k| s.profile_node(k, 0.0).norm_sqr()).sum::<f64>() * grid.x.dx;
        let ly = grid.y.nx as f64 * grid.y.dx;
        s.scale = 1.0 / (norm_x * ly).sqrt();
        s
    }

    pub fn coeffs_at(&self, t: f64) -> Vec<Complex64> {
        self.lp
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::from_polar(1.0, -self.lp.energy(n) * t / HBAR))
            .collect()
    }

    fn profile_node(&self, k: usize, t: f64) -> Complex64 {
        self.coeffs_at(t).iter().zip(&self.profiles).map(|(c, p)| c * p[k]).sum()
    }

    /// Σ c_n(t) φ_n(x) at any x.
    pub fn profile(&self, x: f64, t: f64) -> Complex64 {
        let n = self.lp.n_max();
        let l = self.lp.l_b();
        let h = hermite_functions(n - 1, (x - self.lp.center()) / l);
        self.coeffs_at(t).iter().zip(&h).map(|(c, v)| c * (v / l.sqrt())).sum()
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> Complex64 {
        self.profile(x, t) * Complex64::from_polar(self.scale, self.lp.k_y * y)
    }

    /// `value` with the time-dependent weights supplied by the caller.
    pub fn value_with(&self, x: f64, y: f64, coeffs: &[Complex64]) -> Complex64 {
        let l = self.lp.l_b();
        let h = hermite_functions(coeffs.len() - 1, (x - self.lp.center()) / l);
        let p: Complex64 = coeffs.iter().zip(&h).map(|(c, v)| c * (v / l.sqrt())).sum();
        p * Complex64::from_polar(self.scale, self.lp.k_y * y)
    }

    /// Largest |ψ| over the grid nodes, sampled across one cyclotron period.
    pub fn peak_modulus(&self) -> f64 {
        let period = 2.0 * std::f64::consts::PI / self.lp.omega();
        let mut peak = 0.0f64;
        for j in 0..32 {
            let c = self.coeffs_at(period * j as f64 / 32.0);
            for k in 0..self.grid.x.nx {
                let p: Complex64 = c.iter().zip(&self.profiles).map(|(c, p)| c * p[k]).sum();
                peak = peak.max(p.norm());
            }
        }
        peak * self.scale
    }

    /// Expected energy Σ|c_n|² E_n.
    pub fn mean_energy(&self) -> f64 {
        self.lp.coeffs.iter().enumerate().map(|(n, c)| c.norm_sqr() * self.lp.energy(n)).sum()
    }

    pub fn field(&self, t: f64) -> WaveField {
        let g = self.grid;
        let prof: Vec<Complex64> = (0..g.x.nx).map(|k| self.profile_node(k, t)).collect();
        let phase: Vec<Complex64> =
            (0..g.y.nx).map(|l| Complex64::from_polar(self.scale, self.lp.k_y * g.y.x(l))).collect();
        let mut amps = Vec::with_capacity(g.x.nx * g.y.nx);
        for p in &prof {
            for f in &phase {
                amps.push(p * f);
            }
        }
        WaveField { grid: Grid::Two(g), amps, t, gauge: None }
    }
}

pub fn landau_evolve(ls: &LandauState, t: f64) -> WaveField {
    ls.field(t)
}

/// Separable 2D pre-states with exact dynamics in a uniform B (B = 0 allowed).
#[derive(Debug, Clone, PartialEq)]
pub enum Analytic2D {
    Landau(LandauState),
    /// Product of two free packets, moving along x and y.
    FreePacket { px: PacketParams, py: PacketParams },
}

impl Analytic2D {
    pub fn b(&self) -> f64 {
        match self {
            Analytic2D::Landau(ls) => ls.lp.b,
            Analytic2D::FreePacket { .. } => 0.0,
        }
    }

    /// Density and flow are independent of y.
    pub fn y_uniform(&self) -> bool {
        matches!(self, Analytic2D::Landau(_))
    }

    /// Upper estimate of max |ψ| over space and time.
    pub fn peak_modulus(&self) -> f64 {
        match self {
            Analytic2D::Landau(ls) => ls.peak_modulus(),
            Analytic2D::FreePacket { px, py } => {
                px.amplitude(px.center, 0.0).norm() * py.amplitude(py.center, 0.0).norm()
            }
        }
    }

    pub fn em(&self) -> EmScenario {
        match self {
            Analytic2D::Landau(ls) => EmScenario::landau(ls.lp.b),
            Analytic2D::FreePacket { .. } => EmScenario::free(),
        }
    }

    pub fn value(&self, x: f64, y: f64, t: f64) -> Complex64 {
        match self {
            Analytic2D::Landau(ls) => ls.value(x, y, t),
            Analytic2D::FreePacket { px, py } => px.amplitude(x, t) * py.amplitude(y, t),
        }
    }

    pub fn field_on(&self, grid: Grid2D, t: f64) -> WaveField {
        WaveField::from_fn(Grid::Two(grid), t, |x, y| self.value(x, y, t))
    }

    /// U(t_total − t_apply) O U(t_apply) ψ₀ on `grid`, through the exact
    /// Heisenberg motion of X and Y in a uniform B.
    pub fn applied_on(&self, o: &OperatorSpec, grid: Grid2D, t_apply: f64, t_total: f64) -> Result<WaveField> {
        let psi = self.field_on(grid, t_total);
        let s = t_total - t_apply;
        let omega = Q * self.b() / M_EFF;
        // sin(Ωs)/Ω and (1 − cos Ωs)/Ω with their B → 0 limits.
        let (sn, cs) = if omega.abs() * s.abs() < 1e-8 {
            (s, 0.5 * omega * s * s)
        } else {
            ((omega * s).sin() / omega, (1.0 - (omega * s).cos()) / omega)
        };
        let em = self.em();
        let vx = || apply(&OperatorSpec::new(OperatorKind::Velocity), &psi, Some(&em));
        let vy = || apply(&OperatorSpec::new(OperatorKind::VelocityY), &psi, Some(&em));
        let combo = |base: WaveField, cx: f64, cy: f64| -> Result<WaveField> {
            let (vx, vy) = (vx()?, vy()?);
            let amps = base
                .amps
                .iter()
                .zip(vx.amps.iter().zip(&vy.amps))
                .map(|(b, (a, c))| b + cx * a + cy * c)
                .collect();
            Ok(base.with_amps(amps))
        };
        match o.kind {
            OperatorKind::Identity => Ok(psi),
            // X_H(−s) = X − V_x sin(Ωs)/Ω + V_y (1 − cos Ωs)/Ω
            OperatorKind::Position => combo(apply(o, &psi, None)?, -sn, cs),
            // Y_H(−s) = Y − V_y sin(Ωs)/Ω − V_x (1 − cos Ωs)/Ω
            OperatorKind::PositionY => combo(apply(o, &psi, None)?, -cs, -sn),
            // The velocities rotate at Ω.
            OperatorKind::Velocity => combo(psi.scale(0.0.into()), 1.0 - omega * cs, -omega * sn),
            OperatorKind::VelocityY => combo(psi.scale(0.0.into()), omega * sn, 1.0 - omega * cs),
            _ => Err(Error::Unsupported(format!("{} in the analytic 2D evolution", o.name()))),
        }
    }
}

/// Small grid with a node exactly at `center`, `half` nodes on each side.
pub fn window_grid(center: [f64; 2], spacing: [f64; 2], half: usize, dt: f64) -> Result<Grid2D> {
    let n = 2 * half + 1;
    let gx = Grid1D::new(center[0] - half as f64 * spacing[0], spacing[0], n, dt)?;
    let gy = Grid1D::new(center[1] - half as f64 * spacing[1], spacing[1], n, dt)?;
    Grid2D::new(gx, gy)
}
