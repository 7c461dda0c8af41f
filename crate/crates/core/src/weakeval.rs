//! Expectation values, two-interval weak values and their time derivatives.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{inner, normalize, Grid, Grid1D, WaveField};
use crate::gauge::{apply_gauge, EmScenario, GaugeSpec};
use crate::operators::{apply, gauge_class, heisenberg_rhs, GaugeClass, OperatorKind, OperatorSpec};
use crate::propagator::{packet_pair, steps_for, window_grid, Analytic2D, StatePair, Stepper};
use crate::states::{gaussian_field, PacketParams};
use crate::units::HBAR;

/// Denominator health below which a sample is flagged.
pub const DENOM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValueSample {
    pub op: OperatorSpec,
    pub t_l: f64,
    pub t_r: f64,
    /// Full complex ratio; the weak value proper is the real part.
    pub value: Complex64,
    pub denom_mag: f64,
    pub flagged: bool,
}

impl WeakValueSample {
    pub fn real(&self) -> f64 {
        self.value.re
    }
}

/// How the pre-selected state is prepared and evolved.
#[derive(Debug, Clone)]
pub enum PreState {
    /// Analytic packet prepared at t = 0 on a 1D grid, evolved by the stepper.
    Packet { params: PacketParams, grid: Grid1D },
    /// A prepared pair (Coulomb gauge); its `cur` time is the preparation time.
    Pair(StatePair),
    /// Exact 2D dynamics prepared at `t0`; fields are built on small windows
    /// around the post-selected point with the given node spacing.
    Analytic { state: Arc<Analytic2D>, t0: f64, spacing: [f64; 2], dt: f64, peak: f64 },
}

pub type Track = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Post-selection recipe, instantiated (never evolved) at its own time.
#[derive(Clone)]
pub enum PostState {
    Packet(PacketParams),
    Point(Vec<f64>),
    /// Arbitrary Coulomb-gauge field on the pre-state grid.
    Field(WaveField),
    /// Point that depends on t_R (used to follow a trajectory).
    Tracked(Track),
}

impl fmt::Debug for PostState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PostState::Packet(p) => write!(f, "Packet({p:?})"),
            PostState::Point(p) => write!(f, "Point({p:?})"),
            PostState::Field(_) => write!(f, "Field(..)"),
            PostState::Tracked(_) => write!(f, "Tracked(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelectionPair {
    pub pre: PreState,
    pub post: PostState,
    /// Coulomb-gauge scenario.
    pub em: EmScenario,
    pub gauge: Option<GaugeSpec>,
}

/// Field maps whose images are evolved to build numerators.
#[derive(Debug, Clone, Copy)]
enum Map {
    Op(OperatorSpec),
    Heis(OperatorSpec),
    /// outer(inner ψ)
    Compose(OperatorSpec, OperatorSpec),
}

struct Overlaps {
    nums: Vec<Complex64>,
    den: Complex64,
    health: f64,
}

const HAMILTONIAN: OperatorSpec = OperatorSpec::new(OperatorKind::Hamiltonian);
const IDENTITY: OperatorSpec = OperatorSpec::new(OperatorKind::Identity);

impl SelectionPair {
    pub fn new(pre: PreState, post: PostState, em: EmScenario, gauge: Option<GaugeSpec>) -> Self {
        Self { pre, post, em, gauge }
    }

    fn map_field(&self, m: &Map, psi: &WaveField) -> Result<WaveField> {
        match m {
            Map::Op(o) => apply(o, psi, Some(&self.em)),
            Map::Heis(o) => heisenberg_rhs(o, psi, &self.em),
            Map::Compose(outer, inner_op) => apply(outer, &apply(inner_op, psi, Some(&self.em))?, Some(&self.em)),
        }
    }

    fn post_point(&self, t_r: f64) -> Option<Vec<f64>> {
        match &self.post {
            PostState::Point(p) => Some(p.clone()),
            PostState::Tracked(f) => Some(f(t_r)),
            _ => None,
        }
    }

    fn gauged(&self, f: WaveField) -> Result<WaveField> {
        match &self.gauge {
            Some(g) => apply_gauge(&f, g),
            None => Ok(f),
        }
    }

    fn bra_1d(&self, grid: Grid1D, t: f64, t_r: f64) -> Result<WaveField> {
        let g = Grid::One(grid);
        let f = match &self.post {
            PostState::Packet(p) => normalize(&gaussian_field(p, grid, t, 0.0))?,
            PostState::Field(f) => {
                if f.grid != g {
                    return Err(Error::GridMismatch);
                }
                if f.gauge.is_some() {
                    return Err(Error::GaugeMixing);
                }
                WaveField { t, ..f.clone() }
            }
            PostState::Point(_) | PostState::Tracked(_) => {
                let x = self.post_point(t_r).unwrap()[0];
                let (k, w) = grid.locate(x).ok_or_else(|| Error::Unsupported(format!("post point {x:e} m off grid")))?;
                let mut f = WaveField::zeros(g, t);
                f.amps[k] = Complex64::new((1.0 - w) / grid.dx, 0.0);
                f.amps[k + 1] += Complex64::new(w / grid.dx, 0.0);
                f
            }
        };
        self.gauged(f)
    }

    fn is_point(&self) -> bool {
        matches!(self.post, PostState::Point(_) | PostState::Tracked(_))
    }

    fn overlaps(&self, maps: &[Map], t_l: f64, t_r: f64) -> Result<Overlaps> {
        match &self.pre {
            PreState::Packet { params, grid } => {
                let sp = packet_pair(params, *grid, 0.0, &self.em, self.gauge.as_ref())?;
                self.overlaps_fd(sp, maps, t_l, t_r)
            }
            PreState::Pair(sp) => {
                let sp = match &self.gauge {
                    Some(g) => StatePair::new(apply_gauge(&sp.prev, g)?, apply_gauge(&sp.cur, g)?)?,
                    None => sp.clone(),
                };
                self.overlaps_fd(sp, maps, t_l, t_r)
            }
            PreState::Analytic { state, t0, spacing, dt, peak } => {
                if self.gauge.is_some() {
                    return Err(Error::Unsupported("gauged analytic 2D evolution".into()));
                }
                let p = self
                    .post_point(t_r)
                    .ok_or_else(|| Error::Unsupported("2D post-selection must be a point".into()))?;
                let win = window_grid([p[0], p[1]], *spacing, 2, *dt)?;
                let center = win.index(2, 2);
                let (ta, tt) = (t0 + t_r, t0 + t_r + t_l);
                let mut nums = Vec::with_capacity(maps.len());
                for m in maps {
                    let Map::Op(o) = m else {
                        return Err(Error::Unsupported("derived maps in the analytic 2D evolution".into()));
                    };
                    nums.push(state.applied_on(o, win, ta, tt)?.amps[center]);
                }
                let den = state.value(p[0], p[1], tt);
                Ok(Overlaps { nums, den, health: den.norm() / peak })
            }
        }
    }

    fn overlaps_fd(&self, sp: StatePair, maps: &[Map], t_l: f64, t_r: f64) -> Result<Overlaps> {
        let grid = sp.grid();
        let st = Stepper::new(&self.em, self.gauge.as_ref(), grid)?;
        let psi_r = st.evolve(&sp, t_r)?.cur;
        let n_l = steps_for(t_l, grid.dt)?;
        let forward = |f: WaveField| -> Result<WaveField> {
            if n_l == 0 {
                Ok(f)
            } else {
                Ok(st.evolve(&st.bootstrap(&f)?, t_l)?.cur)
            }
        };
        let t_bra = psi_r.t + n_l as f64 * grid.dt;
        let bra = self.bra_1d(grid, t_bra, t_r)?;
        let den_field = forward(psi_r.clone())?;
        let den = inner(&bra, &den_field)?;
        let health = if self.is_point() {
            den.norm() / den_field.peak()
        } else {
            den.norm() / (bra.norm() * den_field.norm())
        };
        let mut nums = Vec::with_capacity(maps.len());
        for m in maps {
            let f = forward(self.map_field(m, &psi_r)?)?;
            nums.push(inner(&bra, &f)?);
        }
        Ok(Overlaps { nums, den, health })
    }
}

fn sample(op: OperatorSpec, t_l: f64, t_r: f64, value: Complex64, health: f64) -> WeakValueSample {
    WeakValueSample { op, t_l, t_r, value, denom_mag: health, flagged: !(health >= DENOM_TOLERANCE) }
}

/// Re⟨ψ|O|ψ⟩ for a normalized ψ; fails if a gauge-covariant operator shows a
/// non-Hermitian residue.
pub fn expectation(o: &OperatorSpec, psi: &WaveField, em: &EmScenario) -> Result<f64> {
    let opsi = apply(o, psi, Some(em))?;
    let v = inner(psi, &opsi)?;
    if gauge_class(o) == GaugeClass::Satisfies && v.im.abs() > 1e-8 * opsi.norm() * psi.norm() {
        return Err(Error::Unsupported(format!("{} is not Hermitian on this field (imag {:e})", o.name(), v.im)));
    }
    Ok(v.re)
}

/// Re{⟨f|U(t_L) O U(t_R)|ψ⟩ / ⟨f|U(t_L) U(t_R)|ψ⟩}, kept complex.
pub fn weak_value(o: &OperatorSpec, t_l: f64, t_r: f64, sel: &SelectionPair) -> Result<WeakValueSample> {
    let ov = sel.overlaps(&[Map::Op(*o)], t_l, t_r)?;
    Ok(sample(*o, t_l, t_r, ov.nums[0] / ov.den, ov.health))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    /// The W(C) contribution alone (theoretical derivatives only).
    pub c_term: f64,
    pub flagged: bool,
}

/// Left-hand derivative at the post-selection time, with both Hamiltonian cross terms.
pub fn lhd(o: &OperatorSpec, t_r: f64, sel: &SelectionPair) -> Result<Derivative> {
    let maps = [Map::Heis(*o), Map::Compose(*o, HAMILTONIAN), Map::Op(*o), Map::Op(HAMILTONIAN)];
    let ov = sel.overlaps(&maps, 0.0, t_r)?;
    let d = ov.den;
    let c = ov.nums[0] / d;
    let cross = Complex64::i() / HBAR * (ov.nums[1] / d - ov.nums[2] * ov.nums[3] / (d * d));
    Ok(Derivative { value: (c + cross).re, c_term: c.re, flagged: ov.health < DENOM_TOLERANCE })
}

/// Right-hand derivative at the pre-selection time, with both Hamiltonian cross terms.
pub fn rhd(o: &OperatorSpec, t_l: f64, sel: &SelectionPair) -> Result<Derivative> {
    let maps = [Map::Heis(*o), Map::Compose(HAMILTONIAN, *o), Map::Op(*o), Map::Op(HAMILTONIAN)];
    let ov = sel.overlaps(&maps, t_l, 0.0)?;
    let d = ov.den;
    let c = ov.nums[0] / d;
    let cross = -Complex64::i() / HBAR * (ov.nums[1] / d - ov.nums[2] * ov.nums[3] / (d * d));
    Ok(Derivative { value: (c + cross).re, c_term: c.re, flagged: ov.health < DENOM_TOLERANCE })
}

fn fd(a: &WeakValueSample, b: &WeakValueSample, h: f64) -> Derivative {
    Derivative { value: (a.real() - b.real()) / h, c_term: f64::NAN, flagged: a.flagged || b.flagged }
}

/// [W(O,0,t_R) − W(O,t_L,t_R)] / t_L.
pub fn fdlhd(o: &OperatorSpec, t_l: f64, t_r: f64, sel: &SelectionPair) -> Result<Derivative> {
    if t_l <= 0.0 {
        return Err(Error::BadDuration(t_l));
    }
    Ok(fd(&weak_value(o, 0.0, t_r, sel)?, &weak_value(o, t_l, t_r, sel)?, t_l))
}

/// [W(O,t_L,t_R) − W(O,t_L,0)] / t_R.
pub fn fdrhd(o: &OperatorSpec, t_l: f64, t_r: f64, sel: &SelectionPair) -> Result<Derivative> {
    if t_r <= 0.0 {
        return Err(Error::BadDuration(t_r));
    }
    Ok(fd(&weak_value(o, t_l, t_r, sel)?, &weak_value(o, t_l, 0.0, sel)?, t_r))
}

/// (LHD at t_R = 0 + RHD at t_L = 0, W(C,0,0) + ⟨∂O/∂t⟩_w).
pub fn sum_identity(o: &OperatorSpec, sel: &SelectionPair) -> Result<(f64, f64)> {
    let l = lhd(o, 0.0, sel)?;
    let r = rhd(o, 0.0, sel)?;
    // W(C) already carries ∂O/∂t, so the right side is W(C) plus W(∂O/∂t)
    // = 2 W(C) − W((i/ħ)[H,O]).
    let ov = sel.overlaps(&[Map::Heis(*o), Map::Compose(HAMILTONIAN, *o), Map::Compose(*o, HAMILTONIAN)], 0.0, 0.0)?;
    let c = ov.nums[0] / ov.den;
    let comm = Complex64::i() / HBAR * (ov.nums[1] - ov.nums[2]) / ov.den;
    Ok((l.value + r.value, (2.0 * c - comm).re))
}

/// ∂/∂t_R of the FDLHD: [W(0,t_R) − W(t_L,t_R) − W(0,0) + W(t_L,0)] / (t_L t_R).
pub fn mixed_second_derivative(o: &OperatorSpec, t_l: f64, t_r: f64, sel: &SelectionPair) -> Result<Derivative> {
    if t_l <= 0.0 || t_r <= 0.0 {
        return Err(Error::BadDuration(t_l.min(t_r)));
    }
    let w = |a, b| weak_value(o, a, b, sel);
    let (w0r, wlr, w00, wl0) = (w(0.0, t_r)?, w(t_l, t_r)?, w(0.0, 0.0)?, w(t_l, 0.0)?);
    let value = (w0r.real() - wlr.real() - w00.real() + wl0.real()) / (t_l * t_r);
    let flagged = w0r.flagged || wlr.flagged || w00.flagged || wl0.flagged;
    Ok(Derivative { value, c_term: f64::NAN, flagged })
}

/// Identity weak value is 1; handy sanity probe for selections.
pub fn identity_weak_value(sel: &SelectionPair) -> Result<WeakValueSample> {
    weak_value(&IDENTITY, 0.0, 0.0, sel)
}
