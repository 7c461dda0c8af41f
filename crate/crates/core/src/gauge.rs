//! Gauge functions, gauge transformations of states and potentials, and the
//! electromagnetic scenarios whose E and B every gauge shares.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::WaveField;
use crate::units::{HBAR, Q};

pub const DEFAULT_G0: f64 = 1e-14;
pub const DEFAULT_KG: f64 = 8e6;
pub const DEFAULT_WG: f64 = 1e13;

/// A user-supplied gauge function with analytic first derivatives.
pub trait GaugeFunction: Send + Sync {
    fn g(&self, x: f64, t: f64) -> f64;
    fn dg_dx(&self, x: f64, t: f64) -> f64;
    fn d2g_dx2(&self, x: f64, t: f64) -> f64;
    fn dg_dt(&self, x: f64, t: f64) -> f64;
    fn d2g_dxdt(&self, x: f64, t: f64) -> f64;
}

#[derive(Clone)]
pub struct CustomGauge {
    pub label: String,
    pub scale: f64,
    pub func: Arc<dyn GaugeFunction>,
}

impl fmt::Debug for CustomGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomGauge({}, scale={})", self.label, self.scale)
    }
}

/// g(x,t); x is the only spatial coordinate a gauge may depend on.
#[derive(Debug, Clone)]
pub enum GaugeSpec {
    /// g0 cos(kg x + wg t + theta), g0 in V·s.
    Cosine { g0: f64, kg: f64, wg: f64, theta: f64 },
    Custom(CustomGauge),
}

impl PartialEq for GaugeSpec {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (
                GaugeSpec::Cosine { g0, kg, wg, theta },
                GaugeSpec::Cosine { g0: a, kg: b, wg: c, theta: d },
            ) => g0 == a && kg == b && wg == c && theta == d,
            (GaugeSpec::Custom(a), GaugeSpec::Custom(b)) => {
                a.label == b.label && a.scale == b.scale && Arc::ptr_eq(&a.func, &b.func)
            }
            _ => false,
        }
    }
}

impl GaugeSpec {
    pub fn cosine(theta: f64) -> Self {
        GaugeSpec::Cosine { g0: DEFAULT_G0, kg: DEFAULT_KG, wg: DEFAULT_WG, theta }
    }

    pub fn custom(label: impl Into<String>, func: Arc<dyn GaugeFunction>) -> Self {
        GaugeSpec::Custom(CustomGauge { label: label.into(), scale: 1.0, func })
    }

    /// The gauge -g, which undoes this one.
    pub fn negated(&self) -> Self {
        match self {
            GaugeSpec::Cosine { g0, kg, wg, theta } => {
                GaugeSpec::Cosine { g0: -g0, kg: *kg, wg: *wg, theta: *theta }
            }
            GaugeSpec::Custom(c) => GaugeSpec::Custom(CustomGauge { scale: -c.scale, ..c.clone() }),
        }
    }

    pub fn g(&self, x: f64, t: f64) -> f64 {
        match self {
            GaugeSpec::Cosine { g0, kg, wg, theta } => g0 * (kg * x + wg * t + theta).cos(),
            GaugeSpec::Custom(c) => c.scale * c.func.g(x, t),
        }
    }

    pub fn dg_dx(&self, x: f64, t: f64) -> f64 {
        match self {
            GaugeSpec::Cosine { g0, kg, wg, theta } => -g0 * kg * (kg * x + wg * t + theta).sin(),
            GaugeSpec::Custom(c) => c.scale * c.func.dg_dx(x, t),
        }
    }

    pub fn d2g_dx2(&self, x: f64, t: f64) -> f64 {
        match self {
            GaugeSpec::Cosine { g0, kg, wg, theta } => -g0 * kg * kg * (kg * x + wg * t + theta).cos(),
            GaugeSpec::Custom(c) => c.scale * c.func.d2g_dx2(x, t),
        }
    }

    pub fn dg_dt(&self, x: f64, t: f64) -> f64 {
        match self {
            GaugeSpec::Cosine { g0, kg, wg, theta } => -g0 * wg * (kg * x + wg * t + theta).sin(),
            GaugeSpec::Custom(c) => c.scale * c.func.dg_dt(x, t),
        }
    }

    pub fn d2g_dxdt(&self, x: f64, t: f64) -> f64 {
        match self {
            GaugeSpec::Cosine { g0, kg, wg, theta } => -g0 * kg * wg * (kg * x + wg * t + theta).cos(),
            GaugeSpec::Custom(c) => c.scale * c.func.d2g_dxdt(x, t),
        }
    }

    pub fn d2g_dt2(&self, x: f64, t: f64) -> f64 {
        match self {
            GaugeSpec::Cosine { g0, kg, wg, theta } => -g0 * wg * wg * (kg * x + wg * t + theta).cos(),
            GaugeSpec::Custom(c) => {
                let h = 1e-18;
                c.scale * (c.func.dg_dt(x, t + h) - c.func.dg_dt(x, t - h)) / (2.0 * h)
            }
        }
    }

    /// Local phase factor exp(i q g / ħ).
    pub fn phase(&self, x: f64, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, Q * self.g(x, t) / HBAR)
    }
}

/// Gauge function sampled on a regular (t, x) table, bilinearly interpolated.
/// Each table is indexed `[it * nx + ix]`.
#[derive(Debug, Clone)]
pub struct TabulatedGauge {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
    pub g: Vec<f64>,
    pub g_x: Vec<f64>,
    pub g_xx: Vec<f64>,
    pub g_t: Vec<f64>,
    pub g_xt: Vec<f64>,
}

impl TabulatedGauge {
    fn lookup(&self, table: &[f64], x: f64, t: f64) -> f64 {
        let cell = |v: f64, v0: f64, h: f64, n: usize| {
            let s = ((v - v0) / h).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n.saturating_sub(2));
            (i, s - i as f64)
        };
        let (ix, wx) = cell(x, self.x0, self.dx, self.nx);
        let (it, wt) = cell(t, self.t0, self.dt, self.nt);
        let at = |i: usize, j: usize| table[(i.min(self.nt - 1)) * self.nx + j.min(self.nx - 1)];
        let lo = at(it, ix) * (1.0 - wx) + at(it, ix + 1) * wx;
        let hi = at(it + 1, ix) * (1.0 - wx) + at(it + 1, ix + 1) * wx;
        lo * (1.0 - wt) + hi * wt
    }
}

impl GaugeFunction for TabulatedGauge {
    fn g(&self, x: f64, t: f64) -> f64 {
        self.lookup(&self.g, x, t)
    }
    fn dg_dx(&self, x: f64, t: f64) -> f64 {
        self.lookup(&self.g_x, x, t)
    }
    fn d2g_dx2(&self, x: f64, t: f64) -> f64 {
        self.lookup(&self.g_xx, x, t)
    }
    fn dg_dt(&self, x: f64, t: f64) -> f64 {
        self.lookup(&self.g_t, x, t)
    }
    fn d2g_dxdt(&self, x: f64, t: f64) -> f64 {
        self.lookup(&self.g_xt, x, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Free,
    /// Uniform E along x (V/m), scalar potential -E x.
    UniformE { e: f64 },
    /// Uniform B along z (T), Landau gauge A = (0, x B).
    Landau { b: f64 },
}

/// Potentials of a scenario, possibly re-expressed through a chain of gauges.
#[derive(Debug, Clone, PartialEq)]
pub struct EmScenario {
    pub kind: FieldKind,
    pub gauges: Vec<GaugeSpec>,
}

impl EmScenario {
    pub fn free() -> Self {
        Self { kind: FieldKind::Free, gauges: Vec::new() }
    }

    pub fn uniform_e(e: f64) -> Self {
        Self { kind: FieldKind::UniformE { e }, gauges: Vec::new() }
    }

    pub fn landau(b: f64) -> Self {
        Self { kind: FieldKind::Landau { b }, gauges: Vec::new() }
    }

    pub fn descriptor(&self) -> &'static str {
        match self.kind {
            FieldKind::Free => "free",
            FieldKind::UniformE { .. } => "uniform-E",
            FieldKind::Landau { .. } => "landau-B",
        }
    }

    pub fn is_coulomb(&self) -> bool {
        self.gauges.is_empty()
    }

    /// The scenario as seen by a field tagged with `tag`.
    pub fn in_gauge(&self, tag: Option<&GaugeSpec>) -> Result<EmScenario> {
        match tag {
            None => Ok(self.clone()),
            Some(_) if !self.gauges.is_empty() => Err(Error::GaugeMixing),
            Some(g) => Ok(transform_potentials(self, g)),
        }
    }

    /// Vector potential (A_x, A_y).
    pub fn a(&self, x: f64, _y: f64, t: f64) -> [f64; 2] {
        let mut a = match self.kind {
            FieldKind::Landau { b } => [0.0, x * b],
            _ => [0.0, 0.0],
        };
        for g in &self.gauges {
            a[0] += g.dg_dx(x, t);
        }
        a
    }

    pub fn a_s(&self, x: f64, _y: f64, t: f64) -> f64 {
        let mut v = match self.kind {
            FieldKind::UniformE { e } => -e * x,
            _ => 0.0,
        };
        for g in &self.gauges {
            v -= g.dg_dt(x, t);
        }
        v
    }

    pub fn da_s_dt(&self, x: f64, _y: f64, t: f64) -> f64 {
        self.gauges.iter().map(|g| -g.d2g_dt2(x, t)).sum()
    }

    pub fn grad_a_s(&self, x: f64, _y: f64, t: f64) -> [f64; 2] {
        let mut d = match self.kind {
            FieldKind::UniformE { e } => [-e, 0.0],
            _ => [0.0, 0.0],
        };
        for g in &self.gauges {
            d[0] -= g.d2g_dxdt(x, t);
        }
        d
    }

    pub fn da_dt(&self, x: f64, _y: f64, t: f64) -> [f64; 2] {
        let mut d = [0.0, 0.0];
        for g in &self.gauges {
            d[0] += g.d2g_dxdt(x, t);
        }
        d
    }

    /// z-component of ∇×A. Gauge terms depend on x only, so their curl vanishes identically.
    pub fn curl_a(&self, _x: f64, _y: f64, _t: f64) -> f64 {
        match self.kind {
            FieldKind::Landau { b } => b,
            _ => 0.0,
        }
    }

    /// E = −∇A_s − ∂A/∂t from the (possibly transformed) potentials.
    pub fn e_field(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let g = self.grad_a_s(x, y, t);
        let d = self.da_dt(x, y, t);
        [-g[0] - d[0], -g[1] - d[1]]
    }

    pub fn b_field(&self, x: f64, y: f64, t: f64) -> f64 {
        self.curl_a(x, y, t)
    }

    /// True when the potentials carry explicit time dependence.
    pub fn time_dependent(&self) -> bool {
        !self.gauges.is_empty()
    }
}

/// A^g = A + ∇g, A_s^g = A_s − ∂g/∂t.
pub fn transform_potentials(em: &EmScenario, gs: &GaugeSpec) -> EmScenario {
    let mut out = em.clone();
    out.gauges.push(gs.clone());
    out
}

/// ψ^g = exp(i q g/ħ) ψ at ψ.t.
pub fn apply_gauge(psi: &WaveField, gs: &GaugeSpec) -> Result<WaveField> {
    if psi.gauge.is_some() {
        return Err(Error::GaugeMixing);
    }
    let mut out = multiply_phase(psi, gs, 1.0);
    out.gauge = Some(gs.clone());
    Ok(out)
}

/// Back to the Coulomb gauge with the conjugate phase.
pub fn remove_gauge(psi: &WaveField) -> Result<WaveField> {
    let gs = psi.gauge.as_ref().ok_or(Error::GaugeMixing)?;
    let mut out = multiply_phase(psi, gs, -1.0);
    out.gauge = None;
    Ok(out)
}

fn multiply_phase(psi: &WaveField, gs: &GaugeSpec, sign: f64) -> WaveField {
    let amps = psi
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let (x, _) = psi.grid.coords(i);
            let p = gs.phase(x, psi.t);
            a * Complex64::new(p.re, sign * p.im)
        })
        .collect();
    psi.with_amps(amps)
}

pub fn theta_sweep(thetas: &[f64]) -> Vec<GaugeSpec> {
    thetas.iter().map(|&t| GaugeSpec::cosine(t)).collect()
}

/// `n` equally spaced angles in [0, 2π).
pub fn default_thetas(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * std::f64::consts::PI * i as f64 / n as f64).collect()
}
