//! Grids, complex fields on them, quadrature and finite-difference stencils.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gauge::GaugeSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x0: f64,
    pub dx: f64,
    pub nx: usize,
    pub dt: f64,
}

impl Grid1D {
    pub fn new(x0: f64, dx: f64, nx: usize, dt: f64) -> Result<Self> {
        if !(dx > 0.0) || !(dt > 0.0) || nx < 3 || !x0.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need dx > 0, dt > 0, nx >= 3 (got dx={dx:e}, dt={dt:e}, nx={nx})"
            )));
        }
        Ok(Self { x0, dx, nx, dt })
    }

    /// Grid covering [x_min, x_max] with spacing close to `dx` hitting both ends.
    pub fn span(x_min: f64, x_max: f64, dx: f64, dt: f64) -> Result<Self> {
        if !(x_max > x_min) {
            return Err(Error::InvalidGrid(format!("empty range [{x_min:e}, {x_max:e}]")));
        }
        let nx = ((x_max - x_min) / dx).round() as usize + 1;
        Self::new(x_min, dx, nx, dt)
    }

    #[inline]
    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn len(&self) -> usize {
        self.nx
    }

    pub fn is_empty(&self) -> bool {
        self.nx == 0
    }

    /// Cell index `k` and fraction `w` with x = (1-w) x_k + w x_{k+1}; None outside.
    pub fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let s = (x - self.x0) / self.dx;
        if !(s >= 0.0) || s > (self.nx - 1) as f64 {
            return None;
        }
        let k = (s.floor() as usize).min(self.nx - 2);
        Some((k, s - k as f64))
    }

    pub fn nearest(&self, x: f64) -> usize {
        let s = ((x - self.x0) / self.dx).round();
        s.clamp(0.0, (self.nx - 1) as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x: Grid1D,
    pub y: Grid1D,
}

impl Grid2D {
    pub fn new(x: Grid1D, y: Grid1D) -> Result<Self> {
        if x.dt != y.dt {
            return Err(Error::InvalidGrid("axes must share dt".into()));
        }
        Ok(Self { x, y })
    }

    /// Row-major index: x is the slow axis.
    #[inline]
    pub fn index(&self, k: usize, l: usize) -> usize {
        k * self.y.nx + l
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Grid {
    One(Grid1D),
    Two(Grid2D),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::One(g) => g.nx,
            Grid::Two(g) => g.x.nx * g.y.nx,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dt(&self) -> f64 {
        match self {
            Grid::One(g) => g.dt,
            Grid::Two(g) => g.x.dt,
        }
    }

    /// Quadrature weight of one point.
    pub fn cell(&self) -> f64 {
        match self {
            Grid::One(g) => g.dx,
            Grid::Two(g) => g.x.dx * g.y.dx,
        }
    }

    pub fn x_axis(&self) -> &Grid1D {
        match self {
            Grid::One(g) => g,
            Grid::Two(g) => &g.x,
        }
    }

    pub fn axis(&self, axis: Axis) -> Option<&Grid1D> {
        match (self, axis) {
            (Grid::One(g), Axis::X) => Some(g),
            (Grid::Two(g), Axis::X) => Some(&g.x),
            (Grid::Two(g), Axis::Y) => Some(&g.y),
            (Grid::One(_), Axis::Y) => None,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Grid::One(_) => 1,
            Grid::Two(_) => 2,
        }
    }

    /// Coordinates of flat index `i`: (x, y) with y = 0 in 1D.
    #[inline]
    pub fn coords(&self, i: usize) -> (f64, f64) {
        match self {
            Grid::One(g) => (g.x(i), 0.0),
            Grid::Two(g) => (g.x.x(i / g.y.nx), g.y.x(i % g.y.nx)),
        }
    }
}

/// Complex amplitudes on a grid at one instant, tagged with the gauge they are expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub amps: Vec<Complex64>,
    pub t: f64,
    /// None is the Coulomb gauge.
    pub gauge: Option<GaugeSpec>,
}

impl WaveField {
    pub fn new(grid: Grid, amps: Vec<Complex64>, t: f64) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, amps, t, gauge: None })
    }

    pub fn zeros(grid: Grid, t: f64) -> Self {
        Self { grid, amps: vec![Complex64::new(0.0, 0.0); grid.len()], t, gauge: None }
    }

    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let amps = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.coords(i);
                f(x, y)
            })
            .collect();
        Self { grid, amps, t, gauge: None }
    }

    /// Same grid, time and gauge; new amplitudes.
    pub fn with_amps(&self, amps: Vec<Complex64>) -> Self {
        debug_assert_eq!(amps.len(), self.amps.len());
        Self { grid: self.grid, amps, t: self.t, gauge: self.gauge.clone() }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus on the outer rim, relative to the peak modulus.
    pub fn boundary_amplitude(&self) -> f64 {
        let peak = self.peak();
        if peak == 0.0 {
            return 0.0;
        }
        let rim = match &self.grid {
            Grid::One(g) => self.amps[0].norm().max(self.amps[g.nx - 1].norm()),
            Grid::Two(g) => {
                let (nx, ny) = (g.x.nx, g.y.nx);
                let mut m = 0.0f64;
                for k in 0..nx {
                    m = m.max(self.amps[g.index(k, 0)].norm()).max(self.amps[g.index(k, ny - 1)].norm());
                }
                for l in 0..ny {
                    m = m.max(self.amps[g.index(0, l)].norm()).max(self.amps[g.index(nx - 1, l)].norm());
                }
                m
            }
        };
        rim / peak
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.with_amps(self.amps.iter().map(|a| a * s).collect())
    }

    /// Pointwise sum; caller guarantees compatibility.
    pub fn add(&self, other: &WaveField) -> Result<Self> {
        check_compatible(self, other)?;
        Ok(self.with_amps(self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &WaveField) -> Result<Self> {
        check_compatible(self, other)?;
        Ok(self.with_amps(self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect()))
    }

    /// Relative L2 distance ‖self − other‖/‖other‖ (grids must agree; gauge/time ignored).
    pub fn rel_l2(&self, other: &WaveField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let d: f64 = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm_sqr()).sum();
        let n: f64 = other.amps.iter().map(|b| b.norm_sqr()).sum();
        Ok((d / n).sqrt())
    }
}

fn check_compatible(a: &WaveField, b: &WaveField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    if a.gauge != b.gauge {
        return Err(Error::GaugeMixing);
    }
    if !same_time(a.t, b.t, a.grid.dt()) {
        return Err(Error::TimeMismatch(a.t, b.t));
    }
    Ok(())
}

pub(crate) fn same_time(a: f64, b: f64, dt: f64) -> bool {
    (a - b).abs() <= 1e-6 * dt
}

/// Riemann-sum ⟨bra|ket⟩.
pub fn inner(bra: &WaveField, ket: &WaveField) -> Result<Complex64> {
    check_compatible(bra, ket)?;
    let s: Complex64 = bra.amps.iter().zip(&ket.amps).map(|(a, b)| a.conj() * b).sum();
    Ok(s * bra.grid.cell())
}

pub fn normalize(psi: &WaveField) -> Result<WaveField> {
    let n = psi.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok(psi.scale(Complex64::new(1.0 / n, 0.0)))
}

/// Second-order first derivative along `axis`; one-sided second-order stencils on the rim.
pub fn central_diff(psi: &WaveField, axis: Axis) -> Result<Vec<Complex64>> {
    let g = *psi.grid.axis(axis).ok_or(Error::AxisUnavailable("y-derivative"))?;
    if g.nx < 3 {
        return Err(Error::InvalidGrid("derivative needs at least 3 points".into()));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); psi.amps.len()];
    match (psi.grid, axis) {
        (Grid::One(_), _) => diff_line(&psi.amps, 1, 0, g.nx, g.dx, &mut out),
        (Grid::Two(g2), Axis::X) => {
            for l in 0..g2.y.nx {
                diff_line(&psi.amps, g2.y.nx, l, g.nx, g.dx, &mut out);
            }
        }
        (Grid::Two(g2), Axis::Y) => {
            for k in 0..g2.x.nx {
                diff_line(&psi.amps, 1, g2.index(k, 0), g.nx, g.dx, &mut out);
            }
        }
    }
    Ok(out)
}

fn diff_line(a: &[Complex64], stride: usize, start: usize, n: usize, h: f64, out: &mut [Complex64]) {
    let at = |k: usize| a[start + k * stride];
    let inv = 1.0 / (2.0 * h);
    out[start] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv;
    for k in 1..n - 1 {
        out[start + k * stride] = (at(k + 1) - at(k - 1)) * inv;
    }
    out[start + (n - 1) * stride] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv;
}
