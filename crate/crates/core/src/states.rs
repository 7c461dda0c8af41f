//! Analytic Gaussian packets, the registered packet table, and Landau-level states.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{normalize, Grid, Grid1D, Grid2D, WaveField};
use crate::propagator::LandauState;
use crate::units::{mev, nm, HBAR, M_EFF, Q};

/// Boundary amplitude (relative to peak) a freshly built state must stay under.
pub const BOX_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketParams {
    /// Central kinetic energy (J).
    pub energy: f64,
    pub center: f64,
    pub sigma: f64,
}

impl PacketParams {
    pub fn new(energy: f64, center: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(energy >= 0.0) || !center.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "packet needs sigma > 0 and energy >= 0 (got sigma={sigma:e}, energy={energy:e})"
            )));
        }
        Ok(Self { energy, center, sigma })
    }

    pub fn k_c(&self) -> f64 {
        (2.0 * M_EFF * self.energy).sqrt() / HBAR
    }

    pub fn v_c(&self) -> f64 {
        HBAR * self.k_c() / M_EFF
    }

    /// Closed-form freely evolved amplitude at x after elapsed time tau.
    pub fn amplitude(&self, x: f64, tau: f64) -> Complex64 {
        let k = self.k_c();
        let s2 = Complex64::new(self.sigma * self.sigma, HBAR * tau / M_EFF);
        let pre = (self.sigma * self.sigma / PI).powf(0.25) / s2.sqrt();
        let u = x - self.center;
        let w = u - self.v_c() * tau;
        let carrier = Complex64::new(0.0, k * u - HBAR * k * k * tau / (2.0 * M_EFF));
        pre * (carrier - w * w / (2.0 * s2)).exp()
    }

    /// Spatial derivative of `amplitude`.
    pub fn amplitude_dx(&self, x: f64, tau: f64) -> Complex64 {
        let s2 = Complex64::new(self.sigma * self.sigma, HBAR * tau / M_EFF);
        let w = x - self.center - self.v_c() * tau;
        self.amplitude(x, tau) * (Complex64::new(0.0, self.k_c()) - w / s2)
    }
}

/// The packet evaluated on `grid` after `tau`, stamped with time `t`.
pub fn gaussian_field(p: &PacketParams, grid: Grid1D, t: f64, tau: f64) -> WaveField {
    WaveField::from_fn(Grid::One(grid), t, |x, _| p.amplitude(x, tau))
}

/// Two consecutive analytic snapshots (t_p, t_p + dt), each normalized on the grid.
pub fn gaussian_pair(p: &PacketParams, g: Grid1D, t_p: f64) -> Result<(WaveField, WaveField)> {
    let a = gaussian_field(p, g, t_p, 0.0);
    let b = gaussian_field(p, g, t_p + g.dt, g.dt);
    for f in [&a, &b] {
        let r = f.boundary_amplitude();
        if !(r < BOX_TOLERANCE) {
            return Err(Error::BoxTooSmall(r));
        }
    }
    Ok((normalize(&a)?, normalize(&b)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateId {
    Phi1,
    Phi2,
    Phi3,
    Phi4,
    Phi5,
}

impl FromStr for StateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_lowercase();
        let digits = t
            .trim_start_matches("phi")
            .trim_start_matches('φ')
            .trim_start_matches('Φ')
            .replace('₁', "1")
            .replace('₂', "2")
            .replace('₃', "3")
            .replace('₄', "4")
            .replace('₅', "5");
        match digits.as_str() {
            "1" => Ok(StateId::Phi1),
            "2" => Ok(StateId::Phi2),
            "3" => Ok(StateId::Phi3),
            "4" => Ok(StateId::Phi4),
            "5" => Ok(StateId::Phi5),
            _ => Err(Error::UnknownState(s.to_string())),
        }
    }
}

/// Registered packets: (E_c meV, x_c nm, sigma nm).
pub fn table2_state(id: StateId) -> PacketParams {
    let (e, x, s) = match id {
        StateId::Phi1 => (10.0, 400.0, 84.0),
        StateId::Phi2 => (5.0, 400.0, 5.0),
        StateId::Phi3 => (10.0, 400.0, 60.0),
        StateId::Phi4 => (5.0, 400.0, 40.0),
        StateId::Phi5 => (50.0, 200.0, 127.0),
    };
    PacketParams { energy: mev(e), center: nm(x), sigma: nm(s) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandauParams {
    pub b: f64,
    pub k_y: f64,
    /// c_n at t = 0, normalized; n_max = coeffs.len().
    pub coeffs: Vec<Complex64>,
}

impl LandauParams {
    pub fn new(b: f64, k_y: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        let s: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(b > 0.0) || !(s > 0.0) {
            return Err(Error::InvalidGrid("Landau state needs B > 0 and nonzero weights".into()));
        }
        Ok(Self { b, k_y, coeffs: coeffs.iter().map(|c| c / s).collect() })
    }

    pub fn equal_weights(b: f64, k_y: f64, n_max: usize) -> Result<Self> {
        Self::new(b, k_y, vec![Complex64::new(1.0, 0.0); n_max])
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len()
    }

    pub fn omega(&self) -> f64 {
        Q.abs() * self.b / M_EFF
    }

    pub fn l_b(&self) -> f64 {
        (HBAR / (Q.abs() * self.b)).sqrt()
    }

    pub fn x_y(&self) -> f64 {
        self.k_y * self.l_b() * self.l_b()
    }

    /// Oscillator center ħ k_y/(qB); equals −x_y for the (negative) electron charge.
    pub fn center(&self) -> f64 {
        HBAR * self.k_y / (Q * self.b)
    }

    pub fn energy(&self, n: usize) -> f64 {
        HBAR * self.omega() * (n as f64 + 0.5)
    }

    /// Half-width a grid must cover around the center for level n.
    pub fn extent(&self, n: usize) -> f64 {
        ((2.0 * n as f64 + 1.0).sqrt() + 6.0) * self.l_b()
    }
}

/// Normalized Hermite functions h_0..h_n at xi by the three-term recurrence.
pub fn hermite_functions(n: usize, xi: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(PI.powf(-0.25) * (-0.5 * xi * xi).exp());
    if n >= 1 {
        h.push(2f64.sqrt() * xi * h[0]);
    }
    for j in 1..n {
        let next = (2.0 / (j as f64 + 1.0)).sqrt() * xi * h[j] - (j as f64 / (j as f64 + 1.0)).sqrt() * h[j - 1];
        h.push(next);
    }
    h
}

/// x-profile of level n, normalized on the real line.
pub fn landau_profile(n: usize, lp: &LandauParams, x: f64) -> f64 {
    let l = lp.l_b();
    hermite_functions(n, (x - lp.center()) / l)[n] / l.sqrt()
}

pub(crate) fn check_landau_box(lp: &LandauParams, n: usize, g: &Grid1D) -> Result<()> {
    let c = lp.center();
    let half = lp.extent(n);
    if g.x0 > c - half || g.x_max() < c + half {
        let l = lp.l_b();
        let edge = ((g.x0 - c).abs()).min((g.x_max() - c).abs()) / l;
        let h = hermite_functions(n, edge);
        let peak = (0..400)
            .map(|i| hermite_functions(n, -8.0 + i as f64 * 0.04)[n].abs())
            .fold(0.0, f64::max);
        return Err(Error::BoxTooSmall(h[n].abs() / peak));
    }
    Ok(())
}

pub fn landau_eigenstate(n: usize, lp: &LandauParams, g2: Grid2D) -> Result<WaveField> {
    if n >= lp.n_max() {
        return Err(Error::UnknownState(format!("Landau level {n} (n_max = {})", lp.n_max())));
    }
    check_landau_box(lp, n, &g2.x)?;
    let ky = lp.k_y;
    let f = WaveField::from_fn(Grid::Two(g2), 0.0, |x, y| {
        Complex64::from_polar(landau_profile(n, lp, x), ky * y)
    });
    normalize(&f)
}

/// Weighted sum of the levels; the decomposition is kept for exact evolution.
pub fn landau_superposition(lp: &LandauParams, g2: Grid2D) -> Result<LandauState> {
    for n in 0..lp.n_max() {
        check_landau_box(lp, n, &g2.x)?;
    }
    Ok(LandauState::new(lp.clone(), g2))
}
