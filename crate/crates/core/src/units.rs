//! Physical constants and unit conversions. Everything inside the crate is SI.

/// Electron charge as used throughout (C). Negative.
pub const Q: f64 = -1.6e-19;
pub const HBAR: f64 = 1.054571817e-34;
pub const M0: f64 = 9.1093837e-31;
/// GaAs effective mass.
pub const M_EFF: f64 = 0.067 * M0;

pub const NM: f64 = 1e-9;
pub const FS: f64 = 1e-15;
pub const PS: f64 = 1e-12;
/// Joules per meV.
pub const MEV: f64 = 1.602176634e-22;

pub fn nm(v: f64) -> f64 {
    v * NM
}

pub fn fs(v: f64) -> f64 {
    v * FS
}

pub fn mev(v: f64) -> f64 {
    v * MEV
}
