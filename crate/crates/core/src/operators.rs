//! Grid actions of physical operators, Heisenberg derivatives and gauge classification.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{central_diff, Axis, WaveField};
use crate::gauge::{apply_gauge, EmScenario, GaugeSpec};
use crate::units::{HBAR, M_EFF, Q};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    Identity,
    Position,
    PositionY,
    CanonicalMomentum,
    Velocity,
    VelocityY,
    KineticEnergy,
    Hamiltonian,
    /// |x0⟩⟨x0| realized on the nearest grid column.
    PositionProjector(f64),
    ScalarPotential,
    VectorPotential,
    ElectricField,
    MagneticField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeClass {
    Satisfies,
    Violates,
}

impl OperatorSpec {
    pub const fn new(kind: OperatorKind) -> Self {
        Self { kind }
    }

    pub fn name(&self) -> &'static str {
        use OperatorKind::*;
        match self.kind {
            Identity => "identity",
            Position => "position",
            PositionY => "position-y",
            CanonicalMomentum => "canonical-momentum",
            Velocity => "velocity",
            VelocityY => "velocity-y",
            KineticEnergy => "kinetic-energy",
            Hamiltonian => "hamiltonian",
            PositionProjector(_) => "position-projector",
            ScalarPotential => "scalar-potential",
            VectorPotential => "vector-potential",
            ElectricField => "electric-field",
            MagneticField => "magnetic-field",
        }
    }

    pub fn needs_em(&self) -> bool {
        use OperatorKind::*;
        matches!(
            self.kind,
            Velocity | VelocityY | KineticEnergy | Hamiltonian | ScalarPotential | VectorPotential | ElectricField | MagneticField
        )
    }

    /// Explicit time dependence under the given potentials.
    pub fn time_dependent(&self, em: &EmScenario) -> bool {
        use OperatorKind::*;
        em.time_dependent()
            && matches!(self.kind, Velocity | VelocityY | KineticEnergy | Hamiltonian | ScalarPotential | VectorPotential)
    }
}

/// Gauge classification: does the operator transform as Ω^g = G Ω G†?
pub fn gauge_class(o: &OperatorSpec) -> GaugeClass {
    use OperatorKind::*;
    match o.kind {
        Identity | Position | PositionY | Velocity | VelocityY | KineticEnergy | PositionProjector(_)
        | ElectricField | MagneticField => GaugeClass::Satisfies,
        CanonicalMomentum | Hamiltonian | ScalarPotential | VectorPotential => GaugeClass::Violates,
    }
}

fn mul_pointwise(psi: &WaveField, f: impl Fn(f64, f64) -> f64) -> WaveField {
    let amps = psi
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let (x, y) = psi.grid.coords(i);
            a * f(x, y)
        })
        .collect();
    psi.with_amps(amps)
}

fn axis_of(psi: &WaveField, axis: Axis, name: &'static str) -> Result<()> {
    psi.grid.axis(axis).map(|_| ()).ok_or(Error::AxisUnavailable(name))
}

/// (−iħ∂_axis − q A_axis)/m* ψ with potentials already in ψ's gauge.
fn velocity(psi: &WaveField, em: &EmScenario, axis: Axis) -> Result<WaveField> {
    let d = central_diff(psi, axis)?;
    let c = axis as usize;
    let t = psi.t;
    let amps = d
        .iter()
        .zip(&psi.amps)
        .enumerate()
        .map(|(i, (dp, p))| {
            let (x, y) = psi.grid.coords(i);
            let a = em.a(x, y, t)[c];
            (Complex64::new(0.0, -HBAR) * dp - Q * a * p) / M_EFF
        })
        .collect();
    Ok(psi.with_amps(amps))
}

fn kinetic(psi: &WaveField, em: &EmScenario) -> Result<WaveField> {
    let mut out = WaveField { amps: vec![Complex64::new(0.0, 0.0); psi.amps.len()], ..psi.clone() };
    let axes: &[Axis] = if psi.grid.dims() == 2 { &[Axis::X, Axis::Y] } else { &[Axis::X] };
    for &ax in axes {
        let vv = velocity(&velocity(psi, em, ax)?, em, ax)?;
        for (o, v) in out.amps.iter_mut().zip(&vv.amps) {
            *o += 0.5 * M_EFF * v;
        }
    }
    Ok(out)
}

/// O ψ, using the potentials of ψ's gauge.
pub fn apply(o: &OperatorSpec, psi: &WaveField, em: Option<&EmScenario>) -> Result<WaveField> {
    use OperatorKind::*;
    let em = match (o.needs_em(), em) {
        (true, None) => return Err(Error::ContextRequired),
        (_, Some(e)) => Some(e.in_gauge(psi.gauge.as_ref())?),
        (false, None) => None,
    };
    let t = psi.t;
    match o.kind {
        Identity => Ok(psi.clone()),
        Position => Ok(mul_pointwise(psi, |x, _| x)),
        PositionY => {
            axis_of(psi, Axis::Y, "position-y")?;
            Ok(mul_pointwise(psi, |_, y| y))
        }
        CanonicalMomentum => {
            let d = central_diff(psi, Axis::X)?;
            Ok(psi.with_amps(d.iter().map(|v| v * Complex64::new(0.0, -HBAR)).collect()))
        }
        Velocity => velocity(psi, em.as_ref().unwrap(), Axis::X),
        VelocityY => {
            axis_of(psi, Axis::Y, "velocity-y")?;
            velocity(psi, em.as_ref().unwrap(), Axis::Y)
        }
        KineticEnergy => kinetic(psi, em.as_ref().unwrap()),
        Hamiltonian => {
            let em = em.unwrap();
            let mut w = kinetic(psi, &em)?;
            for (i, (o, p)) in w.amps.iter_mut().zip(&psi.amps).enumerate() {
                let (x, y) = psi.grid.coords(i);
                *o += Q * em.a_s(x, y, t) * p;
            }
            Ok(w)
        }
        PositionProjector(x0) => {
            let k0 = psi.grid.x_axis().nearest(x0);
            let ny = psi.amps.len() / psi.grid.x_axis().nx;
            let amps = psi
                .amps
                .iter()
                .enumerate()
                .map(|(i, a)| if i / ny == k0 { *a } else { Complex64::new(0.0, 0.0) })
                .collect();
            Ok(psi.with_amps(amps))
        }
        ScalarPotential => {
            let em = em.unwrap();
            Ok(mul_pointwise(psi, |x, y| em.a_s(x, y, t)))
        }
        VectorPotential => {
            let em = em.unwrap();
            Ok(mul_pointwise(psi, |x, y| em.a(x, y, t)[0]))
        }
        ElectricField => {
            let em = em.unwrap();
            Ok(mul_pointwise(psi, |x, y| em.e_field(x, y, t)[0]))
        }
        MagneticField => {
            let em = em.unwrap();
            Ok(mul_pointwise(psi, |x, y| em.b_field(x, y, t)))
        }
    }
}

/// (∂O/∂t) ψ from the analytic time derivative of the potentials.
fn explicit_time_derivative(o: &OperatorSpec, psi: &WaveField, em: &EmScenario) -> Result<WaveField> {
    use OperatorKind::*;
    let em_g = em.in_gauge(psi.gauge.as_ref())?;
    let t = psi.t;
    let em_ref = &em_g;
    let dv = |axis: usize| move |x: f64, y: f64| -Q / M_EFF * em_ref.da_dt(x, y, t)[axis];
    match o.kind {
        Velocity => Ok(mul_pointwise(psi, dv(0))),
        VelocityY => Ok(mul_pointwise(psi, dv(1))),
        KineticEnergy | Hamiltonian => {
            let axes: &[Axis] = if psi.grid.dims() == 2 { &[Axis::X, Axis::Y] } else { &[Axis::X] };
            let mut out = psi.scale(Complex64::new(0.0, 0.0));
            for &ax in axes {
                let d = dv(ax as usize);
                let a = velocity(&mul_pointwise(psi, d), &em_g, ax)?;
                let b = mul_pointwise(&velocity(psi, &em_g, ax)?, d);
                for (o, (p, q)) in out.amps.iter_mut().zip(a.amps.iter().zip(&b.amps)) {
                    *o += 0.5 * M_EFF * (p + q);
                }
            }
            if o.kind == Hamiltonian {
                let s = mul_pointwise(psi, |x, y| Q * em_g.da_s_dt(x, y, t));
                out = out.add(&s)?;
            }
            Ok(out)
        }
        ScalarPotential => Ok(mul_pointwise(psi, |x, y| em_g.da_s_dt(x, y, t))),
        VectorPotential => Ok(mul_pointwise(psi, |x, y| em_g.da_dt(x, y, t)[0])),
        _ => Ok(psi.scale(Complex64::new(0.0, 0.0))),
    }
}

/// C ψ = (i/ħ)(H O ψ − O H ψ) + (∂O/∂t) ψ.
pub fn heisenberg_rhs(o: &OperatorSpec, psi: &WaveField, em: &EmScenario) -> Result<WaveField> {
    let h = OperatorSpec::new(OperatorKind::Hamiltonian);
    let ho = apply(&h, &apply(o, psi, Some(em))?, Some(em))?;
    let oh = apply(o, &apply(&h, psi, Some(em))?, Some(em))?;
    let c = ho.sub(&oh)?.scale(Complex64::new(0.0, 1.0 / HBAR));
    if o.time_dependent(&em.in_gauge(psi.gauge.as_ref())?) {
        c.add(&explicit_time_derivative(o, psi, em)?)
    } else {
        Ok(c)
    }
}

/// Dimensionless ‖O^g ψ^g − G O ψ‖ / max(‖O^g ψ^g‖, ‖G O ψ‖) for a Coulomb-gauge probe.
pub fn gauge_residual(o: &OperatorSpec, probe: &WaveField, em: &EmScenario, gs: &GaugeSpec) -> Result<f64> {
    let in_gauge = apply(o, &apply_gauge(probe, gs)?, Some(em))?;
    let conj = apply_gauge(&apply(o, probe, Some(em))?, gs)?;
    let scale = in_gauge.norm().max(conj.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(in_gauge.sub(&conj)?.norm() / scale)
}

pub const GAUGE_RESIDUAL_TOL: f64 = 1e-6;

/// Numeric counterpart of `gauge_class`.
pub fn classify_numeric(o: &OperatorSpec, probe: &WaveField, em: &EmScenario, gs: &GaugeSpec) -> Result<(GaugeClass, f64)> {
    let r = gauge_residual(o, probe, em, gs)?;
    let c = if r < GAUGE_RESIDUAL_TOL { GaugeClass::Satisfies } else { GaugeClass::Violates };
    Ok((c, r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Commutation {
    pub commutes: bool,
    pub residual: f64,
    pub scale: f64,
}

pub fn commutes(a: &OperatorSpec, b: &OperatorSpec, probe: &WaveField, em: &EmScenario) -> Result<Commutation> {
    let ab = apply(a, &apply(b, probe, Some(em))?, Some(em))?;
    let ba = apply(b, &apply(a, probe, Some(em))?, Some(em))?;
    let n = probe.norm();
    let residual = ab.sub(&ba)?.norm() / n;
    let scale = (apply(a, probe, Some(em))?.norm() / n) * (apply(b, probe, Some(em))?.norm() / n);
    Ok(Commutation { commutes: residual < 1e-6 * scale, residual, scale })
}
