//! Reduced-scale invariant suites run by `weaklab check`.

use crate::bohmian::bohm_velocity;
use crate::error::Result;
use crate::fields::{normalize, Axis, Grid, Grid1D, Grid2D, WaveField};
use crate::gauge::{apply_gauge, remove_gauge, EmScenario, GaugeSpec};
use crate::operators::{
    apply, classify_numeric, commutes, gauge_class, heisenberg_rhs, GaugeClass, OperatorKind, OperatorSpec,
};
use crate::propagator::{packet_pair, Stepper};
use crate::states::{gaussian_field, table2_state, PacketParams, StateId};
use crate::units::{nm, HBAR, M_EFF, Q};
use crate::weakeval::{expectation, sum_identity, weak_value, PostState, PreState, SelectionPair};

use super::config::{ScenarioConfig, ScenarioKind};
use super::run::{derivative_checks, run_derivatives, CheckLine};

fn suite(name: &str, body: impl FnOnce() -> Result<(bool, String)>) -> CheckLine {
    match body() {
        Ok((ok, detail)) => CheckLine::new(name, ok, detail),
        Err(e) => CheckLine::new(name, false, format!("{e:?}")),
    }
}

fn grid(cfg: &ScenarioConfig) -> Result<Grid1D> {
    // Checks always run on the fig2 box, with the configured steps.
    let d = ScenarioConfig::defaults(ScenarioKind::Fig2a).grid;
    Grid1D::span(d.x_min, d.x_max, cfg.grid.dx, cfg.grid.dt)
}

const STEPS: usize = 2000;

fn norm_suite(cfg: &ScenarioConfig) -> CheckLine {
    suite("propagator norm conservation", || {
        let g = grid(cfg)?;
        let em = EmScenario::free();
        let stepper = Stepper::new(&em, None, g)?;
        let sp = packet_pair(&table2_state(StateId::Phi1), g, 0.0, &em, None)?;
        let mut log = crate::propagator::StepLog::default();
        stepper.run(&sp, STEPS, Some(&mut log), |_| Ok(()))?;
        let d = log.norm_drift();
        Ok((d < 1e-4, format!("drift {d:.3e} over {STEPS} steps (< 1e-4)")))
    })
}

fn gauge_suite(cfg: &ScenarioConfig) -> CheckLine {
    suite("gauge round trip", || {
        let g = grid(cfg)?;
        let em = EmScenario::free();
        let gs = GaugeSpec::cosine(0.7);
        let psi = gaussian_field(&table2_state(StateId::Phi1), g, 0.0, 0.0);
        let back = remove_gauge(&apply_gauge(&psi, &gs)?)?;
        let r0 = back.rel_l2(&psi)?;
        // Evolving in the gauge equals evolving in Coulomb and then re-gauging.
        let n = 200;
        let coul = Stepper::new(&em, None, g)?.evolve(&packet_pair(&table2_state(StateId::Phi1), g, 0.0, &em, None)?, n as f64 * g.dt)?;
        let gauged = Stepper::new(&em, Some(&gs), g)?.evolve(&packet_pair(&table2_state(StateId::Phi1), g, 0.0, &em, Some(&gs))?, n as f64 * g.dt)?;
        let r1 = remove_gauge(&gauged.cur)?.rel_l2(&coul.cur)?;
        Ok((r0 < 1e-12 && r1 < 1e-3, format!("round trip {r0:.2e} (< 1e-12), evolved {r1:.2e} (< 1e-3)")))
    })
}

fn continuity_suite(cfg: &ScenarioConfig) -> CheckLine {
    suite("continuity", || {
        let g = grid(cfg)?;
        let em = EmScenario::free();
        let stepper = Stepper::new(&em, None, g)?;
        let sp = packet_pair(&table2_state(StateId::Phi1), g, 0.0, &em, None)?;
        let x = OperatorSpec::new(OperatorKind::Position);
        let h = 10;
        let mid = stepper.evolve(&sp, h as f64 * g.dt)?;
        let end = stepper.evolve(&mid, h as f64 * g.dt)?;
        let dxdt = (expectation(&x, &end.cur, &em)? - expectation(&x, &sp.cur, &em)?) / (2.0 * h as f64 * g.dt);
        let v = bohm_velocity(&mid.cur, &em, Axis::X)?;
        let flux: f64 = mid.cur.amps.iter().zip(&v).map(|(a, v)| a.norm_sqr() * v.unwrap_or(0.0)).sum::<f64>() * g.dx;
        let r = (dxdt - flux).abs() / flux.abs();
        Ok((r < 1e-3, format!("d<X>/dt {dxdt:.6e} vs flux {flux:.6e}, rel {r:.2e} (< 1e-3)")))
    })
}

fn commutator_suite(cfg: &ScenarioConfig) -> CheckLine {
    suite("commutator oracle", || {
        let g = grid(cfg)?;
        let em = EmScenario::uniform_e(-1e6);
        let psi: WaveField = gaussian_field(&table2_state(StateId::Phi3), g, 0.0, 0.0);
        let op = OperatorSpec::new;
        let xa = commutes(&op(OperatorKind::Position), &op(OperatorKind::ScalarPotential), &psi, &em)?;
        let xe = commutes(&op(OperatorKind::Position), &op(OperatorKind::ElectricField), &psi, &em)?;
        let xv = commutes(&op(OperatorKind::Position), &op(OperatorKind::Velocity), &psi, &em)?;
        // ‖[X, V]ψ‖ = ħ/m ‖ψ‖.
        let r = (xv.residual / (HBAR / M_EFF) - 1.0).abs();
        let ok = xa.commutes && xe.commutes && !xv.commutes && r < 1e-3;
        Ok((ok, format!("[X,A_s] {:.1e}, [X,E] {:.1e}, |[X,V]|/(hbar/m) - 1 = {r:.1e} (< 1e-3)", xa.residual, xe.residual)))
    })
}

fn sum_identity_suite(cfg: &ScenarioConfig) -> CheckLine {
    suite("sum identity", || {
        let g = grid(cfg)?;
        let sel = SelectionPair::new(
            PreState::Packet { params: table2_state(StateId::Phi3), grid: g },
            PostState::Packet(table2_state(StateId::Phi4)),
            EmScenario::free(),
            Some(GaugeSpec::cosine(1.0)),
        );
        let (lhs, rhs) = sum_identity(&OperatorSpec::new(OperatorKind::Position), &sel)?;
        let r = (lhs - rhs).abs() / rhs.abs();
        Ok((r < 1e-6, format!("LHD+RHD {lhs:.6e} vs {rhs:.6e}, rel {r:.1e} (< 1e-6)")))
    })
}

/// The twelve operator kinds of the gauge-condition table.
pub const TABLE_KINDS: [OperatorKind; 12] = [
    OperatorKind::Position,
    OperatorKind::PositionY,
    OperatorKind::CanonicalMomentum,
    OperatorKind::Velocity,
    OperatorKind::VelocityY,
    OperatorKind::KineticEnergy,
    OperatorKind::Hamiltonian,
    OperatorKind::PositionProjector(400e-9),
    OperatorKind::ScalarPotential,
    OperatorKind::VectorPotential,
    OperatorKind::ElectricField,
    OperatorKind::MagneticField,
];

/// Narrow moving packet on a 5 pm mesh, where stencil error is far below the threshold.
fn fine_probe() -> Result<WaveField> {
    let g = Grid1D::span(nm(350.0), nm(450.0), nm(0.005), 1e-17)?;
    let p = PacketParams::new(table2_state(StateId::Phi1).energy, nm(400.0), nm(5.0))?;
    normalize(&gaussian_field(&p, g, 0.0, 0.0))
}

/// Localized 2D packet, so the rim stencils never see amplitude.
fn probe_2d(dx: f64, half: f64, sigma: f64, k: [f64; 2]) -> Result<WaveField> {
    let ax = Grid1D::span(-half, half, dx, 1e-17)?;
    let g = Grid2D::new(ax, ax)?;
    let f = WaveField::from_fn(Grid::Two(g), 0.0, |x, y| {
        let r2 = (x * x + y * y) / (2.0 * sigma * sigma);
        num_complex::Complex64::from_polar((-r2).exp(), k[0] * x + k[1] * y)
    });
    normalize(&f)
}

pub fn table_suite() -> CheckLine {
    suite("gauge classification table", || {
        let gs = GaugeSpec::cosine(0.7);
        let p1 = fine_probe()?;
        let e_em = EmScenario::uniform_e(-1e6);
        let p2 = probe_2d(nm(0.2), nm(30.0), nm(5.0), [1.3e8, 0.5e8])?;
        let b_em = EmScenario::landau(0.19);
        let mut wrong = Vec::new();
        let (mut worst_ok, mut least_bad) = (0.0f64, f64::INFINITY);
        for kind in TABLE_KINDS {
            let o = OperatorSpec::new(kind);
            let two_d = matches!(kind, OperatorKind::PositionY | OperatorKind::VelocityY | OperatorKind::MagneticField);
            let (c, r) = if two_d { classify_numeric(&o, &p2, &b_em, &gs)? } else { classify_numeric(&o, &p1, &e_em, &gs)? };
            match c {
                GaugeClass::Satisfies => worst_ok = worst_ok.max(r),
                GaugeClass::Violates => least_bad = least_bad.min(r),
            }
            if c != gauge_class(&o) {
                wrong.push(format!("{} ({r:.1e})", o.name()));
            }
        }
        let detail = if wrong.is_empty() {
            format!("12/12 match; largest covariant residual {worst_ok:.1e}, smallest violating {least_bad:.1e} (threshold 1e-6)")
        } else {
            format!("mismatched: {}", wrong.join(", "))
        };
        Ok((wrong.is_empty(), detail))
    })
}

fn rel_diff(a: &WaveField, b: &WaveField) -> Result<f64> {
    Ok(a.sub(b)?.norm() / b.norm())
}

pub fn position_identity_suite() -> CheckLine {
    suite("heisenberg derivative of position", || {
        let g = Grid1D::span(nm(200.0), nm(600.0), nm(0.1), 1e-17)?;
        let psi = normalize(&gaussian_field(&table2_state(StateId::Phi3), g, 0.0, 0.0))?;
        let x = OperatorSpec::new(OperatorKind::Position);
        let v = OperatorSpec::new(OperatorKind::Velocity);
        let mut worst = 0.0f64;
        for (em, gs) in [(EmScenario::free(), None), (EmScenario::uniform_e(-1e6), Some(GaugeSpec::cosine(2.0)))] {
            let f = match &gs {
                Some(g) => apply_gauge(&psi, g)?,
                None => psi.clone(),
            };
            worst = worst.max(rel_diff(&heisenberg_rhs(&x, &f, &em)?, &apply(&v, &f, Some(&em))?)?);
        }
        Ok((worst < 1e-3, format!("C(X) vs V, rel {worst:.1e} (< 1e-3), Coulomb and cosine gauge")))
    })
}

pub fn velocity_identity_suite() -> CheckLine {
    suite("heisenberg derivative of velocity", || {
        // Uniform E: C(V) = (q/m) E.
        let e = -1e6;
        let em = EmScenario::uniform_e(e);
        let g = Grid1D::span(nm(200.0), nm(600.0), nm(0.1), 1e-17)?;
        let psi = normalize(&gaussian_field(&table2_state(StateId::Phi3), g, 0.0, 0.0))?;
        let c = heisenberg_rhs(&OperatorSpec::new(OperatorKind::Velocity), &psi, &em)?;
        let r_e = rel_diff(&c, &psi.scale((Q * e / M_EFF).into()))?;
        // Uniform B along z: C(V_x) = (q/m) B V_y, C(V_y) = −(q/m) B V_x.
        let b = 0.19;
        let em = EmScenario::landau(b);
        let psi = probe_2d(nm(0.1), nm(60.0), nm(10.0), [1.3e8, 0.5e8])?;
        let w = Q * b / M_EFF;
        let vx = apply(&OperatorSpec::new(OperatorKind::Velocity), &psi, Some(&em))?;
        let vy = apply(&OperatorSpec::new(OperatorKind::VelocityY), &psi, Some(&em))?;
        let cx = heisenberg_rhs(&OperatorSpec::new(OperatorKind::Velocity), &psi, &em)?;
        let cy = heisenberg_rhs(&OperatorSpec::new(OperatorKind::VelocityY), &psi, &em)?;
        let r_bx = rel_diff(&cx, &vy.scale(w.into()))?;
        let r_by = rel_diff(&cy, &vx.scale((-w).into()))?;
        let worst = r_e.max(r_bx).max(r_by);
        Ok((worst < 1e-3, format!("uniform E rel {r_e:.1e}, uniform B rel {r_bx:.1e} / {r_by:.1e} (< 1e-3)")))
    })
}

pub fn hermiticity_suite(grid: Grid1D) -> CheckLine {
    suite("velocity weak value hermiticity", || {
        let v = OperatorSpec::new(OperatorKind::Velocity);
        let (narrow, wide) = (table2_state(StateId::Phi2), table2_state(StateId::Phi1));
        let sel = |pre: PacketParams, post: PacketParams| {
            SelectionPair::new(PreState::Packet { params: pre, grid }, PostState::Packet(post), EmScenario::free(), None)
        };
        let a = weak_value(&v, 0.0, 0.0, &sel(wide, narrow))?.real();
        let b = weak_value(&v, 0.0, 0.0, &sel(narrow, wide))?.real();
        let r = (a - b).abs() / a.abs();
        Ok((r < 1e-6, format!("W(V | x, v) {a:.6e} vs W(V | v, x) {b:.6e}, rel {r:.1e} (< 1e-6)")))
    })
}

/// Operator-level oracles: classification, Heisenberg identities, weak-value hermiticity.
pub fn operator_suites(grid: Grid1D) -> Vec<CheckLine> {
    vec![table_suite(), position_identity_suite(), velocity_identity_suite(), hermiticity_suite(grid)]
}

/// Gauge-dependence lines on a reduced fig2c sweep; the failures of the
/// theoretical derivatives are the expected outcome.
fn fig2c_lines(cfg: &ScenarioConfig) -> Vec<CheckLine> {
    let mut c = cfg.clone();
    c.stride_steps = vec![c.stride_steps[0]];
    c.trajectories = 1;
    c.t_end = c.grid.dt;
    match run_derivatives(&c) {
        Ok(run) => derivative_checks(ScenarioKind::Fig2c, &c, &run)
            .into_iter()
            .filter(|l| l.name.contains("gauge"))
            .collect(),
        Err(e) => vec![CheckLine::new("fig2c sweep", false, format!("{e:?}"))],
    }
}

pub fn self_check(cfg: &ScenarioConfig) -> Vec<CheckLine> {
    let mut out = vec![
        norm_suite(cfg),
        gauge_suite(cfg),
        continuity_suite(cfg),
        commutator_suite(cfg),
        sum_identity_suite(cfg),
    ];
    match grid(cfg) {
        Ok(g) => out.extend(operator_suites(g)),
        Err(e) => out.push(CheckLine::new("operator suites", false, format!("{e:?}"))),
    }
    if cfg.kind == ScenarioKind::Fig2c {
        out.extend(fig2c_lines(cfg));
    }
    out
}
