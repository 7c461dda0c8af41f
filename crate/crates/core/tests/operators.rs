use num_complex::Complex64;
use proptest::prelude::*;

use weaklab::fields::{inner, normalize, Grid, Grid1D, Grid2D, WaveField};
use weaklab::gauge::{apply_gauge, EmScenario, GaugeSpec};
use weaklab::labcli::check::{operator_suites, TABLE_KINDS};
use weaklab::operators::{
    apply, classify_numeric, commutes, gauge_class, gauge_residual, heisenberg_rhs, GaugeClass, OperatorKind,
    OperatorSpec,
};
use weaklab::propagator::{evolve, packet_pair};
use weaklab::states::{gaussian_field, landau_eigenstate, table2_state, LandauParams, PacketParams, StateId};
use weaklab::units::{nm, FS, HBAR, M_EFF, NM, Q};
use weaklab::weakeval::expectation;

fn op(k: OperatorKind) -> OperatorSpec {
    OperatorSpec::new(k)
}

fn line_probe(dx: f64) -> WaveField {
    let g = Grid1D::span(nm(200.0), nm(600.0), dx, 0.01 * FS).unwrap();
    normalize(&gaussian_field(&table2_state(StateId::Phi3), g, 0.0, 0.0)).unwrap()
}

fn rel_diff(a: &WaveField, b: &WaveField) -> f64 {
    a.sub(b).unwrap().norm() / b.norm()
}

#[test]
fn operator_suites_pass_on_default_grid() {
    let g = Grid1D::span(nm(-400.0), nm(1200.0), nm(0.2), 0.01 * FS).unwrap();
    for line in operator_suites(g) {
        assert!(line.passed, "{line}");
    }
}

#[test]
fn table_kinds_cover_both_classes() {
    let sat = TABLE_KINDS.iter().filter(|k| gauge_class(&op(**k)) == GaugeClass::Satisfies).count();
    assert_eq!(sat, 8);
    assert_eq!(TABLE_KINDS.len() - sat, 4);
}

#[test]
fn momentum_residual_tracks_gauge_gradient() {
    let g = Grid1D::span(nm(350.0), nm(450.0), nm(0.005), 1e-17).unwrap();
    let p = PacketParams::new(0.0, nm(400.0), nm(5.0)).unwrap();
    let psi = normalize(&gaussian_field(&p, g, 0.0, 0.0)).unwrap();
    let gs = GaugeSpec::cosine(0.7);
    let em = EmScenario::free();
    let r = gauge_residual(&op(OperatorKind::CanonicalMomentum), &psi, &em, &gs).unwrap();
    // P ψ^g = G (P + q ∂g/∂x) ψ; for a real packet P ψ and q g' ψ are orthogonal.
    let pp = apply(&op(OperatorKind::CanonicalMomentum), &psi, None).unwrap().norm();
    let shift = WaveField::from_fn(psi.grid, 0.0, |x, _| (Q * gs.dg_dx(x, 0.0)).into());
    let qg = psi.amps.iter().zip(&shift.amps).map(|(a, s)| (a * s).norm_sqr()).sum::<f64>().sqrt() * g.dx.sqrt();
    let expected = qg / (pp * pp + qg * qg).sqrt();
    assert!((r / expected - 1.0).abs() < 1e-3, "{r} vs {expected}");
    let (c, _) = classify_numeric(&op(OperatorKind::CanonicalMomentum), &psi, &em, &gs).unwrap();
    assert_eq!(c, GaugeClass::Violates);
}

#[test]
fn velocity_is_covariant_on_fine_probe() {
    let g = Grid1D::span(nm(350.0), nm(450.0), nm(0.005), 1e-17).unwrap();
    let p = PacketParams::new(table2_state(StateId::Phi1).energy, nm(400.0), nm(5.0)).unwrap();
    let psi = normalize(&gaussian_field(&p, g, 0.0, 0.0)).unwrap();
    for th in [0.0, 1.0, 3.0, 5.5] {
        let r = gauge_residual(&op(OperatorKind::Velocity), &psi, &EmScenario::free(), &GaugeSpec::cosine(th)).unwrap();
        assert!(r < 1e-6, "theta {th}: {r:e}");
    }
}

#[test]
fn position_derivative_is_velocity() {
    let psi = line_probe(nm(0.1));
    let em = EmScenario::free();
    let r = rel_diff(&heisenberg_rhs(&op(OperatorKind::Position), &psi, &em).unwrap(), &apply(&op(OperatorKind::Velocity), &psi, Some(&em)).unwrap());
    assert!(r < 1e-3, "{r:e}");
}

#[test]
fn velocity_derivative_in_uniform_field_is_force() {
    let e = 2.5e5;
    let em = EmScenario::uniform_e(e);
    let psi = line_probe(nm(0.1));
    let c = heisenberg_rhs(&op(OperatorKind::Velocity), &psi, &em).unwrap();
    assert!(rel_diff(&c, &psi.scale((Q * e / M_EFF).into())) < 1e-3);
}

#[test]
fn kinetic_energy_derivative_is_field_work() {
    // (q/2)(E V + V E) = q E V for uniform E.
    let e = -1e6;
    let em = EmScenario::uniform_e(e);
    let psi = line_probe(nm(0.1));
    let c = heisenberg_rhs(&op(OperatorKind::KineticEnergy), &psi, &em).unwrap();
    let work = apply(&op(OperatorKind::Velocity), &psi, Some(&em)).unwrap().scale((Q * e).into());
    let r = rel_diff(&c, &work);
    assert!(r < 1e-3, "{r:e}");
}

#[test]
fn heisenberg_velocity_is_gauge_independent() {
    let psi = line_probe(nm(0.1));
    let em = EmScenario::uniform_e(-1e6);
    let gs = GaugeSpec::cosine(1.1);
    let c = heisenberg_rhs(&op(OperatorKind::Velocity), &psi, &em).unwrap();
    let cg = heisenberg_rhs(&op(OperatorKind::Velocity), &apply_gauge(&psi, &gs).unwrap(), &em).unwrap();
    let back = apply_gauge(&c, &gs).unwrap();
    // In the gauge, ∂V/∂t contributes −(q/m) ∂²g/∂x∂t, which restores the same force.
    assert!(rel_diff(&cg, &back) < 1e-3);
}

#[test]
fn hamiltonian_on_landau_eigenstate() {
    let lp = LandauParams::equal_weights(0.19, 0.0118 / NM, 3).unwrap();
    let gx = Grid1D::span(nm(-560.0), nm(480.0), nm(0.2), 1e-17).unwrap();
    let gy = Grid1D::span(nm(-4.0), nm(4.0), nm(0.2), 1e-17).unwrap();
    let g2 = Grid2D::new(gx, gy).unwrap();
    let em = EmScenario::landau(0.19);
    for n in 0..3 {
        let psi = landau_eigenstate(n, &lp, g2).unwrap();
        let h = apply(&op(OperatorKind::Hamiltonian), &psi, Some(&em)).unwrap();
        // Compare on the interior rows only; the y rim uses one-sided stencils.
        let ny = gy.nx;
        let (mut num, mut den) = (0.0, 0.0);
        for (i, (hv, p)) in h.amps.iter().zip(&psi.amps).enumerate() {
            let l = i % ny;
            if l == 0 || l == ny - 1 {
                continue;
            }
            num += (hv - p * lp.energy(n)).norm_sqr();
            den += (p * lp.energy(n)).norm_sqr();
        }
        let r = (num / den).sqrt();
        assert!(r < 1e-3, "level {n}: {r:e}");
    }
}

#[test]
fn commutation_examples() {
    let psi = line_probe(nm(0.2));
    let em = EmScenario::free();
    let c = commutes(&op(OperatorKind::Position), &op(OperatorKind::PositionProjector(nm(400.0))), &psi, &em).unwrap();
    assert!(c.commutes && c.residual < 1e-12);
    let c = commutes(&op(OperatorKind::Position), &op(OperatorKind::Velocity), &psi, &em).unwrap();
    assert!(!c.commutes);
    assert!((c.residual / (HBAR / M_EFF) - 1.0).abs() < 1e-3);
}

#[test]
fn landau_velocities_do_not_commute() {
    let b = 0.19;
    let ax = Grid1D::span(nm(-60.0), nm(60.0), nm(0.1), 1e-17).unwrap();
    let g = Grid2D::new(ax, ax).unwrap();
    let psi = normalize(&WaveField::from_fn(Grid::Two(g), 0.0, |x, y| {
        Complex64::from_polar((-(x * x + y * y) / (2.0 * nm(10.0).powi(2))).exp(), 1e8 * x)
    }))
    .unwrap();
    let c = commutes(&op(OperatorKind::VelocityY), &op(OperatorKind::Velocity), &psi, &EmScenario::landau(b)).unwrap();
    assert!(!c.commutes);
    let expected = HBAR * (Q * b).abs() / (M_EFF * M_EFF);
    assert!((c.residual / expected - 1.0).abs() < 1e-2, "{} vs {}", c.residual, expected);
}

#[test]
fn ehrenfest_position_rate_is_mean_velocity() {
    let g = Grid1D::span(nm(-400.0), nm(1200.0), nm(0.2), 0.01 * FS).unwrap();
    let em = EmScenario::free();
    let sp = packet_pair(&table2_state(StateId::Phi1), g, 0.0, &em, None).unwrap();
    let mid = evolve(&sp, &em, None, 5.0 * g.dt).unwrap();
    let end = evolve(&mid, &em, None, 5.0 * g.dt).unwrap();
    let x = op(OperatorKind::Position);
    let rate = (expectation(&x, &end.cur, &em).unwrap() - expectation(&x, &sp.cur, &em).unwrap()) / (10.0 * g.dt);
    let v = expectation(&op(OperatorKind::Velocity), &mid.cur, &em).unwrap();
    assert!((rate - v).abs() / v < 1e-3, "{rate} vs {v}");
}

fn interior_packet(center: f64, sigma: f64, k: f64, dx: f64) -> WaveField {
    let g = Grid1D::span(nm(0.0), nm(200.0), dx, 1e-17).unwrap();
    WaveField::from_fn(Grid::One(g), 0.0, |x, _| {
        Complex64::from_polar((-(x - center).powi(2) / (2.0 * sigma * sigma)).exp(), k * x)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn covariant_operators_are_hermitian(
        c1 in 60.0f64..140.0, c2 in 60.0f64..140.0,
        s1 in 4.0f64..12.0, s2 in 4.0f64..12.0,
        k1 in -0.3f64..0.3, k2 in -0.3f64..0.3,
    ) {
        let phi = interior_packet(nm(c1), nm(s1), k1 / NM, nm(0.2));
        let psi = interior_packet(nm(c2), nm(s2), k2 / NM, nm(0.2));
        let em = EmScenario::uniform_e(-1e6);
        for k in [OperatorKind::Position, OperatorKind::Velocity, OperatorKind::KineticEnergy, OperatorKind::ElectricField] {
            let o = op(k);
            let a = inner(&phi, &apply(&o, &psi, Some(&em)).unwrap()).unwrap();
            let b = inner(&psi, &apply(&o, &phi, Some(&em)).unwrap()).unwrap().conj();
            let scale = apply(&o, &psi, Some(&em)).unwrap().norm() * phi.norm();
            prop_assert!((a - b).norm() <= 1e-8 * scale, "{}: {:e}", o.name(), (a - b).norm() / scale);
        }
    }

    #[test]
    fn expectation_of_velocity_is_real_in_any_gauge(theta in 0.0..std::f64::consts::TAU) {
        // Fine mesh: the gauge phase gradient costs O((k dx)^2) on coarse ones.
        let psi = normalize(&interior_packet(nm(100.0), nm(8.0), 0.13 / NM, nm(0.005))).unwrap();
        let gpsi = apply_gauge(&psi, &GaugeSpec::cosine(theta)).unwrap();
        let em = EmScenario::free();
        let a = expectation(&op(OperatorKind::Velocity), &psi, &em).unwrap();
        let b = expectation(&op(OperatorKind::Velocity), &gpsi, &em).unwrap();
        prop_assert!((a - b).abs() < 1e-6 * a.abs());
    }
}
