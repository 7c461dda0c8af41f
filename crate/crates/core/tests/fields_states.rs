use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use weaklab::fields::{central_diff, inner, normalize, Axis, Grid, Grid1D, Grid2D, WaveField};
use weaklab::gauge::{apply_gauge, remove_gauge, theta_sweep, transform_potentials, EmScenario, GaugeSpec};
use weaklab::states::{
    gaussian_field, gaussian_pair, landau_eigenstate, landau_superposition, table2_state, LandauParams, PacketParams,
    StateId,
};
use weaklab::units::{mev, nm, FS, NM};
use weaklab::Error;

fn fig2_grid(dx: f64) -> Grid1D {
    Grid1D::span(nm(-400.0), nm(1200.0), dx, 0.01 * FS).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn normalized_self_overlap_is_one() {
    let psi = normalize(&gaussian_field(&table2_state(StateId::Phi1), fig2_grid(nm(0.2)), 0.0, 0.0)).unwrap();
    let s = inner(&psi, &psi).unwrap();
    assert!((s.re - 1.0).abs() < 1e-14);
    assert!(s.im.abs() < 1e-14);
}

#[test]
fn distant_narrow_packets_do_not_overlap() {
    let g = fig2_grid(nm(0.2));
    let a = gaussian_field(&PacketParams::new(0.0, nm(300.0), nm(5.0)).unwrap(), g, 0.0, 0.0);
    let b = gaussian_field(&PacketParams::new(0.0, nm(400.0), nm(5.0)).unwrap(), g, 0.0, 0.0);
    assert!(inner(&normalize(&a).unwrap(), &normalize(&b).unwrap()).unwrap().norm() < 1e-8);
}

#[test]
fn narrow_post_overlap_agrees_with_refined_quadrature() {
    let ov = |dx: f64| {
        let g = fig2_grid(dx);
        let f = gaussian_field(&table2_state(StateId::Phi2), g, 0.0, 0.0);
        let psi = gaussian_field(&table2_state(StateId::Phi1), g, 0.0, 0.0);
        inner(&f, &psi).unwrap()
    };
    let coarse = ov(nm(0.2));
    let fine = ov(nm(0.1));
    assert!(coarse.norm() > 1e-3);
    assert!((coarse - fine).norm() / fine.norm() < 1e-4);
}

#[test]
fn overlap_across_gauges_is_refused() {
    let psi = gaussian_field(&table2_state(StateId::Phi1), fig2_grid(nm(0.2)), 0.0, 0.0);
    let g = apply_gauge(&psi, &GaugeSpec::cosine(0.0)).unwrap();
    assert_eq!(inner(&psi, &g).unwrap_err(), Error::GaugeMixing);
    let other = gaussian_field(&table2_state(StateId::Phi1), fig2_grid(nm(0.4)), 0.0, 0.0);
    assert_eq!(inner(&psi, &other).unwrap_err(), Error::GridMismatch);
}

#[test]
fn normalize_is_idempotent_and_scale_free() {
    let psi = normalize(&gaussian_field(&table2_state(StateId::Phi3), fig2_grid(nm(0.2)), 0.0, 0.0)).unwrap();
    let again = normalize(&psi).unwrap();
    assert!(again.rel_l2(&psi).unwrap() < 1e-15);
    let scaled = normalize(&psi.scale(Complex64::new(7.0, 0.0))).unwrap();
    assert!(scaled.rel_l2(&psi).unwrap() < 1e-15);
}

#[test]
fn analytic_prefactor_is_normalized() {
    // ∫ |A|² with the closed-form prefactor is exactly one.
    let psi = gaussian_field(&table2_state(StateId::Phi1), fig2_grid(nm(0.2)), 0.0, 0.0);
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-6);
}

#[test]
fn constant_field_has_zero_derivative() {
    let g = Grid::One(fig2_grid(nm(1.0)));
    let c = WaveField::from_fn(g, 0.0, |_, _| Complex64::new(2.0, -1.0));
    assert!(central_diff(&c, Axis::X).unwrap().iter().all(|d| d.norm() < 1e-3));
}

#[test]
fn plane_wave_derivative_error_quarters_with_dx() {
    let k = table2_state(StateId::Phi1).k_c();
    let err = |dx: f64| {
        let g = Grid::One(Grid1D::span(0.0, nm(100.0), dx, FS).unwrap());
        let psi = WaveField::from_fn(g, 0.0, |x, _| Complex64::new(0.0, k * x).exp());
        let d = central_diff(&psi, Axis::X).unwrap();
        (1..psi.amps.len() - 1)
            .map(|i| (d[i] - Complex64::new(0.0, k) * psi.amps[i]).norm() / k)
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(nm(0.4)), err(nm(0.2)));
    // Leading error is (k dx)²/6.
    assert!(rel(e1, (k * nm(0.4)).powi(2) / 6.0) < 0.02);
    assert!((e1 / e2 - 4.0).abs() < 0.05);
}

#[test]
fn derivative_along_y_needs_a_2d_grid() {
    let psi = gaussian_field(&table2_state(StateId::Phi1), fig2_grid(nm(0.2)), 0.0, 0.0);
    assert!(matches!(central_diff(&psi, Axis::Y), Err(Error::AxisUnavailable(_))));
}

#[test]
fn table_wavevectors_and_speeds() {
    let p1 = table2_state(StateId::Phi1);
    assert!(rel(p1.k_c() * NM, 0.132) < 0.01);
    assert!(rel(p1.v_c(), 2.28e5) < 0.01);
    let p5 = table2_state(StateId::Phi5);
    // Table value is truncated to two digits (0.2965).
    assert!((p5.k_c() * NM - 0.29).abs() < 0.01);
    assert!(rel(p5.v_c(), 5.12e5) < 0.01);
}

#[test]
fn table_entries_are_exact() {
    assert_eq!(table2_state(StateId::Phi2), PacketParams { energy: mev(5.0), center: nm(400.0), sigma: nm(5.0) });
    assert_eq!(table2_state(StateId::Phi3), PacketParams { energy: mev(10.0), center: nm(400.0), sigma: nm(60.0) });
    assert_eq!(table2_state(StateId::Phi4), PacketParams { energy: mev(5.0), center: nm(400.0), sigma: nm(40.0) });
    assert!(matches!("phi9".parse::<StateId>(), Err(Error::UnknownState(_))));
}

#[test]
fn pair_snapshots_differ_by_order_dt() {
    let p = table2_state(StateId::Phi1);
    let diff = |dt: f64| {
        let g = Grid1D::span(nm(-400.0), nm(1200.0), nm(0.2), dt).unwrap();
        let (a, b) = gaussian_pair(&p, g, 0.0).unwrap();
        assert!((b.t - a.t - dt).abs() < 1e-30);
        b.with_amps(b.amps.clone()).rel_l2(&a).unwrap()
    };
    let (d1, d2) = (diff(1e-17), diff(5e-18));
    assert!(d1 < 1e-2);
    assert!((d1 / d2 - 2.0).abs() < 0.05);
}

#[test]
fn clipped_packet_reports_boundary_amplitude() {
    let g = Grid1D::span(nm(300.0), nm(500.0), nm(0.2), 0.01 * FS).unwrap();
    match gaussian_pair(&table2_state(StateId::Phi1), g, 0.0) {
        Err(Error::BoxTooSmall(r)) => assert!(r > 1e-3),
        other => panic!("expected BoxTooSmall, got {other:?}"),
    }
}

fn landau_grid(dx: f64, dy: f64) -> Grid2D {
    Grid2D::new(
        Grid1D::span(nm(-700.0), nm(620.0), dx, 0.01 * FS).unwrap(),
        Grid1D::span(nm(-100.0), nm(100.0), dy, 0.01 * FS).unwrap(),
    )
    .unwrap()
}

#[test]
fn landau_scales_at_default_field() {
    let lp = LandauParams::equal_weights(0.19, 0.0118 / NM, 10).unwrap();
    assert!((lp.omega() / 1e12 - 0.49).abs() < 0.01);
    assert!((lp.l_b() / NM - 58.0).abs() < 1.5);
    assert!((lp.x_y() / NM - 40.8).abs() < 0.5);
    // The orbit center for the negative charge sits at −x_y.
    assert!((lp.center() + lp.x_y()).abs() < 1e-15);
}

#[test]
fn landau_ground_state_is_nodeless_and_uniform_in_y() {
    let lp = LandauParams::equal_weights(0.19, 0.0118 / NM, 10).unwrap();
    let g = landau_grid(nm(2.0), nm(10.0));
    let psi = landau_eigenstate(0, &lp, g).unwrap();
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    let ny = g.y.nx;
    for k in 0..g.x.nx {
        let m0 = psi.amps[g.index(k, 0)].norm();
        for l in 1..ny {
            assert!((psi.amps[g.index(k, l)].norm() - m0).abs() <= 1e-12 * m0.max(1e-300));
        }
    }
    // Nodeless: the real x-profile keeps one sign.
    let prof: Vec<f64> = (0..g.x.nx).map(|k| (psi.amps[g.index(k, 0)] * Complex64::new(0.0, -lp.k_y * g.y.x(0)).exp()).re).collect();
    assert!(prof.iter().all(|v| *v >= 0.0) || prof.iter().all(|v| *v <= 0.0));
}

#[test]
fn landau_levels_are_orthonormal() {
    let lp = LandauParams::equal_weights(0.19, 0.0118 / NM, 10).unwrap();
    let g = landau_grid(nm(0.5), nm(20.0));
    let states: Vec<WaveField> = (0..10).map(|n| landau_eigenstate(n, &lp, g).unwrap()).collect();
    for n in 0..10 {
        for m in 0..10 {
            let s = inner(&states[n], &states[m]).unwrap();
            let want = if n == m { 1.0 } else { 0.0 };
            assert!((s - want).norm() < 1e-6, "<{n}|{m}> = {s}");
        }
    }
}

#[test]
fn landau_superposition_is_normalized() {
    let lp = LandauParams::equal_weights(0.19, 0.0118 / NM, 10).unwrap();
    let ls = landau_superposition(&lp, landau_grid(nm(0.5), nm(20.0))).unwrap();
    assert!((ls.field(0.0).norm_sqr() - 1.0).abs() < 1e-10);
}

#[test]
fn narrow_landau_box_is_rejected() {
    let lp = LandauParams::equal_weights(0.19, 0.0118 / NM, 10).unwrap();
    let g = Grid2D::new(
        Grid1D::span(nm(-300.0), nm(300.0), nm(1.0), FS).unwrap(),
        Grid1D::span(0.0, nm(10.0), nm(2.0), FS).unwrap(),
    )
    .unwrap();
    assert!(matches!(landau_superposition(&lp, g), Err(Error::BoxTooSmall(_))));
}

#[test]
fn zero_amplitude_gauge_is_identity() {
    let psi = gaussian_field(&table2_state(StateId::Phi1), fig2_grid(nm(0.2)), 0.0, 0.0);
    let gs = GaugeSpec::Cosine { g0: 0.0, kg: 8e6, wg: 1e13, theta: 1.0 };
    assert_eq!(apply_gauge(&psi, &gs).unwrap().amps, psi.amps);
}

#[test]
fn gauge_round_trip_restores_field() {
    let psi = gaussian_field(&table2_state(StateId::Phi1), fig2_grid(nm(0.2)), 3e-15, 0.0);
    let gs = GaugeSpec::cosine(2.0);
    let g = apply_gauge(&psi, &gs).unwrap();
    assert!(matches!(apply_gauge(&g, &gs), Err(Error::GaugeMixing)));
    assert!(remove_gauge(&g).unwrap().rel_l2(&psi).unwrap() < 1e-14);
}

#[test]
fn free_potentials_in_cosine_gauge() {
    let gs = GaugeSpec::cosine(0.4);
    let em = transform_potentials(&EmScenario::free(), &gs);
    let (g0, kg, wg) = (1e-14, 8e6, 1e13);
    for &(x, t) in &[(nm(100.0), 0.0), (nm(-37.0), 2e-13), (nm(900.0), 1e-12)] {
        let ph = kg * x + wg * t + 0.4;
        assert!((em.a(x, 0.0, t)[0] + g0 * kg * ph.sin()).abs() <= 1e-12 * g0 * kg);
        assert!((em.a_s(x, 0.0, t) - g0 * wg * ph.sin()).abs() <= 1e-12 * g0 * wg);
    }
}

#[test]
fn fields_are_gauge_invariant() {
    for em in [EmScenario::uniform_e(-1e6), EmScenario::landau(0.19)] {
        for gs in theta_sweep(&[0.0, 1.3, 4.0]) {
            let g = transform_potentials(&em, &gs);
            for &(x, t) in &[(nm(10.0), 0.0), (nm(333.0), 4e-13)] {
                let (e0, e1) = (em.e_field(x, 0.0, t)[0], g.e_field(x, 0.0, t)[0]);
                assert!((e0 - e1).abs() <= 1e-10 * e0.abs().max(1.0));
                let (b0, b1) = (em.b_field(x, 0.0, t), g.b_field(x, 0.0, t));
                assert!((b0 - b1).abs() <= 1e-10 * b0.abs().max(1e-3));
            }
        }
    }
    assert!((EmScenario::landau(0.19).b_field(nm(5.0), 0.0, 0.0) - 0.19).abs() < 1e-15);
}

#[test]
fn single_theta_sweep() {
    let s = theta_sweep(&[0.0]);
    assert_eq!(s.len(), 1);
    assert!((s[0].g(0.0, 0.0) - 1e-14).abs() < 1e-28);
}

fn probe(center_nm: f64, sigma_nm: f64, e_mev: f64) -> WaveField {
    let p = PacketParams::new(mev(e_mev), nm(center_nm), nm(sigma_nm)).unwrap();
    gaussian_field(&p, Grid1D::span(0.0, nm(400.0), nm(0.5), FS).unwrap(), 0.0, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn overlap_is_conjugate_symmetric(c1 in 120.0..280.0f64, s1 in 8.0..40.0f64, e1 in 0.0..20.0f64,
                                      c2 in 120.0..280.0f64, s2 in 8.0..40.0f64, e2 in 0.0..20.0f64) {
        let a = probe(c1, s1, e1);
        let b = probe(c2, s2, e2);
        let ab = inner(&a, &b).unwrap();
        let ba = inner(&b, &a).unwrap();
        prop_assert_eq!(ab, ba.conj());
        let aa = inner(&a, &a).unwrap();
        prop_assert!(aa.im.abs() < 1e-14 * aa.re);
    }

    #[test]
    fn derivative_is_linear(c1 in 120.0..280.0f64, s1 in 8.0..40.0f64, c2 in 120.0..280.0f64,
                            ar in -3.0..3.0f64, ai in -3.0..3.0f64, br in -3.0..3.0f64) {
        let a = Complex64::new(ar, ai);
        let b = Complex64::new(br, 0.5);
        let f = probe(c1, s1, 5.0);
        let h = probe(c2, s1, 12.0);
        let combo = f.scale(a).add(&h.scale(b)).unwrap();
        let lhs = central_diff(&combo, Axis::X).unwrap();
        let (df, dh) = (central_diff(&f, Axis::X).unwrap(), central_diff(&h, Axis::X).unwrap());
        let scale = lhs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..lhs.len() {
            prop_assert!((lhs[i] - (a * df[i] + b * dh[i])).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn gauge_keeps_density(theta in 0.0..(2.0 * PI), t in 0.0..1e-12f64) {
        let mut psi = probe(200.0, 30.0, 10.0);
        psi.t = t;
        let g = apply_gauge(&psi, &GaugeSpec::cosine(theta)).unwrap();
        for (a, b) in g.amps.iter().zip(&psi.amps) {
            prop_assert!((a.norm_sqr() - b.norm_sqr()).abs() <= 1e-14 * b.norm_sqr().max(1e-300));
        }
    }

    #[test]
    fn potential_round_trip(theta in 0.0..(2.0 * PI), x in -1e-6..1e-6f64, t in 0.0..1e-12f64) {
        let em = EmScenario::uniform_e(-1e6);
        let gs = GaugeSpec::cosine(theta);
        let back = transform_potentials(&transform_potentials(&em, &gs), &gs.negated());
        let scale_a = 1e-14 * 8e6;
        let scale_s = 1e-14 * 1e13 + 1e6 * 1e-6;
        prop_assert!((back.a(x, 0.0, t)[0] - em.a(x, 0.0, t)[0]).abs() <= 1e-12 * scale_a);
        prop_assert!((back.a_s(x, 0.0, t) - em.a_s(x, 0.0, t)).abs() <= 1e-12 * scale_s);
    }
}
