use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use weaklab::bohmian::{
    bohm_velocity, integrate_ensemble, integrate_trajectory, ks_distance, osmotic_velocity, quantum_potential,
    sample_initial_positions, AnalyticSource, FieldSource, UniformSource, VelocitySource,
};
use weaklab::fields::{normalize, Axis, Grid, Grid1D, Grid2D, WaveField};
use weaklab::gauge::{apply_gauge, EmScenario, GaugeSpec};
use weaklab::operators::{OperatorKind, OperatorSpec};
use weaklab::propagator::{packet_pair, Analytic2D};
use weaklab::sensing::oscillation_period;
use weaklab::states::{gaussian_field, landau_eigenstate, landau_superposition, table2_state, LandauParams, PacketParams, StateId};
use weaklab::units::{nm, FS, HBAR, M_EFF, NM, PS, Q};
use weaklab::weakeval::{weak_value, PostState, PreState, SelectionPair};
use weaklab::Error;

const DT: f64 = 0.01 * FS;

fn fig2_grid() -> Grid1D {
    Grid1D::span(nm(-400.0), nm(1200.0), nm(0.2), DT).unwrap()
}

fn plane_wave(k: f64) -> WaveField {
    let g = Grid1D::span(0.0, nm(200.0), nm(0.2), DT).unwrap();
    WaveField::from_fn(Grid::One(g), 0.0, |x, _| Complex64::from_polar(1.0, k * x))
}

fn values(v: &[Option<f64>]) -> impl Iterator<Item = f64> + '_ {
    v.iter().flatten().copied()
}

#[test]
fn plane_wave_velocity_fields() {
    let k = table2_state(StateId::Phi1).k_c();
    let psi = plane_wave(k);
    let em = EmScenario::free();
    let want = HBAR * k / M_EFF;
    let vb = bohm_velocity(&psi, &em, Axis::X).unwrap();
    // Interior nodes carry the central-difference factor sin(k dx)/(k dx).
    assert!(values(&vb[1..vb.len() - 1]).all(|v| (v / want - 1.0).abs() < 2e-4));
    let vo = osmotic_velocity(&psi, Axis::X).unwrap();
    assert!(values(&vo[1..vo.len() - 1]).all(|v| v.abs() < 1e-6 * want));
    let qp = quantum_potential(&psi);
    assert!(values(&qp).all(|q| q.abs() < 1e-12 * table2_state(StateId::Phi1).energy));
}

#[test]
fn gaussian_at_rest_does_not_flow() {
    let p = PacketParams::new(0.0, nm(400.0), nm(40.0)).unwrap();
    let psi = gaussian_field(&p, fig2_grid(), 0.0, 0.0);
    let vb = bohm_velocity(&psi, &EmScenario::free(), Axis::X).unwrap();
    assert!(values(&vb).all(|v| v == 0.0));
}

#[test]
fn osmotic_velocity_of_a_gaussian() {
    let sigma = nm(40.0);
    let p = PacketParams::new(0.0, nm(400.0), sigma).unwrap();
    let g = fig2_grid();
    let psi = gaussian_field(&p, g, 0.0, 0.0);
    let vo = osmotic_velocity(&psi, Axis::X).unwrap();
    assert!(vo[g.nearest(nm(400.0))].unwrap().abs() < 1e-9);
    let at = vo[g.nearest(nm(440.0))].unwrap();
    let want = -HBAR / (M_EFF * sigma);
    assert!((at / want - 1.0).abs() < 1e-3, "{at} vs {want}");
}

#[test]
fn masked_points_are_not_samples() {
    let psi = gaussian_field(&table2_state(StateId::Phi2), fig2_grid(), 0.0, 0.0);
    let vb = bohm_velocity(&psi, &EmScenario::free(), Axis::X).unwrap();
    assert!(vb[0].is_none());
    assert!(vb[fig2_grid().nearest(nm(400.0))].is_some());
}

#[test]
fn quantum_potential_of_wide_packet_is_negligible() {
    let p = table2_state(StateId::Phi5);
    let g = Grid1D::span(nm(-800.0), nm(2000.0), nm(0.2), DT).unwrap();
    let psi = gaussian_field(&p, g, 0.0, 0.0);
    let qp = quantum_potential(&psi);
    // Only the well-populated region matters for the sensor.
    let core: f64 = (0..g.nx)
        .filter(|&k| (g.x(k) - p.center).abs() < 3.0 * p.sigma)
        .filter_map(|k| qp[k])
        .map(f64::abs)
        .fold(0.0, f64::max);
    let ke = 0.5 * M_EFF * p.v_c() * p.v_c();
    assert!(core / ke < 1e-2, "{}", core / ke);
}

fn landau_grid(half_y: f64) -> Grid2D {
    let gx = Grid1D::span(nm(-560.0), nm(480.0), nm(0.2), DT).unwrap();
    let gy = Grid1D::span(-half_y, half_y, nm(0.2), DT).unwrap();
    Grid2D::new(gx, gy).unwrap()
}

#[test]
fn landau_ground_state_balances_hamilton_jacobi() {
    let b = 0.19;
    let lp = LandauParams::equal_weights(b, 0.0118 / NM, 1).unwrap();
    let g2 = landau_grid(nm(2.0));
    let psi = landau_eigenstate(0, &lp, g2).unwrap();
    let em = EmScenario::landau(b);
    let vy = bohm_velocity(&psi, &em, Axis::Y).unwrap();
    let vx = bohm_velocity(&psi, &em, Axis::X).unwrap();
    let qp = quantum_potential(&psi);
    let e0 = lp.energy(0);
    let l = lp.l_b();
    let mid = g2.y.nx / 2;
    for k in 0..g2.x.nx {
        let x = g2.x.x(k);
        if (x - lp.center()).abs() > 2.0 * l {
            continue;
        }
        let i = g2.index(k, mid);
        let (vx, vy, q) = (vx[i].unwrap(), vy[i].unwrap(), qp[i].unwrap());
        // y velocity from the Landau vector potential.
        let want_vy = (HBAR * lp.k_y - Q * b * x) / M_EFF;
        assert!((vy - want_vy).abs() < 1e-3 * want_vy.abs().max(1e3));
        assert!(vx.abs() < 1e-6);
        let total = q + 0.5 * M_EFF * (vx * vx + vy * vy);
        assert!((total / e0 - 1.0).abs() < 1e-3, "x {} nm: {}", x / NM, total / e0);
    }
}

#[test]
fn gauge_change_leaves_bohm_velocity_to_stencil_order() {
    let p = PacketParams::new(table2_state(StateId::Phi1).energy, nm(400.0), nm(40.0)).unwrap();
    let em = EmScenario::free();
    let worst = |dx: f64| {
        let g = Grid1D::span(nm(100.0), nm(700.0), dx, DT).unwrap();
        let psi = normalize(&gaussian_field(&p, g, 0.0, 0.0)).unwrap();
        let a = bohm_velocity(&psi, &em, Axis::X).unwrap();
        let mut w: f64 = 0.0;
        for th in [0.3, 2.0, 4.4] {
            let b = bohm_velocity(&apply_gauge(&psi, &GaugeSpec::cosine(th)).unwrap(), &em, Axis::X).unwrap();
            for (x, y) in a.iter().zip(&b) {
                if let (Some(x), Some(y)) = (x, y) {
                    w = w.max((x - y).abs() / x.abs());
                }
            }
        }
        w
    };
    let coarse = worst(nm(0.05));
    let fine = worst(nm(0.005));
    assert!(fine < 1e-6, "{fine:e}");
    // Second order: ten times finer, a hundred times smaller.
    assert!((coarse / fine - 100.0).abs() < 10.0, "{}", coarse / fine);
}

#[test]
fn weak_value_route_equals_phase_gradient() {
    let g = fig2_grid();
    let em = EmScenario::free();
    let gs = GaugeSpec::cosine(1.7);
    let pair = packet_pair(&table2_state(StateId::Phi3), g, 0.0, &em, None).unwrap();
    let psi = apply_gauge(&pair.cur, &gs).unwrap();
    let vb = bohm_velocity(&psi, &em, Axis::X).unwrap();
    let v = OperatorSpec::new(OperatorKind::Velocity);
    for x in [nm(330.0), nm(400.0), nm(470.0)] {
        let k = g.nearest(x);
        let s = SelectionPair::new(PreState::Pair(pair.clone()), PostState::Point(vec![g.x(k)]), em.clone(), Some(gs.clone()));
        let w = weak_value(&v, 0.0, 0.0, &s).unwrap().real();
        assert!((w - vb[k].unwrap()).abs() / w.abs() < 1e-6);
    }
}

#[test]
fn sampling_statistics() {
    let g = fig2_grid();
    let psi = normalize(&gaussian_field(&table2_state(StateId::Phi1), g, 0.0, 0.0)).unwrap();
    let xs = sample_initial_positions(&psi, 10_000, 11);
    let mean = xs.iter().map(|p| p[0]).sum::<f64>() / xs.len() as f64;
    assert!((mean - nm(400.0)).abs() < nm(3.0), "{}", mean / NM);
    let narrow = gaussian_field(&table2_state(StateId::Phi2), g, 0.0, 0.0);
    assert!(sample_initial_positions(&narrow, 10, 1).iter().all(|p| (p[0] - nm(400.0)).abs() < nm(15.0)));
    let samples: Vec<f64> = xs.iter().map(|p| p[0]).collect();
    assert!(ks_distance(&samples, &psi) < 0.02);
}

#[test]
fn two_dimensional_sampling_follows_rows() {
    let ax = Grid1D::span(nm(-50.0), nm(50.0), nm(0.5), DT).unwrap();
    let g = Grid2D::new(ax, ax).unwrap();
    let psi = WaveField::from_fn(Grid::Two(g), 0.0, |x, y| {
        let s = nm(8.0);
        Complex64::new((-((x - nm(10.0)).powi(2) + (y + nm(5.0)).powi(2)) / (2.0 * s * s)).exp(), 0.0)
    });
    let pts = sample_initial_positions(&psi, 4000, 5);
    let mx = pts.iter().map(|p| p[0]).sum::<f64>() / 4000.0;
    let my = pts.iter().map(|p| p[1]).sum::<f64>() / 4000.0;
    assert!((mx - nm(10.0)).abs() < nm(0.5) && (my + nm(5.0)).abs() < nm(0.5));
}

#[test]
fn straight_line_in_uniform_flow() {
    let mut src = UniformSource { v: [-3e5, 0.0], t: 0.0, dt: DT, spacing: [nm(0.2), nm(0.2)] };
    let tr = integrate_trajectory([nm(10.0), 0.0], &mut src, 0.0, 100.0 * DT).unwrap();
    for (t, p) in tr.t.iter().zip(&tr.pos) {
        assert!((p[0] - (nm(10.0) - 3e5 * t)).abs() < 1e-18);
    }
    assert!(tr.t.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn trajectory_must_start_in_the_support() {
    let g = fig2_grid();
    let em = EmScenario::free();
    let pair = packet_pair(&table2_state(StateId::Phi2), g, 0.0, &em, None).unwrap();
    let mut src = FieldSource::new(pair, &em).unwrap();
    let r = integrate_trajectory([nm(1000.0), 0.0], &mut src, 0.0, 10.0 * DT);
    assert!(matches!(r, Err(Error::TrajectoryLost(_))));
}

#[test]
fn trajectory_from_phi1_center_moves_at_group_speed() {
    let g = fig2_grid();
    let em = EmScenario::free();
    let p = table2_state(StateId::Phi1);
    let mut src = FieldSource::new(packet_pair(&p, g, 0.0, &em, None).unwrap(), &em).unwrap();
    let n = 1000;
    let tr = integrate_trajectory([p.center, 0.0], &mut src, 0.0, n as f64 * DT).unwrap();
    let v = (tr.last()[0] - p.center) / (n as f64 * DT);
    assert!((v / 2.28e5 - 1.0).abs() < 0.01, "{v}");
    // No step jumps further than the local speed allows.
    let vmax = 1.1 * p.v_c();
    assert!(tr.pos.windows(2).all(|w| (w[1][0] - w[0][0]).abs() <= vmax * DT * 1.01));
}

#[test]
fn ensemble_stays_distributed_as_density() {
    let g = fig2_grid();
    let em = EmScenario::free();
    let pair = packet_pair(&table2_state(StateId::Phi1), g, 0.0, &em, None).unwrap();
    let starts = sample_initial_positions(&pair.cur, 4000, 21);
    let mut src = FieldSource::new(pair, &em).unwrap();
    let t1 = 0.3 * PS;
    let trajs = integrate_ensemble(&starts, &mut src, t1, 0, 21).unwrap();
    assert!(trajs.iter().all(|t| t.t.len() == 2));
    let xs: Vec<f64> = trajs.iter().map(|t| t.last()[0]).collect();
    let ks = ks_distance(&xs, src.field());
    assert!(ks < 0.03, "{ks}");
}

#[test]
fn landau_trajectories_oscillate_at_the_cyclotron_period() {
    let lp = LandauParams::equal_weights(0.19, 0.0118 / NM, 10).unwrap();
    let gx = Grid1D::span(nm(-700.0), nm(620.0), nm(0.5), DT).unwrap();
    let gy = Grid1D::span(nm(-600.0), nm(600.0), nm(2.0), DT).unwrap();
    let g2 = Grid2D::new(gx, gy).unwrap();
    let state = Arc::new(Analytic2D::Landau(landau_superposition(&lp, g2).unwrap()));
    let traj_dt = 0.1 * FS;
    let mut src = AnalyticSource::new(state, g2, 0.0, traj_dt);
    let x0 = [nm(-40.0), 0.0];
    assert!(src.velocity(x0).is_some());
    let tr = integrate_trajectory(x0, &mut src, 0.0, 30.0 * PS).unwrap();
    let period = oscillation_period(&tr).unwrap();
    let want = 2.0 * PI / lp.omega();
    assert!((period / want - 1.0).abs() < 0.05, "{} ps vs {} ps", period / PS, want / PS);
}
