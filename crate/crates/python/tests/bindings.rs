use weaklab_py::{check_lines, position_derivatives, sensor_readings, state_params};

#[test]
fn tabulated_states_by_name() {
    let p = state_params("Φ5").unwrap();
    assert!((p["energy_j"] / (50e-3 * 1.602176634e-19) - 1.0).abs() < 1e-3);
    assert_eq!(p["sigma_m"], 127e-9);
    assert!(state_params("psi").is_err());
}

#[test]
fn derivatives_of_the_moving_pre_state() {
    let v = state_params("phi1").unwrap()["v_c_m_per_s"];
    let d = position_derivatives("phi1", "phi2", 50, Some(1.0)).unwrap();
    assert!((d["fdlhd"] / v - 1.0).abs() < 0.05);
    assert!(d["fdrhd"].abs() < 0.05 * v);
    assert!((d["lhd"] / d["fdlhd"] - 1.0).abs() < 0.02);
}

#[test]
fn swapping_roles_swaps_the_sides() {
    let a = position_derivatives("phi1", "phi2", 50, None).unwrap();
    let b = position_derivatives("phi2", "phi1", 50, None).unwrap();
    assert!((a["fdlhd"] / b["fdrhd"] - 1.0).abs() < 1e-3);
}

#[test]
fn fig2_kinds_have_no_sensor() {
    assert!(sensor_readings("[run]\nkind = fig2a\n").is_err());
}

#[test]
fn short_field_run_through_the_binding() {
    let r = sensor_readings("[run]\nkind = efield\ntrajectories = 2\nsample_times = 1\n").unwrap();
    assert_eq!(r.len(), 2);
    for (_, y, t, e, flagged) in r {
        assert_eq!((y, t, flagged), (0.0, 0.0, false));
        assert!((e / -1e6 - 1.0).abs() < 0.05);
    }
}

#[test]
fn default_self_check_passes() {
    for (name, passed, detail) in check_lines(None).unwrap() {
        assert!(passed, "{name}: {detail}");
    }
}
