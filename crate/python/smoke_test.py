"""Import the compiled extension and exercise each binding once."""

import sys

import weaklab


def main() -> int:
    phi1 = weaklab.state_params("phi1")
    v = phi1["v_c_m_per_s"]
    assert abs(v / 2.2913e5 - 1) < 1e-4, v

    d = weaklab.position_derivatives("phi1", "phi2", stride_steps=50, theta=0.7)
    assert abs(d["fdlhd"] / v - 1) < 0.05, d
    assert abs(d["fdrhd"]) < 0.05 * v, d

    period = weaklab.cyclotron_period(0.19)
    assert abs(period * 1e12 - 12.6) < 0.1, period

    readings = weaklab.sensor_readings("[run]\nkind = efield\ntrajectories = 2\nsample_times = 1\n")
    assert len(readings) == 2 and all(abs(r[3] / -1e6 - 1) < 0.05 for r in readings), readings

    try:
        weaklab.run_scenario("[grid]\ndt_fs = -1\n")
    except ValueError as e:
        assert "dt_fs" in str(e)
    else:
        raise AssertionError("negative dt accepted")

    failed = [line for line in weaklab.self_check() if not line[1]]
    assert not failed, failed
    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
