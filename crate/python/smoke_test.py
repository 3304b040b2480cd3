#!/usr/bin/env python3
"""Smoke test for the gramsched_py extension module.

Builds nothing itself: run `cargo build -p gramsched-py` (or --release)
first, then `python3 python/smoke_test.py`.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_module():
    candidates = [
        REPO / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libgramsched_py.so", "gramsched_py.so", "libgramsched_py.dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run: cargo build -p gramsched-py")
    staging = Path(tempfile.mkdtemp(prefix="gramsched_py_"))
    shutil.copy2(built, staging / "gramsched_py.so")
    sys.path.insert(0, str(staging))
    import gramsched_py

    return gramsched_py


def main():
    gs = import_module()

    # Closed form: eps(n, 4n) = ln 3.
    eps = gs.theoretical_epsilon(6, 24)
    assert abs(eps - math.log(3.0)) < 1e-12, eps
    print(f"closed form ok: eps(6, 24) = {eps:.6f}")

    # Random minimal system end to end.
    sys_rand = gs.System.random(4, 3, 3, seed=7)
    rank_r, rank_o, minimal = sys_rand.minimality(12)
    assert minimal, (rank_r, rank_o)
    sched = gs.joint_schedule(sys_rand, 12, 1.0, 1.0)
    assert sched.provenance == "joint"
    avg_s, avg_a = sched.average_cardinalities()
    assert avg_s <= 1.0 + 1e-12 and avg_a <= 1.0 + 1e-12, (avg_s, avg_a)
    report = gs.verify_schedule(sys_rand, sched, d_s=1.0, d_a=1.0)
    assert report["pass"], report
    assert report["epsilon_joint"] <= report["epsilon_theory_joint"] + 1e-8
    print(
        f"joint schedule ok: eps = {report['epsilon_joint']:.4f} "
        f"<= theory {report['epsilon_theory_joint']:.4f}, "
        f"active pairs = ({report['active_sensor_pairs']}, {report['active_actuator_pairs']})"
    )

    # Schedule JSON round trip is lossless.
    clone = gs.Schedule.from_json(sched.to_json())
    assert clone.sensor_scalings() == sched.sensor_scalings()
    assert clone.actuator_scalings() == sched.actuator_scalings()
    print("schedule json round trip ok")

    # Swing demo: 3 generators in a line, 0.2 s sampling.
    coupling = [
        1.0, -1.0, 0.0,
        -1.0, 2.0, -1.0,
        0.0, -1.0, 1.0,
    ]
    swing = gs.System.swing([1.0, 1.0, 1.0], [0.3, 0.3, 0.3], coupling, 0.2)
    assert (swing.n, swing.m, swing.p) == (6, 3, 6)
    sigma = swing.hankel_singular_values(12)
    assert sigma == sorted(sigma, reverse=True) and sigma[-1] >= 0.0
    assert abs(swing.hankel_norm(12) - sigma[0]) == 0.0
    sensor = gs.sensor_schedule(swing, 12, 2.0)
    rep = gs.verify_schedule(swing, sensor, d_s=2.0)
    assert rep["pass"] and rep["epsilon_p"] == 0.0, rep
    print(f"swing demo ok: hankel norm = {sigma[0]:.4f}, sensor eps_q = {rep['epsilon_q']:.4f}")

    # Normalization hits the squared-sum target.
    rescaled = sensor.normalized(swing.n, d_s=2.0)
    total = sum(s * s for (_, _, s) in rescaled.sensor_scalings())
    assert abs(total - swing.n * 2.0) < 1e-9, total
    print("normalization ok")

    # Errors surface as ValueError.
    try:
        gs.joint_schedule(sys_rand, 2, 1.0, 1.0)
    except ValueError as e:
        assert "horizon" in str(e)
        print("error mapping ok:", e)
    else:
        sys.exit("expected ValueError for short horizon")

    print("smoke test passed")


if __name__ == "__main__":
    main()
