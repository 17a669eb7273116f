#!/usr/bin/env python3
"""Smoke test for the solhunt_py extension module.

Builds the cdylib with cargo (unless SOLHUNT_SKIP_BUILD is set), stages it
under an importable name, and exercises the main entry points against known
values.

Usage: python3 python/smoke_test.py
"""

import math
import os
import shutil
import subprocess
import sys
import sysconfig
import tempfile

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def build_and_import():
    if not os.environ.get("SOLHUNT_SKIP_BUILD"):
        subprocess.run(
            ["cargo", "build", "-p", "solhunt-py", "--release"],
            cwd=REPO,
            check=True,
        )
    built = os.path.join(REPO, "target", "release", "libsolhunt_py.so")
    if not os.path.exists(built):  # macOS fallback
        built = os.path.join(REPO, "target", "release", "libsolhunt_py.dylib")
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    stage = tempfile.mkdtemp(prefix="solhunt_py_")
    shutil.copy(built, os.path.join(stage, "solhunt_py" + suffix))
    sys.path.insert(0, stage)
    import solhunt_py

    return solhunt_py


def main():
    sh = build_and_import()

    # Preset catalog.
    cp2 = sh.preset("cp2")
    assert cp2["d1"] == 1 and cp2["epsilon"] == -7.46562, cp2
    s5 = sh.preset("s5", epsilon=-0.16)
    assert s5["epsilon"] == -0.16
    print("ok: preset catalog")

    # Fixed-point linearization: focus exactly for 2 <= n <= 8.
    lin4 = sh.linearize(4)
    assert lin4["is_focus"] and abs(lin4["discriminant"] + 15.0 / 16.0) < 1e-12
    assert not sh.linearize(9)["is_focus"]
    print("ok: linearize")

    # Lyapunov bound for two unit two-spheres.
    assert abs(sh.lyapunov_lower_bound([(2, 1.0), (2, 1.0)], -1.0) - 4.0) < 1e-12
    print("ok: lyapunov bound")

    # Closed form: spherical cone has xi = alpha n cot(alpha t).
    s = sh.oracle_sample("cone", [(2, 1.0), (2, 1.0)], -8.0, 0.7)
    assert abs(s["xi"] - 4.0 / math.tan(0.7)) < 1e-12
    assert s["udot"] == 0.0
    print("ok: oracle")

    # Closing distance at the exact same-end target is zero.
    assert sh.closing_distance((0.0, -1.0, 3.0, 0.0, 0.0), "same_end") == 0.0
    print("ok: closing distance")

    # The round five-sphere closes up from (hbar, ubar) = (10, 0).
    traj = sh.integrate_trajectory("s5", 10.0, 0.0, tmax=16.0, record_every=50)
    assert traj["min_sol"] < 0.005, traj["min_sol"]
    assert traj["termination"].startswith("collapse")
    cols = traj["columns"]
    assert cols[0] == "t" and "ham_residual" in cols
    # Einstein trajectory: theta column is undefined (NaN).
    theta_idx = cols.index("theta")
    assert math.isnan(traj["rows"][0][theta_idx])
    print("ok: integrate (round sphere closes, min_sol = %.2e)" % traj["min_sol"])

    # Tiny scan finds the round metric as the single cluster.
    res = sh.scan_grid("s5", (9.5, 10.5, 0.5), (0.0, 0.0, 1.0), tmax=20.0)
    assert len(res["clusters"]) == 1
    best = res["clusters"][0]["best"]
    assert abs(best[0] - 10.0) < 1e-9
    print("ok: scan (cluster at hbar = %.3f)" % best[0])

    # Slice plus refine around the first oscillating Einstein metric.
    prof = sh.slice_einstein_axis("s5", 2.4, 2.7, 0.05, tmax=60.0)
    h_best = min(prof, key=lambda p: p[1])[0]
    refined = sh.refine_seed("s5", h_best, 0.0, tmax=60.0)
    assert abs(refined[0] - 2.5354) < 0.01, refined
    print("ok: slice + refine (hbar* = %.4f)" % refined[0])

    print("smoke test passed")


if __name__ == "__main__":
    main()
