#!/usr/bin/env python3
"""Smoke test for the sideband_py extension module.

Builds nothing itself: compile the extension first with

    cargo build -p sideband-py            # or --release

then run

    python3 python/smoke_test.py

The script locates the compiled cdylib under target/, exposes it as an
importable module, and drives the main entry points end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def import_sideband_py():
    candidates = [
        REPO_ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libsideband_py.so", "sideband_py.so", "libsideband_py.dylib")
    ]
    library = next((p for p in candidates if p.exists()), None)
    if library is None:
        sys.exit("extension not found; run `cargo build -p sideband-py` first")
    staging = Path(tempfile.mkdtemp(prefix="sideband-py-"))
    shutil.copy2(library, staging / "sideband_py.so")
    sys.path.insert(0, str(staging))
    import sideband_py

    return sideband_py


def approx(value, target, tol, label):
    assert abs(value - target) <= tol, f"{label}: {value} vs {target} (tol {tol})"
    print(f"ok  {label}: {value:.6g}")


def main():
    sb = import_sideband_py()

    # Special functions.
    approx(sb.laguerre(1, 1, 0.5), 1.5, 1e-15, "L_1^(1)(0.5)")
    approx(sb.coupling_f(50, 0.1), 0.76578, 1e-4, "f(50; 0.1)")
    assert sb.coupling_f(7, 0.0) == 1.0
    profile = sb.tabulate_coupling(0.268, 60)
    assert len(profile) == 61 and profile[50] * profile[51] < 0
    print("ok  coupling profile sign change at the trapping level")
    approx(sb.displacement_prob(1, 0, 0.3), 0.09 * math.exp(-0.09), 1e-12, "kick P(1|0)")

    # Trapping conditions.
    approx(sb.pulse_area_for_state(50, 0.1), 1.149, 1e-3, "pulse area for n0=50")
    root = sb.eta_zeros_for_n(50)[0]
    approx(root, 0.268, 1e-3, "first coupling zero of level 50")
    assert sb.trapping_numbers_for_eta(0.268, 60) == [50]
    print("ok  trapping numbers for eta = 0.268")
    table = sb.fig5_dataset(30, 1.0)
    assert all(eta <= 1.0 for (_, eta, _) in table)
    print(f"ok  trapping-condition table ({len(table)} pairs)")

    # Rates.
    up, stay = sb.incoherent_rates(root, 10.0, 60)
    assert up[50] == 0.0 and all(abs(u + s - 1.0) == 0.0 for u, s in zip(up, stay))
    print("ok  incoherent rates: exact zero at the trapping level")
    approx(sb.damping_exponent(3, 0.0, 2.0), 16.0, 0.0, "damping exponent, Lamb-Dicke limit")

    # Binomial regime helpers.
    row = sb.binomial_closed_form([1.0] + [0.0] * 20, 4)
    approx(row[2], 6 / 16, 1e-15, "binomial row entry")
    mean, var, relvar = sb.distribution_moments(row)
    approx(mean, 2.0, 1e-12, "binomial mean")
    approx(relvar, 0.5, 1e-12, "binomial relative variance")

    # Config-driven experiment: deterministic evolution + trajectories.
    config = f"""
regime = incoherent
eta = {root!r}
g = 10.0
recoil.enabled = true
n_max = 150
cycles = 120
checkpoints = 0,60,120
seed = 7
trajectories = 500
"""
    exp = sb.Experiment(config)
    evolution = exp.evolve()
    final = evolution["snapshots"][-1]
    assert final["cycle"] == 120
    total = sum(final["probs"]) + final["leak"]
    approx(total, 1.0, 1e-9, "probability conservation")
    mc = exp.trajectories()
    assert mc["report"]["n_trajectories"] == 500
    worst_tv = max(entry["tv_distance"] for entry in mc["comparison"])
    assert worst_tv < 3 * math.sqrt(150 / 500), f"ensemble far from engine: TV={worst_tv}"
    print(f"ok  ensemble vs engine: worst TV = {worst_tv:.4f}")
    repeat = sb.Experiment(config).trajectories()
    assert repeat["snapshots"][-1]["probs"] == mc["snapshots"][-1]["probs"]
    print("ok  trajectory ensembles are reproducible")

    bad = config.replace("g = 10.0", "pulse_area = 1.0")
    try:
        sb.Experiment(bad)
    except ValueError as err:
        print(f"ok  config validation raises ValueError ({err})")
    else:
        sys.exit("invalid config was accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
