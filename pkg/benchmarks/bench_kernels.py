"""Benchmark the compiled kernels against the NumPy fallback.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Times the three hot kernels (chain frames, point Jacobian, recursive
Newton-Euler) and a complete virtual-operator trial on each available
backend.
"""

import argparse
import pathlib
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from trocardock import kernels
from trocardock.arm import load_arm_model
from trocardock.simulate import load_scenario, run_scenario_trial

SCENARIOS = pathlib.Path(__file__).resolve().parents[1] / "scenarios"


def time_kernel(fn, repeats):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def bench_backend(name, model, scenario, repeats):
    kernels.use_backend(name)
    pR, pp, ax, mass, com, inertia = model._packed
    rng = np.random.default_rng(0)
    q = rng.uniform(model.limits.lower * 0.5, model.limits.upper * 0.5)
    qd = rng.uniform(-1, 1, model.n)
    g = np.ascontiguousarray(model.gravity)

    R, p = kernels.chain_frames(pR, pp, ax, q)
    ref = np.ascontiguousarray(p[-1])

    t_frames = time_kernel(lambda: kernels.chain_frames(pR, pp, ax, q), repeats)
    t_jac = time_kernel(lambda: kernels.point_jacobian(R, p, ax, ref, model.n), repeats)
    t_rne = time_kernel(
        lambda: kernels.rne(pR, pp, ax, q, qd, np.zeros(model.n), g, mass, com, inertia), repeats
    )

    t0 = time.perf_counter()
    rec = run_scenario_trial(scenario, 2, seed=42)
    t_trial = time.perf_counter() - t0
    ticks = int(round(rec.duration / scenario.sim.dt))
    return t_frames, t_jac, t_rne, t_trial, ticks


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=2000)
    args = ap.parse_args()

    model = load_arm_model(SCENARIOS / "arm_7dof.json")
    scenario = load_scenario(SCENARIOS / "default.json")

    rows = []
    for name in kernels.available_backends():
        rows.append((name, *bench_backend(name, model, scenario, args.repeats)))

    print(f"{'backend':<10} {'frames':>10} {'jacobian':>10} {'rne':>10} {'trial':>9} {'us/tick':>9}")
    for name, tf, tj, tr, tt, ticks in rows:
        print(
            f"{name:<10} {tf * 1e6:>8.2f}us {tj * 1e6:>8.2f}us {tr * 1e6:>8.2f}us "
            f"{tt:>8.2f}s {tt / ticks * 1e6:>8.1f}"
        )
    if len(rows) == 2:
        by_name = {r[0]: r for r in rows}
        if "compiled" in by_name and "python" in by_name:
            speedup = by_name["python"][4] / by_name["compiled"][4]
            print(f"\ncompiled backend runs trials {speedup:.1f}x faster than the NumPy fallback")


if __name__ == "__main__":
    main()
