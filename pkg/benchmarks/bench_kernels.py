"""Time the cable-length kernel under numba and plain numpy.

The default workload is one identification Jacobian: 2 * 24 perturbed
parameter rows against 120 joint configurations.

    python3 benchmarks/bench_kernels.py [--rows 48] [--points 120] [--repeat 50]
"""
import argparse
import time
from pathlib import Path

import numpy as np

from cablecal import _accel
from cablecal._kernels import N_FULL, cable_lengths
from cablecal.data import load_scenario

SCENARIO = Path(__file__).resolve().parent.parent / "configs" / "scenario_noiseless.json"


def workload(rows, points, seed=0):
    rng = np.random.default_rng(seed)
    base = load_scenario(SCENARIO).nominal.as_vector()
    params = base + rng.normal(0, 1e-6, (rows, N_FULL))
    qs = rng.uniform(-np.pi / 2, np.pi / 2, (points, 6))
    return params, qs


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), float(np.median(times))


def run(rows=48, points=120, repeat=50):
    params, qs = workload(rows, points)
    backends = ["numpy"] + (["numba"] if _accel.HAVE_NUMBA else [])
    results = {}
    for b in backends:
        cable_lengths(params, qs, backend=b)  # compile / warm up
        results[b] = best_of(lambda: cable_lengths(params, qs, backend=b), repeat)
    if len(backends) == 2:
        diff = np.max(np.abs(cable_lengths(params, qs, backend="numba") - cable_lengths(params, qs, backend="numpy")))
    else:
        diff = None
    return results, diff


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=48)
    ap.add_argument("--points", type=int, default=120)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args(argv)
    results, diff = run(args.rows, args.points, args.repeat)
    print(f"{args.rows} parameter rows x {args.points} configurations, {args.repeat} repeats")
    for b, (best, med) in results.items():
        print(f"  {b:<6} best {best * 1e3:8.3f} ms   median {med * 1e3:8.3f} ms")
    if "numba" in results:
        print(f"  speedup (best) {results['numpy'][0] / results['numba'][0]:.1f}x, max |numba - numpy| = {diff:.2e} mm")
    else:
        print("  numba not installed; numpy only")


if __name__ == "__main__":
    main()
