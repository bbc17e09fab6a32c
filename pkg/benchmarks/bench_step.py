"""Per-step cost of the compiled and pure-Python Crank-Nicolson backends.

    python3 benchmarks/bench_step.py [--steps 2000] [--n 3001 12001]

Both backends advance the same perturbed soliton; the script reports the median
time per step and the max difference between the two final states.
"""
import argparse
import time

import numpy as np

from gpliouville.backend import COMPILED_AVAILABLE
from gpliouville.evolution import Stepper, perturbed_soliton
from gpliouville.grid import Grid
from gpliouville.soliton import soliton_state


def time_backend(grid, backend, steps, repeats=3):
    u = soliton_state(grid, 0.5)
    st = Stepper(grid, 0.5, 5e-4, (u[0], u[-1]), backend=backend)
    psi0 = perturbed_soliton(grid, 0.5, 1e-2)
    best = np.inf
    for _ in range(repeats):
        psi = psi0.copy()
        t0 = time.perf_counter()
        for _ in range(steps):
            psi = st.step(psi)
        best = min(best, (time.perf_counter() - t0) / steps)
    return best, psi


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--n", type=int, nargs="+", default=[3001, 12001])
    args = ap.parse_args()
    if not COMPILED_AVAILABLE:
        print("compiled kernel not built; only the python backend is timed")
    print(f"{'n_points':>9} {'python ms':>10} {'compiled ms':>12} {'speedup':>8} {'max |diff|':>11}")
    for n in args.n:
        grid = Grid(30.0, n)
        t_py, psi_py = time_backend(grid, "python", args.steps)
        if COMPILED_AVAILABLE:
            t_c, psi_c = time_backend(grid, "compiled", args.steps)
            diff = float(np.max(np.abs(psi_c - psi_py)))
            print(f"{n:9d} {1e3 * t_py:10.3f} {1e3 * t_c:12.3f} {t_py / t_c:8.2f} {diff:11.2e}")
        else:
            print(f"{n:9d} {1e3 * t_py:10.3f} {'-':>12} {'-':>8} {'-':>11}")


if __name__ == "__main__":
    main()
