"""Step time of the simulator with the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--steps 200] [--grids 32x64,64x128]

Both paths run in one process (the use_numba flag is what DISKHOPF_NO_NUMBA=1
sets globally). The first numba call compiles, so each path gets a warm-up.
"""
import argparse
import time

import numpy as np

from diskhopf.model import builtin
from diskhopf.pipelines import BRUSSELATOR_EQ, PREDPREY_EQ
from diskhopf.simulator import PolarGrid, Simulator, initial_condition

CASES = {"predprey": (3.0, PREDPREY_EQ), "brusselator": (2.0, BRUSSELATOR_EQ)}


def time_steps(name, shape, use_numba, steps, warmup=5):
    tau, eq = CASES[name]
    model = builtin(name)
    sim = Simulator(model, tau, PolarGrid(*shape, model.domain_R), use_numba=use_numba)
    state = sim.init_state(initial_condition("perturbed_cos", 0.01, 0.0, eq))
    for _ in range(warmup):
        state = sim.step(state)
    t0 = time.perf_counter()
    for _ in range(steps):
        state = sim.step(state)
    return (time.perf_counter() - t0) / steps, state


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--grids", default="32x64,64x128")
    args = ap.parse_args(argv)
    print(f"{'model':12s} {'grid':>8s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s} {'max diff':>10s}")
    for g in args.grids.split(","):
        nr, nt = (int(x) for x in g.split("x"))
        for name in CASES:
            t_np, s_np = time_steps(name, (nr, nt), False, args.steps)
            t_nb, s_nb = time_steps(name, (nr, nt), True, args.steps)
            diff = max(np.max(np.abs(s_np.u - s_nb.u)), np.max(np.abs(s_np.v - s_nb.v)))
            print(f"{name:12s} {g:>8s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
