"""Time the hot kernels and a full MMCC step under both backends.

    python benchmarks/bench_kernels.py [--cells 400] [--repeat 5]
"""
import argparse
import time

import numpy as np

from epflow import _jit
from epflow import integrator as itg
from epflow.harness import problem_wilkins
from epflow.harness.runner import make_simulation
from epflow.meshmotion import mmpde_solve
from epflow.reconstruction import reconstruct_interfaces
from epflow.riemann import solve_batch


def best_of(fn, repeat):
    fn()                                   # warm-up (includes numba compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n):
    cfg = problem_wilkins(n_cells=n)
    sim = make_simulation(cfg)
    for _ in range(20):
        sim.advance()
    st, mat, bc = sim.state, cfg.material, cfg.boundary
    Q, h = itg.populate_ghosts(st, mat, bc)
    fans = itg.interface_fans(st, mat, bc)
    prm = mat.params()
    xl = st.nodes
    monitor = 1.0 + np.abs(np.gradient(np.concatenate((st.U[0], st.U[0][-1:]))))
    monitor = np.minimum(monitor / monitor.min(), 10.0)

    def full_step():
        s = make_simulation(cfg)
        s.state, s.dt_prev, s.history = st.copy(), sim.dt_prev, sim.history
        s.advance()

    return {
        "trrse": lambda: solve_batch(*fans.minus, *fans.plus, prm),
        "reconstruct": lambda: reconstruct_interfaces(Q, h, prm),
        "mmpde": lambda: mmpde_solve(xl, monitor, 0.01, sim.dt_prev),
        "full step": full_step,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    prev = _jit.backend()
    results = {}
    try:
        for name in ("numba", "numpy"):
            _jit.set_backend(name)
            for label, fn in cases(args.cells).items():
                results.setdefault(label, {})[name] = best_of(fn, args.repeat)
    finally:
        _jit.set_backend(prev)
    print(f"N = {args.cells} cells, best of {args.repeat}")
    print(f"{'kernel':<12} {'numba [ms]':>11} {'numpy [ms]':>11} {'speed-up':>9}")
    for label, r in results.items():
        print(f"{label:<12} {1e3 * r['numba']:11.3f} {1e3 * r['numpy']:11.3f} "
              f"{r['numpy'] / r['numba']:9.1f}")


if __name__ == "__main__":
    main()
