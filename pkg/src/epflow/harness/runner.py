"""Drive a simulation to its final time and collect what happened on the way."""
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import MeshTangled, SolverError
from ..integrator import Simulation

MAX_STEPS = 10_000_000


@dataclass
class RunReport:
    config: object
    state: object                 # final ConservedCell
    times: np.ndarray             # t after every step (starting with 0)
    dt: np.ndarray
    trajectory_t: np.ndarray
    trajectory: np.ndarray        # rows of node coordinates
    conservation: np.ndarray      # rows (t, mass, momentum, energy, drift_max)
    events: list = field(default_factory=list)
    mesh_tangled: int = 0
    fallbacks: int = 0
    first_order: int = 0
    wall_time: float = 0.0

    @property
    def steps(self):
        return self.dt.size

    @property
    def t_final(self):
        return float(self.times[-1])

    @property
    def periodic(self):
        return self.config.boundary.periodic

    def primitives(self):
        return self.state.primitives(self.config.material)

    def max_drift(self):
        return float(self.conservation[:, 4].max())


def make_simulation(config):
    return Simulation(config.initial_state(), config.material, config.boundary, mode=config.mode,
                      tau=config.tau, cfl=config.cfl, sweeps=config.sweeps)


def run(config, trajectory_every=1, on_step=None):
    """Advance ``config`` to ``t_final``; the last step is shortened to land on it.

    ``trajectory_every=0`` records only the first and last meshes.
    """
    sim = make_simulation(config)
    t_end = float(config.t_final)
    times, dts = [0.0], []
    traj_t, traj = [0.0], [sim.state.nodes.copy()]
    cons = [_ledger_row(sim)]
    events = []
    t0 = _time.perf_counter()
    while sim.t < t_end:
        if sim.step >= MAX_STEPS:
            raise SolverError("step limit reached", sim.step, sim.t)
        remaining = t_end - sim.t
        dt = sim.advance(remaining)
        if dt >= remaining:
            sim.t = t_end
        times.append(sim.t)
        dts.append(dt)
        cons.append(_ledger_row(sim))
        if trajectory_every and sim.step % trajectory_every == 0 or sim.t >= t_end:
            traj_t.append(sim.t)
            traj.append(sim.state.nodes.copy())
        if on_step is not None:
            on_step(sim)
    if sim.fallbacks:
        events.append(f"reconstruction fell back to cell averages at {sim.fallbacks} faces")
    if sim.first_order:
        events.append(f"first-order Riemann retry at {sim.first_order} interfaces")
    return RunReport(config, sim.state, np.array(times), np.array(dts), np.array(traj_t),
                     np.array(traj), np.array(cons), events, 0, sim.fallbacks, sim.first_order,
                     _time.perf_counter() - t0)


def _ledger_row(sim):
    tot = sim.state.totals()
    return [sim.t, *tot, float(sim.ledger.drift(tot).max())]


def _run_quiet(config):
    try:
        return run(config, trajectory_every=0)
    except MeshTangled as exc:
        return exc


def worker_count(n_jobs):
    env = os.environ.get("EPFLOW_WORKERS")
    cap = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(cap, n_jobs))


def run_many(configs):
    """Run independent configurations, in parallel when ``EPFLOW_WORKERS`` allows.

    A MeshTangled failure comes back as the exception object so one tangled
    run does not hide the others; anything else propagates.
    """
    configs = list(configs)
    workers = worker_count(len(configs))
    if workers == 1:
        out = [_run_quiet(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_run_quiet, configs))
    return out
