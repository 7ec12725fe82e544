"""Moving-mesh adaptation: monitor function, smoothing and the 1-D MMPDE solve.

A new mesh is produced from the Lagrangian prediction by one backward-Euler
step of the gradient-flow MMPDE for the computational coordinate, followed by
piecewise-linear inversion of the coordinate map at the uniform computational
nodes.
"""
from dataclasses import dataclass, field

import numpy as np

from ._jit import jit, use_numba
from .errors import MeshTangled, SolverFailure

TAU = 0.01
RATIO_CAP = 10.0
PIVOT_TOL = 1e-300


def check_monotone(x, what="mesh"):
    d = np.diff(x)
    if not np.all(d > 0):
        bad = int(np.argmin(d))
        raise MeshTangled(f"{what} not strictly increasing at node {bad + 1} (width {d[bad]:.3e})")


@dataclass
class MovingMesh:
    nodes: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("mesh needs at least two nodes")
        check_monotone(self.nodes)

    @property
    def n_cells(self):
        return self.nodes.size - 1

    @property
    def computational_nodes(self):
        return np.linspace(0.0, 1.0, self.nodes.size)

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def centers(self):
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])


@dataclass
class MonitorField:
    values: np.ndarray
    history_ratio: float = field(default=1.0)

    @property
    def ratio(self):
        return float(self.values.max() / self.values.min())


def lagrangian_predict(nodes, u_faces, dt_prev):
    if not dt_prev > 0:
        raise ValueError("dt_prev must be positive")
    x = np.asarray(nodes) + np.asarray(u_faces) * dt_prev
    check_monotone(x, "Lagrangian prediction")
    return x


def _node_gradient(values, centers, periodic, length):
    """Difference quotients over adjacent cell centres, placed at the nodes."""
    g = np.empty(values.size + 1)
    g[1:-1] = np.diff(values) / np.diff(centers)
    if periodic:
        g[0] = g[-1] = (values[0] - values[-1]) / (centers[0] + length - centers[-1])
    else:
        g[0], g[-1] = g[1], g[-2]
    return g


def monitor_raw(rho_avgs, sxx_avgs, predicted, old, periodic=False, scales=None):
    """Unscaled monitor on the nodes of the predicted Lagrangian mesh.

    Densities are carried onto the prediction by mass conservation; the
    deviatoric stress gradient uses the old mesh.  ``scales=(rho_ref, L_ref,
    s_ref)`` nondimensionalises both gradients before the 1 is added.
    """
    predicted = np.asarray(predicted, dtype=np.float64)
    old = np.asarray(old, dtype=np.float64)
    rho_l = np.asarray(rho_avgs) * np.diff(old) / np.diff(predicted)
    c_new = 0.5 * (predicted[1:] + predicted[:-1])
    c_old = 0.5 * (old[1:] + old[:-1])
    drho = _node_gradient(rho_l, c_new, periodic, predicted[-1] - predicted[0])
    ds = _node_gradient(np.asarray(sxx_avgs, dtype=np.float64), c_old, periodic, old[-1] - old[0])
    if scales is not None:
        rho_ref, l_ref, s_ref = scales
        drho = drho * (l_ref / rho_ref)
        ds = ds * (l_ref / s_ref)
    ds_max = np.abs(ds).max()
    alpha = (np.abs(drho).max() / ds_max) ** 2 if ds_max > 0 else 0.0
    values = np.sqrt(1.0 + drho * drho + alpha * ds * ds)
    return MonitorField(values, float(values.max() / values.min()))


def monitor_scale(raw, history=None):
    """Affine squeeze of the monitor range; returns (scaled field, updated history)."""
    v = np.asarray(raw.values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    hist = max(hi / lo, 1.0 if history is None else float(history))
    if hi - lo <= 1e-14 * hi:
        return MonitorField(v.copy(), hist), hist
    crit = min(RATIO_CAP, hist) * lo
    out = lo + (crit - lo) / (hi - lo) * (v - lo)
    return MonitorField(out, hist), hist


def default_sweeps(n_cells):
    return max(1, int(round(n_cells / 40)))


def monitor_smooth(values, sweeps=None):
    m = np.array(getattr(values, "values", values), dtype=np.float64)
    if sweeps is None:
        sweeps = default_sweeps(m.size - 1)
    for _ in range(int(sweeps)):
        nxt = np.empty_like(m)
        nxt[1:-1] = 0.25 * m[2:] + 0.5 * m[1:-1] + 0.25 * m[:-2]
        nxt[0] = 0.75 * m[0] + 0.25 * m[1]
        nxt[-1] = 0.75 * m[-1] + 0.25 * m[-2]
        m = nxt
    if isinstance(values, MonitorField):
        return MonitorField(m, values.history_ratio)
    return m


def _thomas(lower, diag, upper, rhs):
    """Tridiagonal solve; returns (solution, ok).  ``lower[0]`` and ``upper[-1]`` are ignored."""
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    x = np.empty(n)
    piv = diag[0]
    if abs(piv) < PIVOT_TOL:
        return x, False
    c[0] = upper[0] / piv
    d[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i] * c[i - 1]
        if abs(piv) < PIVOT_TOL:
            return x, False
        c[i] = upper[i] / piv
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / piv
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x, True


_thomas_nb = jit(_thomas)


def mmpde_system(xl, monitor, tau, dt):
    """Tridiagonal coefficients (lower, diag, upper, rhs) for the interior nodes."""
    m = np.asarray(getattr(monitor, "values", monitor), dtype=np.float64)
    n = xl.size - 1
    h = np.diff(xl)
    xc = 0.5 * (xl[1:] + xl[:-1])
    mc = 0.5 * (m[1:] + m[:-1])
    k = np.arange(1, n)
    lam = dt * m[k] / (tau * (xc[k] - xc[k - 1]))
    cr = lam / (mc[k] * h[k])
    cl = lam / (mc[k - 1] * h[k - 1])
    rhs = k / n
    rhs = rhs.astype(np.float64)
    rhs[-1] += cr[-1]              # xi_N = 1 moved to the right-hand side
    return -cl, 1.0 + cl + cr, -cr, rhs


def mmpde_solve(xl, monitor, tau=TAU, dt=None):
    """New physical nodes from the Lagrangian nodes ``xl`` and a node monitor."""
    if dt is None or not dt > 0:
        raise ValueError("dt must be positive")
    xl = np.asarray(xl, dtype=np.float64)
    check_monotone(xl, "Lagrangian mesh")
    n = xl.size - 1
    lower, diag, upper, rhs = mmpde_system(xl, monitor, tau, dt)
    if not np.all(np.isfinite(diag)):
        raise SolverFailure("non-finite MMPDE coefficients")
    solve = _thomas_nb if use_numba() else _thomas
    inner, ok = solve(lower, diag, upper, rhs)
    if not ok:
        raise SolverFailure("zero pivot in the MMPDE tridiagonal system")
    xi = np.concatenate(([0.0], inner, [1.0]))
    check_monotone(xi, "computational mesh")
    new = np.interp(np.arange(n + 1) / n, xi, xl)
    new[0], new[-1] = xl[0], xl[-1]
    check_monotone(new, "adapted mesh")
    return new


def relative_velocity(old, new, u_faces, dt_prev):
    if not dt_prev > 0:
        raise ValueError("dt_prev must be positive")
    w = np.asarray(u_faces) - (np.asarray(new) - np.asarray(old)) / dt_prev
    w[0] = w[-1] = 0.0
    return w


def adapt(nodes, u_faces, dt_prev, rho_avgs, sxx_avgs, history=None, tau=TAU,
          sweeps=None, periodic=False, scales=None):
    """Mesh-motion steps (ii) to (iv): returns (w, new nodes, updated history, monitor)."""
    xl = lagrangian_predict(nodes, u_faces, dt_prev)
    raw = monitor_raw(rho_avgs, sxx_avgs, xl, nodes, periodic, scales)
    scaled, hist = monitor_scale(raw, history)
    smooth = monitor_smooth(scaled, sweeps)
    new = mmpde_solve(xl, smooth, tau, dt_prev)
    return relative_velocity(nodes, new, u_faces, dt_prev), new, hist, smooth
