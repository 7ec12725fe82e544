"""Reference runs, discrete error norms, convergence tables and shock location."""
import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np

from ..errors import DomainMismatch

COMPONENTS = ("rho", "rho_u", "rho_E", "sxx")
N_REF = 4000
REF_FORMAT = 2            # bump when solver changes invalidate cached references
DOMAIN_TOL = 0.02          # allowed endpoint mismatch, fraction of the domain length


@dataclass
class Reference:
    """Cell averages of a fine run: ``values`` has rows (rho, rho u, rho E, s_xx)."""
    nodes: np.ndarray
    values: np.ndarray
    periodic: bool = False

    @property
    def centers(self):
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def length(self):
        return self.nodes[-1] - self.nodes[0]

    def at(self, x):
        """Piecewise-linear interpolation of the averages placed at cell centres."""
        period = self.length if self.periodic else None
        return np.array([np.interp(x, self.centers, v, period=period) for v in self.values])

    def averages(self, nodes):
        """Exact-to-fourth-order averages of the reference over the cells of ``nodes``."""
        X, C = self._cumulative()
        nodes = np.asarray(nodes, dtype=np.float64)
        out = np.empty((self.values.shape[0], nodes.size - 1))
        for k in range(self.values.shape[0]):
            c = _lagrange4(X, C[k], nodes)
            out[k] = np.diff(c) / np.diff(nodes)
        return out

    def _cumulative(self):
        X, V = self.nodes, self.values
        if self.periodic:
            L = self.length
            X = np.concatenate((X[:-1] - L, X, X[1:] + L))
            V = np.concatenate((V, V, V), axis=1)
        else:
            # constant extension by one end cell on each side
            h0, h1 = X[1] - X[0], X[-1] - X[-2]
            X = np.concatenate(([X[0] - 2 * h0, X[0] - h0], X, [X[-1] + h1, X[-1] + 2 * h1]))
            V = np.concatenate((V[:, :1], V[:, :1], V, V[:, -1:], V[:, -1:]), axis=1)
        C = np.concatenate((np.zeros((V.shape[0], 1)), np.cumsum(V * np.diff(X), axis=1)), axis=1)
        return X, C


def _lagrange4(X, C, q):
    """Cubic Lagrange interpolation of samples (X, C) at ``q`` (nonuniform X)."""
    j = np.clip(np.searchsorted(X, q) - 2, 0, X.size - 4)
    xs = np.stack([X[j + m] for m in range(4)])
    cs = np.stack([C[j + m] for m in range(4)])
    out = np.zeros_like(q, dtype=np.float64)
    for a in range(4):
        term = cs[a].copy()
        for b in range(4):
            if a != b:
                term *= (q - xs[b]) / (xs[a] - xs[b])
        out += term
    return out


def reference_from_state(state, periodic=False):
    return Reference(state.nodes.copy(), np.vstack([state.U, state.sxx]), periodic)


def _cache_dir():
    d = os.environ.get("EPFLOW_CACHE")
    if d is None:
        base = os.environ.get("XDG_CACHE_HOME", os.path.join(os.path.expanduser("~"), ".cache"))
        d = os.path.join(base, "epflow")
    return d


def reference_solution(config, n_ref=N_REF, cache=True):
    """Fine-grid CCL run of ``config`` (cached on disk); returns a :class:`Reference`."""
    from .runner import run

    cfg = config.replace(n_cells=int(n_ref), mode="ccl")
    path = None
    if cache and os.environ.get("EPFLOW_CACHE", "1") != "0":
        digest = hashlib.sha1(f"{REF_FORMAT}|{cfg.key()}".encode()).hexdigest()[:16]
        path = os.path.join(_cache_dir(), f"ref-{cfg.name}-{n_ref}-{digest}.npz")
        if os.path.exists(path):
            with np.load(path) as z:
                return Reference(z["nodes"], z["values"], bool(z["periodic"]))
    rep = run(cfg, trajectory_every=0)
    ref = reference_from_state(rep.state, cfg.boundary.periodic)
    if path is not None:
        os.makedirs(os.path.dirname(path), exist_ok=True)
        tmp = path + f".{os.getpid()}.tmp.npz"
        np.savez(tmp, nodes=ref.nodes, values=ref.values, periodic=ref.periodic)
        os.replace(tmp, path)
    return ref


def _state_of(run_or_state):
    return getattr(run_or_state, "state", run_or_state)


def error_norms(run_or_state, reference, sample="center"):
    """Cell-width weighted (L1, L2) errors per component (rho, rho u, rho E, s_xx).

    ``sample='center'`` compares averages with the reference interpolated at
    cell centres; ``sample='average'`` compares with reference averages over
    the same cells, which removes the O(h^2) centre-versus-average offset.
    """
    st = _state_of(run_or_state)
    if isinstance(reference, (tuple, list)):
        reference = Reference(*reference)
    a, b = st.nodes[0], st.nodes[-1]
    ra, rb = reference.nodes[0], reference.nodes[-1]
    tol = DOMAIN_TOL * (rb - ra)
    if abs(a - ra) > tol or abs(b - rb) > tol:
        raise DomainMismatch(f"run domain ({a:.6g}, {b:.6g}) does not match reference "
                             f"({ra:.6g}, {rb:.6g})")
    vals = np.vstack([st.U, st.sxx])
    if sample == "center":
        ref = reference.at(st.centers)
    elif sample == "average":
        ref = reference.averages(st.nodes)
    else:
        raise ValueError("sample must be 'center' or 'average'")
    err = vals - ref
    h = st.widths
    l1 = np.abs(err) @ h
    l2 = np.sqrt((err * err) @ h)
    return l1, l2


def observed_orders(errs, cells):
    """log(e_k / e_k+1) / log(N_k+1 / N_k); NaN where undefined."""
    errs = np.asarray(errs, dtype=np.float64)
    out = np.full(errs.shape, np.nan)
    for k in range(1, len(cells)):
        with np.errstate(all="ignore"):
            r = errs[k - 1] / errs[k]
            ok = (errs[k - 1] > 0) & (errs[k] > 0) & np.isfinite(r)
            out[k] = np.where(ok, np.log(r) / math.log(cells[k] / cells[k - 1]), np.nan)
    return out


@dataclass
class ConvergenceTable:
    cells: list
    l1: np.ndarray          # (len(cells), 4)
    l2: np.ndarray
    runtimes: list

    @property
    def l1_orders(self):
        return observed_orders(self.l1, self.cells)

    @property
    def l2_orders(self):
        return observed_orders(self.l2, self.cells)


def convergence_table(config, cells, reference=None, n_ref=N_REF, sample="center"):
    """Errors and observed orders for ``config`` over the cell counts ``cells``."""
    from .runner import run_many

    cells = [int(n) for n in cells]
    if reference is None:
        reference = reference_solution(config, n_ref)
    reports = run_many(config.replace(n_cells=n) for n in cells)
    l1, l2, rt = [], [], []
    for rep in reports:
        if isinstance(rep, Exception):
            raise rep
        e1, e2 = error_norms(rep, reference, sample)
        l1.append(e1)
        l2.append(e2)
        rt.append(rep.wall_time)
    return ConvergenceTable(cells, np.array(l1), np.array(l2), rt)


def _fmt_order(v):
    return "  nan " if not np.isfinite(v) else f"{v:6.2f}"


def format_table(table, norm="l1"):
    errs = table.l1 if norm == "l1" else table.l2
    orders = observed_orders(errs, table.cells)
    head = f"{'N':>6} " + " ".join(f"{c:>10} {'order':>6}" for c in COMPONENTS)
    lines = [head]
    for k, n in enumerate(table.cells):
        cols = []
        for j in range(len(COMPONENTS)):
            o = "     -" if k == 0 else _fmt_order(orders[k, j])
            cols.append(f"{errs[k, j]:10.3E} {o}")
        lines.append(f"{n:>6} " + " ".join(cols))
    return "\n".join(lines)


# ------------------------------------------------------------- wave location


def crossings(x, v, level):
    """Positions where the piecewise-linear profile (x, v) crosses ``level``."""
    x, v = np.asarray(x), np.asarray(v)
    d = v - level
    idx = np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)
    t = d[idx] / (d[idx] - d[idx + 1])
    return x[idx] + t * (x[idx + 1] - x[idx])


def front_position(x, v, level):
    """Rightmost crossing of ``level``; NaN when there is none."""
    c = crossings(x, v, level)
    return float(c[-1]) if c.size else float("nan")


def width_minima(nodes, count=1):
    """Centres of the ``count`` narrowest cells."""
    w = np.diff(nodes)
    idx = np.argsort(w)[:count]
    return 0.5 * (nodes[idx] + nodes[idx + 1]), idx
