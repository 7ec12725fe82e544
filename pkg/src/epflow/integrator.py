"""Moving-mesh finite-volume update: ghost cells, Godunov fluxes, CFL and SSP-RK3.

Cell data live on a 1-D mesh of N cells.  Each step solves interface Riemann
problems, optionally adapts the mesh (MMCC mode), picks a CFL step and advances
(rho, rho u, rho E) in conservative form and s_xx along mesh trajectories.
"""
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .constitutive import sxx_rates, von_mises_limit
from .eos import eos_c2, eos_energy, eos_pressure
from .errors import ConfigError, NonPhysicalState
from .meshmotion import TAU, adapt, check_monotone
from .reconstruction import WENO_EPS, reconstruct_interfaces
from .riemann import LEFT, RIGHT, YIELD_TOL, connect_batch, solve_batch

CFL = 0.45
NGHOST = 2
KINDS = ("periodic", "wall", "piston", "free")
FREE_MAX_ITER = 60


# ------------------------------------------------------------------ data types


@dataclass(frozen=True)
class BoundarySide:
    kind: str
    velocity: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "wall" and self.velocity != 0.0:
            raise ConfigError("a wall has zero velocity; use 'piston' for a moving wall")

    @property
    def motion(self):
        return "fixed" if self.kind == "wall" else "lagrangian"

    @property
    def reflecting(self):
        return self.kind in ("wall", "piston")


@dataclass(frozen=True)
class BoundarySpec:
    left: BoundarySide
    right: BoundarySide

    def __post_init__(self):
        if (self.left.kind == "periodic") != (self.right.kind == "periodic"):
            raise ConfigError("periodic boundaries must be periodic on both sides")

    @property
    def periodic(self):
        return self.left.kind == "periodic"

    @classmethod
    def parse(cls, left, right):
        return cls(_side(left), _side(right))


def _side(text):
    if isinstance(text, BoundarySide):
        return text
    name, _, arg = str(text).partition(":")
    return BoundarySide(name.strip(), float(arg) if arg else 0.0)


PERIODIC = BoundarySpec(BoundarySide("periodic"), BoundarySide("periodic"))


@dataclass
class ConservedCell:
    """Cell averages on a mesh: rows of ``U`` are (rho, rho u, rho E)."""
    nodes: np.ndarray
    U: np.ndarray
    sxx: np.ndarray

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        self.U = np.asarray(self.U, dtype=np.float64)
        self.sxx = np.asarray(self.sxx, dtype=np.float64)
        n = self.nodes.size - 1
        if self.U.shape != (3, n) or self.sxx.shape != (n,):
            raise ValueError("cell arrays do not match the mesh")

    @property
    def n_cells(self):
        return self.sxx.size

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def centers(self):
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    def primitives(self, mat):
        rho = self.U[0]
        u = self.U[1] / rho
        e = self.U[2] / rho - 0.5 * u * u
        p = eos_pressure(rho, e, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0)
        return rho, u, p, self.sxx

    def totals(self):
        return self.U @ self.widths

    def copy(self):
        return ConservedCell(self.nodes.copy(), self.U.copy(), self.sxx.copy())

    @classmethod
    def from_primitive(cls, nodes, rho, u, p, sxx, mat):
        e = eos_energy(rho, p, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0)
        U = np.array([rho, rho * u, rho * (e + 0.5 * u * u)], dtype=np.float64)
        return cls(nodes, U, np.array(sxx, dtype=np.float64) * np.ones_like(U[0]))


@dataclass
class Fans:
    """Riemann solutions at the N+1 interfaces (independent of the mesh velocity)."""
    minus: np.ndarray       # (4, N+1) primitive left limits
    plus: np.ndarray
    p_star: np.ndarray
    u_star: np.ndarray
    rho_ls: np.ndarray
    s_ls: np.ndarray
    rho_rs: np.ndarray
    s_rs: np.ndarray
    s_left: np.ndarray      # outer wave speeds
    s_right: np.ndarray
    fallbacks: int = 0
    first_order: int = 0


@dataclass
class Godunov:
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    sxx: np.ndarray
    E: np.ndarray


# ------------------------------------------------------------------ ghosts


def populate_ghosts(state, mat, boundary):
    """Ghost-extended conserved rows (rho, rho u, rho E, s) and widths, N+4 cells."""
    n = state.n_cells
    if n < 4:
        raise ConfigError("at least four cells are required")
    g = NGHOST
    Q = np.empty((4, n + 2 * g))
    h = np.empty(n + 2 * g)
    Q[:3, g:g + n] = state.U
    Q[3, g:g + n] = state.sxx
    h[g:g + n] = state.widths
    if boundary.periodic:
        Q[:, :g] = Q[:, n:n + g]
        Q[:, g + n:] = Q[:, g:2 * g]
        h[:g] = h[n:n + g]
        h[g + n:] = h[g:2 * g]
        return Q, h
    for side, sl_ghost, sl_src in ((boundary.left, [1, 0], [g, g + 1]),
                                   (boundary.right, [g + n, g + n + 1], [g + n - 1, g + n - 2])):
        for dst, src in zip(sl_ghost, sl_src):
            if side.kind == "free":
                src = sl_src[0]
            h[dst] = h[src]
            Q[:, dst] = Q[:, src]
            if side.reflecting:
                rho = Q[0, src]
                u = Q[1, src] / rho
                ug = 2.0 * side.velocity - u
                Q[1, dst] = rho * ug
                Q[2, dst] = Q[2, src] + 0.5 * rho * (ug * ug - u * u)
    return Q, h


# --------------------------------------------------------------- interfaces


def _prim_from_Q(Q, prm):
    rho = Q[0]
    u = Q[1] / rho
    p = eos_pressure(rho, Q[2] / rho - 0.5 * u * u, prm[0], prm[1], prm[2], prm[3])
    return np.array([rho, u, p, Q[3]])


def free_surface(rho, u, p, s, sgn, mat, substeps=None):
    """Traction-free boundary state reached from an interior state along one wave.

    Returns (rho*, u*, p*, s*) with p* = s* (zero normal stress).
    """
    prm = mat.params()
    lim = mat.yield_limit
    s = min(max(s, -lim), lim)

    def curve(pt):
        r, v, sv, _, fail = connect_batch(rho, u, p, s, pt, sgn, prm, substeps)
        if fail[0]:
            raise NonPhysicalState("free-surface wave curve left the admissible range")
        return float(r[0]), float(v[0]), float(sv[0])

    def residual(pt):
        r, v, sv = curve(pt)
        return pt - sv, r, v, sv

    pt = float(s)
    gval, r, v, sv = residual(pt)
    lo, hi = -np.inf, np.inf
    for _ in range(FREE_MAX_ITER):
        scale = abs(pt) + rho * eos_c2(r, pt, sv, *prm[:4], 0.0)
        if abs(gval) <= 1e-13 * scale or hi - lo <= 1e-15 * scale:
            return r, v, sv, sv
        if gval > 0:
            hi = min(hi, pt)
        else:
            lo = max(lo, pt)
        b2 = eos_c2(r, pt, sv, *prm[:4], 0.0)
        plastic = abs(sv) >= lim * (1.0 - YIELD_TOL)
        slope = 1.0 if plastic else 1.0 + 4.0 * mat.shear_mu / (3.0 * r * b2)
        nxt = pt - gval / slope
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else nxt
        pt = nxt
        gval, r, v, sv = residual(pt)
    raise errors.NoConvergence("free-surface iteration did not converge")


def _wave_speeds(prim, prm):
    c2 = eos_c2(prim[0], prim[2], prim[3], *prm[:5])
    if np.any(~(c2 > 0)):
        raise NonPhysicalState("elastic sound speed radicand is not positive at an interface")
    return np.sqrt(c2)


def interface_fans(state, mat, boundary, nonlinear=True, substeps=None):
    """Reconstruct interface limits and solve every interface Riemann problem."""
    prm = mat.params()
    Q, h = populate_ghosts(state, mat, boundary)
    ifs = reconstruct_interfaces(Q, h, prm, WENO_EPS, nonlinear)
    minus = np.array([ifs.rho_m, ifs.u_m, ifs.p_m, ifs.s_m])
    plus = np.array([ifs.rho_p, ifs.u_p, ifs.p_p, ifs.s_p])
    # point values obey the yield bound just like the averages
    lim = mat.yield_limit
    np.clip(minus[3], -lim, lim, out=minus[3])
    np.clip(plus[3], -lim, lim, out=plus[3])
    n = state.n_cells
    left, right = boundary.left, boundary.right
    if left.reflecting:
        minus[:, 0] = plus[:, 0]
        minus[1, 0] = 2.0 * left.velocity - plus[1, 0]
    if right.reflecting:
        plus[:, n] = minus[:, n]
        plus[1, n] = 2.0 * right.velocity - minus[1, n]
    if left.kind == "free":
        minus[:, 0] = plus[:, 0]
    if right.kind == "free":
        plus[:, n] = minus[:, n]

    ps, us, rls, sls, rrs, srs, status = solve_batch(*minus, *plus, prm, substeps)
    bad = np.flatnonzero(status != errors.OK)
    first_order = 0
    if bad.size:
        # retry with first-order (cell-average) data on the failed interfaces
        avg = _prim_from_Q(Q, prm)
        minus[:, bad] = avg[:, bad + 1]
        plus[:, bad] = avg[:, bad + 2]
        out = solve_batch(*minus[:, bad], *plus[:, bad], prm, substeps)
        for arr, new in zip((ps, us, rls, sls, rrs, srs, status), out):
            arr[bad] = new
        first_order = int(bad.size)
        still = np.flatnonzero(status != errors.OK)
        if still.size:
            errors.raise_status(int(status[still[0]]), f"TRRSE failed at interface {still[0]}")

    for k, side in ((0, left), (n, right)):
        if side.reflecting:
            us[k] = side.velocity
        elif side.kind == "free":
            src = plus if k == 0 else minus
            sgn = RIGHT if k == 0 else LEFT
            r, v, pv, sv = free_surface(src[0, k], src[1, k], src[2, k], src[3, k], sgn, mat,
                                        substeps)
            ps[k], us[k] = pv, v
            rls[k] = rrs[k] = r
            sls[k] = srs[k] = sv
    if boundary.periodic:
        for arr in (ps, us, rls, sls, rrs, srs):
            arr[n] = arr[0]
        minus[:, n] = minus[:, 0]
        plus[:, n] = plus[:, 0]

    sl = minus[1] - _wave_speeds(minus, prm)
    sr = plus[1] + _wave_speeds(plus, prm)
    return Fans(minus, plus, ps, us, rls, sls, rrs, srs, sl, sr, ifs.fallbacks, first_order)


def godunov_values(fans, w, mat):
    """Fan states seen by interfaces moving at u* - w."""
    xdot = fans.u_star - w
    br = np.where(xdot <= fans.s_left, 0,
                  np.where(xdot <= fans.u_star, 1, np.where(xdot <= fans.s_right, 2, 3)))
    rho = np.choose(br, (fans.minus[0], fans.rho_ls, fans.rho_rs, fans.plus[0]))
    u = np.choose(br, (fans.minus[1], fans.u_star, fans.u_star, fans.plus[1]))
    p = np.choose(br, (fans.minus[2], fans.p_star, fans.p_star, fans.plus[2]))
    s = np.choose(br, (fans.minus[3], fans.s_ls, fans.s_rs, fans.plus[3]))
    e = eos_energy(rho, p, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0)
    return Godunov(rho, u, p, s, e + 0.5 * u * u)


def interface_flux(q, w):
    """Moving-interface flux of (rho, rho u, rho E); works on scalars or arrays."""
    rho, u, p, s, E = q.rho, q.u, q.p, q.sxx, q.E
    sig = p - s
    return np.array([rho * w, sig + rho * u * w, sig * u + rho * E * w])


def spatial_operator_L(state, w, mat, boundary, fans=None, nonlinear=True, substeps=None):
    """Rates for one RK stage.

    Returns (L, theta, xdot, flux, fans): L is -(F_{i+1/2} - F_{i-1/2}) per
    cell, theta the s_xx rate, xdot the node velocities u* - w.
    """
    if fans is None:
        fans = interface_fans(state, mat, boundary, nonlinear, substeps)
    q = godunov_values(fans, w, mat)
    F = interface_flux(q, w)
    if boundary.periodic:
        F[:, -1] = F[:, 0]
    L = -(F[:, 1:] - F[:, :-1])
    theta = sxx_rates(q.u, q.sxx, w, state.sxx, state.nodes, mat.shear_mu)
    return L, theta, fans.u_star - w, F, fans


# --------------------------------------------------------------- time step


def cfl_dt(state, w, mat, cfl=CFL, widths=None):
    """CFL step 0.45 min dx/(c + |w|) with c the elastic sound speed of the averages."""
    rho, _, p, s = state.primitives(mat)
    c2 = eos_c2(rho, p, s, *mat.params()[:5])
    if np.any(~(c2 > 0)):
        i = int(np.flatnonzero(~(c2 > 0))[0])
        raise NonPhysicalState(f"elastic sound speed radicand not positive in cell {i}")
    wc = 0.5 * np.abs(w[1:] + w[:-1])
    dx = state.widths if widths is None else widths
    return float(cfl * np.min(dx / (np.sqrt(c2) + wc)))


def max_mesh_fraction(old, new, keep=0.5):
    """Largest theta with old + theta (new - old) keeping every width >= keep * min(old, new)."""
    d0, d1 = np.diff(old), np.diff(new)
    shrink = d1 < d0
    if not np.any(shrink):
        return np.inf
    a, b = d0[shrink], d1[shrink]
    return float(np.min((a - keep * np.minimum(a, b)) / (a - b)))


# --------------------------------------------------------------- RK3


@dataclass
class StepInfo:
    boundary_flux: np.ndarray      # time-integrated (F_right - F_left) over the step
    u_faces: np.ndarray            # interface contact speeds at t^n
    fallbacks: int = 0
    first_order: int = 0


def rk3_step(state, w, dt, mat, boundary, fans0=None, nonlinear=True, substeps=None):
    """One SSP-RK3 step with the mesh velocity u* - w frozen in w; returns (state, info)."""
    y0 = mat.yield_Y0
    x0, dxU0, s0 = state.nodes, state.U * state.widths, state.sxx
    cur = state
    fans = fans0
    weights = ((0.0, 1.0), (0.75, 0.25), (1.0 / 3.0, 2.0 / 3.0))
    flux_w = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)
    bflux = np.zeros(3)
    fb = fo = 0
    u_n = None
    for k, (a, b) in enumerate(weights):
        L, theta, xdot, F, fans = spatial_operator_L(cur, w, mat, boundary, fans, nonlinear,
                                                     substeps)
        if u_n is None:
            u_n = fans.u_star.copy()
        fb += fans.fallbacks
        fo += fans.first_order
        bflux += flux_w[k] * dt * (F[:, -1] - F[:, 0])
        x = a * x0 + b * (cur.nodes + dt * xdot)
        check_monotone(x, f"RK stage {k + 1} mesh")
        dxU = a * dxU0 + b * (cur.U * cur.widths + dt * L)
        s_hat = a * s0 + b * (cur.sxx + dt * theta)
        cur = ConservedCell(x, dxU / np.diff(x), von_mises_limit(s_hat, y0))
        if np.any(~(cur.U[0] > 0)):
            raise NonPhysicalState(f"non-positive density after RK stage {k + 1}")
        fans = None
    return cur, StepInfo(bflux, u_n, fb, fo)


# --------------------------------------------------------------- pipeline


@dataclass
class Ledger:
    """Conservation bookkeeping: totals and time-integrated boundary fluxes."""
    initial: np.ndarray
    boundary: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def expected(self):
        return self.initial - self.boundary

    def drift(self, totals):
        scale = np.maximum(np.abs(self.initial), np.abs(totals))
        scale = np.where(scale > 0, scale, 1.0)
        return np.abs(totals - self.expected()) / scale


@dataclass
class Simulation:
    """Owner of one evolving solution; :meth:`advance` performs a full step."""
    state: ConservedCell
    mat: object
    boundary: BoundarySpec
    mode: str = "mmcc"
    tau: float = TAU
    cfl: float = CFL
    sweeps: int = None
    nonlinear: bool = True
    monitor_scales: tuple = None
    t: float = 0.0
    step: int = 0
    dt_prev: float = None
    history: float = None
    ledger: Ledger = None
    last_w: np.ndarray = None
    fallbacks: int = 0
    first_order: int = 0

    def __post_init__(self):
        if self.mode not in ("mmcc", "ccl"):
            raise ConfigError(f"mode must be 'mmcc' or 'ccl', got {self.mode!r}")
        if self.ledger is None:
            self.ledger = Ledger(self.state.totals())

    def advance(self, dt_max=np.inf):
        """Run steps (i) to (vi) once; returns the step size used."""
        try:
            return self._advance(dt_max)
        except errors.SolverError as exc:
            if exc.step is None:
                exc.step, exc.time = self.step, self.t
            raise

    def _advance(self, dt_max):
        st, mat, bc = self.state, self.mat, self.boundary
        fans0 = interface_fans(st, mat, bc, self.nonlinear)
        u_n = fans0.u_star
        n1 = st.nodes.size
        w = np.zeros(n1)
        new_nodes = None
        if self.mode == "mmcc" and self.dt_prev is not None:
            w, new_nodes, self.history, _ = adapt(
                st.nodes, u_n, self.dt_prev, st.U[0], st.sxx, self.history, self.tau,
                self.sweeps, bc.periodic, self.monitor_scales)
        if bc.left.motion == "fixed":
            w[0] = u_n[0]
        if bc.right.motion == "fixed":
            w[-1] = u_n[-1]
        widths = None
        if new_nodes is not None:
            widths = np.minimum(st.widths, np.diff(new_nodes))
        dt = cfl_dt(st, w, mat, self.cfl, widths)
        if new_nodes is not None:
            dt = min(dt, max_mesh_fraction(st.nodes, new_nodes) * self.dt_prev)
        dt = min(dt, dt_max)
        if not dt > 0:
            raise errors.SolverFailure("time step collapsed to zero")
        new, info = rk3_step(st, w, dt, mat, bc, fans0, self.nonlinear)
        self.ledger.boundary = self.ledger.boundary + info.boundary_flux
        self.state = new
        self.last_w = w
        self.fallbacks += info.fallbacks
        self.first_order += info.first_order
        self.dt_prev = dt
        self.t += dt
        self.step += 1
        return dt


def advance_pipeline(sim, dt_max=np.inf):
    """Functional wrapper: advance ``sim`` by one step and return it."""
    sim.advance(dt_max)
    return sim
