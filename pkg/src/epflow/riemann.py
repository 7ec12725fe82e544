"""Two-rarefaction Riemann solver with elastic waves (TRRSE).

Both nonlinear waves are treated as simple (rarefaction) waves.  Across a
left-facing wave the state obeys, per unit pressure change,

    drho/dp = 1/b^2,   du/dp = -C/(rho b^2),   ds/dp = -(4 mu/3)/(rho b^2)

with b^2 = a^2 - rho0 Gamma0 s/rho^2, C the local wave speed (c while elastic,
b once s sits on the yield surface and would be pushed outward, in which case
ds/dp = 0).  The right-facing family flips the sign of du/dp.  The star
pressure is found by a safeguarded Newton iteration whose derivative comes
from the same ODE right-hand side at the end of each wave curve.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import errors
from ._jit import jit, shared, use_numba
from .eos import ETA_MAX, ETA_MIN, PrimitiveState, check_density, eos_b2, eos_c2, eos_energy

MAX_SUBSTEPS = 64
REL_STEP = 2e-3          # max |dp| per RK4 substep, relative to rho*b^2
MAX_ITER = 100
TOL_U = 1e-13            # |u*_L - u*_R| <= TOL_U * (c_L + c_R)
TOL_P = 1e-15            # Newton step floor relative to |p| + rho*b^2
YIELD_TOL = 1e-12
LEFT = -1.0
RIGHT = 1.0


@dataclass(frozen=True)
class RiemannFan:
    qL: PrimitiveState
    qLstar: PrimitiveState
    qRstar: PrimitiveState
    qR: PrimitiveState
    u_star: float
    sL: float
    sR: float
    iterations: int = 0


# ------------------------------------------------------------ shared arithmetic


@shared
def wave_rhs(rho, p, s, sgn, plastic, rho0, a0, sh, g0, mu):
    b2 = eos_b2(rho, p, s, rho0, a0, sh, g0)
    k = (1.0 - plastic) * 4.0 * mu / (3.0 * rho)
    ce = np.sqrt(b2 + k)
    return 1.0 / b2, sgn * ce / (rho * b2), -k / b2


@shared
def rk4_wave(rho, u, s, p, h, sgn, plastic, rho0, a0, sh, g0, mu):
    r1, v1, q1 = wave_rhs(rho, p, s, sgn, plastic, rho0, a0, sh, g0, mu)
    r2, v2, q2 = wave_rhs(rho + 0.5 * h * r1, p + 0.5 * h, s + 0.5 * h * q1, sgn, plastic,
                          rho0, a0, sh, g0, mu)
    r3, v3, q3 = wave_rhs(rho + 0.5 * h * r2, p + 0.5 * h, s + 0.5 * h * q2, sgn, plastic,
                          rho0, a0, sh, g0, mu)
    r4, v4, q4 = wave_rhs(rho + h * r3, p + h, s + h * q3, sgn, plastic, rho0, a0, sh, g0, mu)
    w = h / 6.0
    return (rho + w * (r1 + 2.0 * r2 + 2.0 * r3 + r4),
            u + w * (v1 + 2.0 * v2 + 2.0 * v3 + v4),
            s + w * (q1 + 2.0 * q2 + 2.0 * q3 + q4))


# --------------------------------------------------------------- numba kernels


@jit
def connect_scalar(rho, u, p, s, p_t, sgn, prm, nmax, rel_step):
    """Follow one wave family from (rho, u, p, s) to pressure ``p_t``.

    Returns (rho, u, s, du/dp at the end, status).
    """
    rho0, a0, sh, g0, mu = prm[0], prm[1], prm[2], prm[3], prm[4]
    lim = 2.0 * prm[5] / 3.0
    dp = p_t - p
    b2 = eos_b2(rho, p, s, rho0, a0, sh, g0)
    if not b2 > 0.0:
        return rho, u, s, 0.0, errors.NONPHYSICAL
    plastic = 1.0 if (mu > 0.0 and abs(s) >= lim * (1.0 - YIELD_TOL)) else 0.0
    if dp != 0.0:
        if rel_step > 0.0:
            n = int(math.ceil(abs(dp) / (rho * b2) / rel_step))
            n = max(1, min(n, nmax))
        else:
            n = nmax
        h = dp / n
        p_cur = p
        for i in range(n):
            p_next = p_t if i == n - 1 else p + (i + 1) * h
            hh = p_next - p_cur
            at_yield = mu > 0.0 and abs(s) >= lim * (1.0 - YIELD_TOL)
            plastic = 1.0 if (at_yield and s * (-hh) > 0.0) else 0.0
            r1, u1, s1 = rk4_wave(rho, u, s, p_cur, hh, sgn, plastic, rho0, a0, sh, g0, mu)
            if plastic == 0.0 and abs(s1) > lim:
                target = lim if s1 > 0.0 else -lim
                th = (target - s) / (s1 - s)
                for _ in range(4):
                    rt, ut, st = rk4_wave(rho, u, s, p_cur, th * hh, sgn, 0.0, rho0, a0, sh, g0, mu)
                    if st == s:
                        break
                    th = min(max(th * (target - s) / (st - s), 0.0), 1.0)
                rt, ut, st = rk4_wave(rho, u, s, p_cur, th * hh, sgn, 0.0, rho0, a0, sh, g0, mu)
                p_mid = p_cur + th * hh
                r1, u1, s1 = rk4_wave(rt, ut, target, p_mid, p_next - p_mid, sgn, 1.0,
                                      rho0, a0, sh, g0, mu)
                plastic = 1.0
            rho, u, s = r1, u1, s1
            p_cur = p_next
            if not (rho > rho0 * ETA_MIN and rho < rho0 * ETA_MAX) or not math.isfinite(u):
                return rho, u, s, 0.0, errors.NONPHYSICAL
    _, dudp, _ = wave_rhs(rho, p_t, s, sgn, plastic, rho0, a0, sh, g0, mu)
    if not math.isfinite(dudp):
        return rho, u, s, 0.0, errors.NONPHYSICAL
    return rho, u, s, dudp, errors.OK


@jit
def trrse_scalar(rL, uL, pL, sL, rR, uR, pR, sR, prm, nmax, rel_step):
    """Returns (p*, u*, rho*_L, s*_L, rho*_R, s*_R, iterations, status)."""
    rho0, a0, sh, g0, mu = prm[0], prm[1], prm[2], prm[3], prm[4]
    b2L = eos_b2(rL, pL, sL, rho0, a0, sh, g0)
    b2R = eos_b2(rR, pR, sR, rho0, a0, sh, g0)
    c2L = b2L + 4.0 * mu / (3.0 * rL)
    c2R = b2R + 4.0 * mu / (3.0 * rR)
    if not (b2L > 0.0 and b2R > 0.0 and c2L > 0.0 and c2R > 0.0):
        return pL, uL, rL, sL, rR, sR, 0, errors.NONPHYSICAL
    cL = math.sqrt(c2L)
    cR = math.sqrt(c2R)
    zL = rL * b2L / cL
    zR = rR * b2R / cR
    p = (zR * pL + zL * pR + zL * zR * (uL - uR)) / (zL + zR)
    p_ok = 0.5 * (pL + pR)
    p_floor = min(pL, pR)
    scale = max(rL * b2L, rR * b2R)
    tol_u = TOL_U * (cL + cR)
    lo = -np.inf
    hi = np.inf
    for it in range(MAX_ITER):
        aL, vL, qL, dL, stL = connect_scalar(rL, uL, pL, sL, p, LEFT, prm, nmax, rel_step)
        aR, vR, qR, dR, stR = connect_scalar(rR, uR, pR, sR, p, RIGHT, prm, nmax, rel_step)
        if stL != errors.OK or stR != errors.OK:
            if p < p_floor:
                lo = max(lo, p)
            else:
                hi = min(hi, p)
            if math.isfinite(lo) and math.isfinite(hi):
                p = 0.5 * (lo + hi)
            else:
                p = 0.5 * (p + p_ok)
            continue
        p_ok = p
        f = vL - vR
        if abs(f) <= tol_u:
            return p, 0.5 * (vL + vR), aL, qL, aR, qR, it + 1, errors.OK
        if f > 0.0:
            lo = p
        else:
            hi = p
        pn = p - f / (dL - dR)
        if not (pn > lo and pn < hi):
            pn = 0.5 * (lo + hi)
        if abs(pn - p) <= TOL_P * (abs(p) + scale):
            return p, 0.5 * (vL + vR), aL, qL, aR, qR, it + 1, errors.OK
        p = pn
    return p, 0.5 * (uL + uR), rL, sL, rR, sR, MAX_ITER, errors.NO_CONVERGENCE


@jit
def trrse_batch_nb(rL, uL, pL, sL, rR, uR, pR, sR, prm, nmax, rel_step):
    n = rL.shape[0]
    ps = np.empty(n)
    us = np.empty(n)
    rLs = np.empty(n)
    sLs = np.empty(n)
    rRs = np.empty(n)
    sRs = np.empty(n)
    status = np.zeros(n, dtype=np.int64)
    for i in range(n):
        (ps[i], us[i], rLs[i], sLs[i], rRs[i], sRs[i], _,
         status[i]) = trrse_scalar(rL[i], uL[i], pL[i], sL[i], rR[i], uR[i], pR[i], sR[i],
                                   prm, nmax, rel_step)
    return ps, us, rLs, sLs, rRs, sRs, status


# ---------------------------------------------------------------- numpy kernels


def connect_np(rho, u, p, s, p_t, sgn, prm, nmax, rel_step):
    """Vectorised twin of :func:`connect_scalar`; returns arrays plus a failure mask."""
    rho0, a0, sh, g0, mu, Y0 = (float(v) for v in prm)
    lim = 2.0 * Y0 / 3.0
    rho = np.array(rho, dtype=float, copy=True)
    u = np.array(u, dtype=float, copy=True)
    s = np.array(s, dtype=float, copy=True)
    p = np.asarray(p, dtype=float)
    p_t = np.broadcast_to(np.asarray(p_t, dtype=float), rho.shape)
    sgn = np.broadcast_to(np.asarray(sgn, dtype=float), rho.shape)
    with np.errstate(all="ignore"):
        dp = p_t - p
        b2 = eos_b2(rho, p, s, rho0, a0, sh, g0)
        bad = ~(b2 > 0.0)
        plastic = ((mu > 0.0) & (np.abs(s) >= lim * (1.0 - YIELD_TOL))).astype(float)
        if rel_step > 0.0:
            n = np.clip(np.ceil(np.abs(dp) / (rho * b2) / rel_step), 1, nmax)
        else:
            n = np.full(rho.shape, float(nmax))
        n = np.where(bad | (dp == 0.0) | ~np.isfinite(n), 0, n).astype(np.int64)
        h = dp / np.maximum(n, 1)
        p_cur = p.copy()
        for i in range(int(n.max(initial=0))):
            idx = np.nonzero(i < n)[0]
            last = (i == n[idx] - 1)
            p_next = np.where(last, p_t[idx], p[idx] + (i + 1) * h[idx])
            hh = p_next - p_cur[idx]
            ri, ui, si, sg = rho[idx], u[idx], s[idx], sgn[idx]
            pl = ((mu > 0.0) & (np.abs(si) >= lim * (1.0 - YIELD_TOL))
                  & (si * (-hh) > 0.0)).astype(float)
            r1, u1, s1 = rk4_wave(ri, ui, si, p_cur[idx], hh, sg, pl, rho0, a0, sh, g0, mu)
            cross = (pl == 0.0) & (np.abs(s1) > lim)
            if np.any(cross):
                j = np.nonzero(cross)[0]
                rj, uj, sj, pj, hj, gj = ri[j], ui[j], si[j], p_cur[idx][j], hh[j], sg[j]
                target = np.where(s1[j] > 0.0, lim, -lim)
                th = (target - sj) / (s1[j] - sj)
                live = np.ones(j.shape, dtype=bool)
                for _ in range(4):
                    _, _, st = rk4_wave(rj, uj, sj, pj, th * hj, gj, 0.0, rho0, a0, sh, g0, mu)
                    live &= st != sj
                    th = np.where(live, np.clip(th * (target - sj) / (st - sj), 0.0, 1.0), th)
                rt, ut, _ = rk4_wave(rj, uj, sj, pj, th * hj, gj, 0.0, rho0, a0, sh, g0, mu)
                pm = pj + th * hj
                r2, u2, s2 = rk4_wave(rt, ut, target, pm, p_next[j] - pm, gj, 1.0,
                                      rho0, a0, sh, g0, mu)
                r1[j], u1[j], s1[j], pl[j] = r2, u2, s2, 1.0
            rho[idx], u[idx], s[idx], plastic[idx] = r1, u1, s1, pl
            p_cur[idx] = p_next
        _, dudp, _ = wave_rhs(rho, p_t, s, sgn, plastic, rho0, a0, sh, g0, mu)
        fail = (bad | ~(rho > rho0 * ETA_MIN) | ~(rho < rho0 * ETA_MAX)
                | ~np.isfinite(u) | ~np.isfinite(dudp))
    return rho, u, s, dudp, fail


def trrse_batch_np(rL, uL, pL, sL, rR, uR, pR, sR, prm, nmax, rel_step):
    rho0, a0, sh, g0, mu = (float(v) for v in prm[:5])
    n = rL.shape[0]
    ps, us = np.array(pL, dtype=float), np.array(0.5 * (uL + uR), dtype=float)
    rLs, sLs = np.array(rL, dtype=float), np.array(sL, dtype=float)
    rRs, sRs = np.array(rR, dtype=float), np.array(sR, dtype=float)
    status = np.zeros(n, dtype=np.int64)
    with np.errstate(all="ignore"):
        b2L = eos_b2(rL, pL, sL, rho0, a0, sh, g0)
        b2R = eos_b2(rR, pR, sR, rho0, a0, sh, g0)
        c2L = b2L + 4.0 * mu / (3.0 * rL)
        c2R = b2R + 4.0 * mu / (3.0 * rR)
        bad = ~((b2L > 0) & (b2R > 0) & (c2L > 0) & (c2R > 0))
        cL, cR = np.sqrt(c2L), np.sqrt(c2R)
        zL, zR = rL * b2L / cL, rR * b2R / cR
        p = (zR * pL + zL * pR + zL * zR * (uL - uR)) / (zL + zR)
    status[bad] = errors.NONPHYSICAL
    p_ok = 0.5 * (pL + pR)
    p_floor = np.minimum(pL, pR)
    scale = np.maximum(rL * b2L, rR * b2R)
    tol_u = TOL_U * (cL + cR)
    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    done = bad.copy()
    for _ in range(MAX_ITER):
        idx = np.nonzero(~done)[0]
        if idx.size == 0:
            break
        pi = p[idx]
        aL, vL, qL, dL, fL = connect_np(rL[idx], uL[idx], pL[idx], sL[idx], pi, LEFT,
                                        prm, nmax, rel_step)
        aR, vR, qR, dR, fR = connect_np(rR[idx], uR[idx], pR[idx], sR[idx], pi, RIGHT,
                                        prm, nmax, rel_step)
        fail = fL | fR
        lo_i, hi_i = lo[idx], hi[idx]
        below = fail & (pi < p_floor[idx])
        lo_i = np.where(below, np.maximum(lo_i, pi), lo_i)
        hi_i = np.where(fail & ~below, np.minimum(hi_i, pi), hi_i)
        with np.errstate(all="ignore"):
            f = vL - vR
            conv = ~fail & (np.abs(f) <= tol_u[idx])
            lo_i = np.where(~fail & ~conv & (f > 0.0), pi, lo_i)
            hi_i = np.where(~fail & ~conv & (f <= 0.0), pi, hi_i)
            pn = pi - f / (dL - dR)
            mid = 0.5 * (lo_i + hi_i)
            pn = np.where((pn > lo_i) & (pn < hi_i), pn, mid)
            conv |= ~fail & (np.abs(pn - pi) <= TOL_P * (np.abs(pi) + scale[idx]))
            both = np.isfinite(lo_i) & np.isfinite(hi_i)
            p_fail = np.where(both, mid, 0.5 * (pi + p_ok[idx]))
        p_ok[idx] = np.where(fail, p_ok[idx], pi)
        lo[idx], hi[idx] = lo_i, hi_i
        p[idx] = np.where(fail, p_fail, pn)
        c = idx[conv]
        ps[c], us[c] = pi[conv], 0.5 * (vL[conv] + vR[conv])
        rLs[c], sLs[c], rRs[c], sRs[c] = aL[conv], qL[conv], aR[conv], qR[conv]
        done[c] = True
    status[~done] = errors.NO_CONVERGENCE
    return ps, us, rLs, sLs, rRs, sRs, status


# ------------------------------------------------------------------ dispatch


def solve_batch(rL, uL, pL, sL, rR, uR, pR, sR, prm, substeps=None):
    """Solve many Riemann problems; returns (p*, u*, rho*_L, s*_L, rho*_R, s*_R, status)."""
    nmax, rel = (MAX_SUBSTEPS, REL_STEP) if substeps is None else (int(substeps), 0.0)
    args = [np.ascontiguousarray(a, dtype=np.float64) for a in (rL, uL, pL, sL, rR, uR, pR, sR)]
    prm = np.ascontiguousarray(prm, dtype=np.float64)
    if use_numba():
        return trrse_batch_nb(*args, prm, nmax, rel)
    return trrse_batch_np(*args, prm, nmax, rel)


def connect_batch(rho, u, p, s, p_t, sgn, prm, substeps=None):
    """Follow wave curves for arrays of states; returns (rho, u, s, du/dp, failed)."""
    nmax, rel = (MAX_SUBSTEPS, REL_STEP) if substeps is None else (int(substeps), 0.0)
    rho, u, p, s = (np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in (rho, u, p, s))
    p_t = np.broadcast_to(np.asarray(p_t, dtype=np.float64), rho.shape)
    if use_numba():
        out = [np.empty_like(rho) for _ in range(4)]
        fail = np.zeros(rho.shape, dtype=bool)
        for i in range(rho.shape[0]):
            r = connect_scalar(rho[i], u[i], p[i], s[i], p_t[i], float(sgn), prm, nmax, rel)
            for k in range(4):
                out[k][i] = r[k]
            fail[i] = r[4] != errors.OK
        return (*out, fail)
    return connect_np(rho, u, p, s, p_t, sgn, prm, nmax, rel)


# ------------------------------------------------------------ state-level API


def _direction(direction):
    if direction in ("left", LEFT):
        return LEFT
    if direction in ("right", RIGHT):
        return RIGHT
    raise ValueError(f"direction must be 'left' or 'right', got {direction!r}")


def rarefaction_connect(state, p_target, direction, mat, substeps=None):
    """State reached from ``state`` along a simple wave ending at ``p_target``.

    ``direction='left'`` follows the left-facing (u - c) family, as seen from
    the left data state of a Riemann problem.
    """
    sgn = _direction(direction)
    rho, u, s, _, fail = connect_batch(state.rho, state.u, state.p, state.sxx, p_target, sgn,
                                       mat.params(), substeps)
    if fail[0]:
        raise errors.NonPhysicalState("wave curve left the admissible EOS range")
    return _make_state(rho[0], u[0], float(p_target), s[0], mat)


def _make_state(rho, u, p, s, mat):
    e = eos_energy(rho, p, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0)
    return PrimitiveState(float(rho), float(u), float(p), float(s), float(e + 0.5 * u * u))


def _sound_speed(q, mat):
    c2 = eos_c2(q.rho, q.p, q.sxx, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0,
                mat.shear_mu)
    if not c2 > 0:
        raise errors.NonPhysicalState("elastic sound speed radicand is not positive")
    return math.sqrt(c2)


def trrse_solve(qL, qR, mat, substeps=None):
    """Riemann fan for left/right primitive states."""
    for q in (qL, qR):
        check_density(q.rho, mat)
    out = solve_batch(*([v] for v in (qL.rho, qL.u, qL.p, qL.sxx, qR.rho, qR.u, qR.p, qR.sxx)),
                      mat.params(), substeps)
    ps, us, rLs, sLs, rRs, sRs, st = (np.asarray(a)[0] for a in out)
    errors.raise_status(st, "TRRSE failed")
    qLs = _make_state(rLs, us, ps, sLs, mat)
    qRs = _make_state(rRs, us, ps, sRs, mat)
    return RiemannFan(qL, qLs, qRs, qR, float(us),
                      qL.u - _sound_speed(qL, mat), qR.u + _sound_speed(qR, mat))


def godunov_sample(fan, xdot):
    """Pick the fan state seen by an interface moving at ``xdot``."""
    if xdot <= fan.sL:
        return fan.qL
    if xdot <= fan.u_star:
        return fan.qLstar
    if xdot <= fan.sR:
        return fan.qRstar
    return fan.qR


def sample_branch(xdot, sL, ustar, sR):
    """Vectorised branch index of :func:`godunov_sample`: 0=L, 1=L*, 2=R*, 3=R."""
    return np.where(xdot <= sL, 0, np.where(xdot <= ustar, 1, np.where(xdot <= sR, 2, 3)))
