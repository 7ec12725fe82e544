"""Independent reference computations used by the tests.

Nothing here calls the package's solver arithmetic: derivatives come from
complex steps, wave curves from fine RK4 integration in density, and Riemann
solutions from bisection.
"""
import numpy as np


def f_eta(eta, s, g0):
    return (eta - 1) * (eta - g0 * (eta - 1) / 2) / (eta - s * (eta - 1)) ** 2


def df_complex_step(eta, s, g0, h=1e-30):
    return np.imag(f_eta(eta + 1j * h, s, g0)) / h


def pressure(rho, e, m):
    return m.rho0 * m.a0 ** 2 * f_eta(rho / m.rho0, m.hugoniot_slope_s, m.gamma0) \
        + m.rho0 * m.gamma0 * e


def energy(rho, p, m):
    return (p - m.rho0 * m.a0 ** 2 * f_eta(rho / m.rho0, m.hugoniot_slope_s, m.gamma0)) \
        / (m.rho0 * m.gamma0)


def isentrope_rhs(rho, e, m):
    p = pressure(rho, e, m)
    a2 = m.a0 ** 2 * df_complex_step(rho / m.rho0, m.hugoniot_slope_s, m.gamma0) \
        + m.rho0 * m.gamma0 * p / rho ** 2
    return p / rho ** 2, np.sqrt(a2) / rho


def isentrope_tables(rho, u, p, sgn, m, lo, hi, n):
    """Tables (rho, p, u) along the isentrope through each state, rho in [lo, hi].

    Integrates de/drho = p/rho^2 and du/drho = sgn a/rho with RK4 on ``n``
    uniform steps from the state outwards in both directions.
    """
    rho = np.asarray(rho, dtype=float)
    e0 = energy(rho, np.asarray(p, dtype=float), m)
    out_r, out_p, out_u = [], [], []
    for end in (lo, hi):
        h = (end - rho) / n
        r, e, v = rho.copy(), e0.copy(), np.asarray(u, dtype=float).copy()
        rs, ps, us = [r.copy()], [pressure(r, e, m)], [v.copy()]
        for _ in range(n):
            k1e, k1u = isentrope_rhs(r, e, m)
            k2e, k2u = isentrope_rhs(r + h / 2, e + h / 2 * k1e, m)
            k3e, k3u = isentrope_rhs(r + h / 2, e + h / 2 * k2e, m)
            k4e, k4u = isentrope_rhs(r + h, e + h * k3e, m)
            e = e + h / 6 * (k1e + 2 * k2e + 2 * k3e + k4e)
            v = v + sgn * h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
            r = r + h
            rs.append(r.copy())
            ps.append(pressure(r, e, m))
            us.append(v.copy())
        out_r.append(np.array(rs))
        out_p.append(np.array(ps))
        out_u.append(np.array(us))
    # stitch: lo branch reversed (increasing rho) then hi branch without the start point
    R = np.concatenate([out_r[0][::-1], out_r[1][1:]])
    P = np.concatenate([out_p[0][::-1], out_p[1][1:]])
    U = np.concatenate([out_u[0][::-1], out_u[1][1:]])
    return R, P, U


def bisection_riemann(tabL, tabR, k, iters=200):
    """p*, u* for pair ``k`` from the tables by bisection on u_L(p) - u_R(p)."""
    RL, PL, UL = (t[:, k] for t in tabL)
    RR, PR, UR = (t[:, k] for t in tabR)
    lo = max(PL[0], PR[0])
    hi = min(PL[-1], PR[-1])

    def g(pv):
        return np.interp(pv, PL, UL) - np.interp(pv, PR, UR)

    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        return np.nan, np.nan
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm * glo > 0:
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= 1e-14 * abs(hi):
            break
    pm = 0.5 * (lo + hi)
    return pm, 0.5 * (np.interp(pm, PL, UL) + np.interp(pm, PR, UR))


def cell_averages_poly(coeffs, nodes):
    """Exact cell averages of the polynomial sum c_k x^k."""
    P = np.polynomial.Polynomial(coeffs).integ()
    return np.diff(P(nodes)) / np.diff(nodes)


def flux_jacobian_fd(rho, u, p, sxx, m, rel=1e-6):
    """Central-difference Jacobian of the conservative flux plus the s_xx row."""
    def flux(Q):
        r, mom, en, s = Q
        v = mom / r
        e = en / r - 0.5 * v * v
        pr = pressure(r, e, m)
        sig = pr - s
        return np.array([mom, mom * v + sig, (en + sig) * v])

    e = energy(rho, p, m)
    Q = np.array([rho, rho * u, rho * (e + 0.5 * u * u), sxx])
    J = np.zeros((4, 4))
    for j in range(4):
        h = rel * max(abs(Q[j]), 1.0)
        dq = np.zeros(4)
        dq[j] = h
        J[:3, j] = (flux(Q + dq) - flux(Q - dq)) / (2 * h)
    k = 4 * m.shear_mu / 3
    J[3] = [k * u / rho, -k / rho, 0.0, u]
    return J
