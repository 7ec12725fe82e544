"""Third-order WENO reconstruction in local characteristic variables.

Eigenvectors of the quasi-linear system in Q = (rho, rho u, rho E, s_xx) are
built in closed form through the primitive variables W = (rho, u, p, s_xx):
R = T R_W and L = L_W T^-1 with T = dQ/dW.  They are scaled so that every
characteristic variable carries density units, which is the scale the WENO
epsilon is measured against.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import jit, shared, use_numba
from .eos import ETA_MAX, ETA_MIN, eos_b2, eos_energy, eos_pressure, hug_df
from .errors import DegenerateEigensystem, NonPhysicalState

WENO_EPS = 1e-6
EPS_C = 1e-8


@dataclass(frozen=True)
class CharacteristicBasis:
    L: np.ndarray
    R: np.ndarray
    eigenvalues: np.ndarray


@dataclass
class InterfaceStates:
    """Primitive limits at the N+1 interfaces: ``minus`` from the left cell, ``plus`` from the right."""
    rho_m: np.ndarray
    u_m: np.ndarray
    p_m: np.ndarray
    s_m: np.ndarray
    rho_p: np.ndarray
    u_p: np.ndarray
    p_p: np.ndarray
    s_p: np.ndarray
    fallbacks: int = 0
    componentwise: int = 0


# ------------------------------------------------------------------- WENO3


@shared
def weno3_faces(qm, q0, qp, hm, h0, hp, eps, nonlinear):
    """WENO3 values at the left and right faces of the middle cell (nonuniform widths)."""
    sl1 = (q0 - qm) / (0.5 * (hm + h0))
    sl2 = (qp - q0) / (0.5 * (h0 + hp))
    big = hm + h0 + hp
    b1 = (h0 * sl1) * (h0 * sl1)
    b2 = (h0 * sl2) * (h0 * sl2)
    a1 = 1.0 / ((eps + b1) * (eps + b1))
    a2 = 1.0 / ((eps + b2) * (eps + b2))
    gr1 = hp / big
    gr2 = (hm + h0) / big
    gl1 = (h0 + hp) / big
    gl2 = hm / big
    wr1 = nonlinear * (gr1 * a1 / (gr1 * a1 + gr2 * a2)) + (1.0 - nonlinear) * gr1
    wl1 = nonlinear * (gl1 * a1 / (gl1 * a1 + gl2 * a2)) + (1.0 - nonlinear) * gl1
    half = 0.5 * h0
    right = wr1 * (q0 + sl1 * half) + (1.0 - wr1) * (q0 + sl2 * half)
    left = wl1 * (q0 - sl1 * half) + (1.0 - wl1) * (q0 - sl2 * half)
    return left, right


def weno3_point_values(avgs, widths, eps=WENO_EPS, nonlinear=True):
    """(left-face, right-face) point values of the middle of three cells."""
    qm, q0, qp = (float(v) for v in avgs)
    hm, h0, hp = (float(v) for v in widths)
    if min(hm, h0, hp) <= 0:
        raise ValueError("cell widths must be positive")
    return weno3_faces(qm, q0, qp, hm, h0, hp, eps, 1.0 if nonlinear else 0.0)


# --------------------------------------------------------------- eigensystem


def jacobian(rho, u, p, sxx, mat):
    """Flux Jacobian of the (mass, momentum, energy, s_xx) system with respect to Q."""
    e = eos_energy(rho, p, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0)
    E = e + 0.5 * u * u
    g = mat.gamma0 * mat.rho0 / rho
    dpdrho = mat.a0 ** 2 * hug_df(rho / mat.rho0, mat.hugoniot_slope_s, mat.gamma0)
    sig = -p + sxx
    k = 4.0 * mat.shear_mu / 3.0
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-u * u + dpdrho + g * (0.5 * u * u - e), u * (2.0 - g), g, -1.0],
        [(g * (0.5 * u * u - e) - E + sig / rho + dpdrho) * u, -g * u * u - sig / rho + E,
         (1.0 + g) * u, -u],
        [k * u / rho, -k / rho, 0.0, u],
    ])


@shared
def _basis_coeffs(rho, u, p, s, rho0, a0, sh, g0, mu):
    """Scalars that define L and R: (eps_rho, g, c, k, b2, c2)."""
    e = eos_energy(rho, p, rho0, a0, sh, g0)
    erho = -a0 * a0 * hug_df(rho / rho0, sh, g0) / (rho0 * g0)
    epsr = e + rho * erho + 0.5 * u * u
    g = rho0 * g0 / rho                       # 1 / (rho de/dp)
    b2 = eos_b2(rho, p, s, rho0, a0, sh, g0)
    k = 4.0 * mu / (3.0 * rho)
    c2 = b2 + k
    return epsr, g, np.sqrt(c2), k, b2, c2


def characteristic_basis(rho, u, p, sxx, mat):
    prm = mat.params()
    with np.errstate(invalid="ignore"):
        epsr, g, c, k, b2, c2 = _basis_coeffs(rho, u, p, sxx, *prm[:5])
    if not (c2 > 0 and b2 > 0):
        raise NonPhysicalState("sound speed radicand is not positive")
    if c < EPS_C * max(1.0, abs(u)):
        raise DegenerateEigensystem("acoustic eigenvalues coincide")
    L = np.empty((4, 4))
    R = np.empty((4, 4))
    _fill_basis(L, R, u, epsr, g, c, k, b2, c2)
    return CharacteristicBasis(L, R, np.array([u - c, u, u, u + c]))


@shared
def _fill_basis(L, R, u, epsr, g, c, k, b2, c2):
    """Write L and R in place; works on (4, 4) scalars or (4, 4, n) batches."""
    rep = 1.0 / g                            # rho * de/dp
    R[0, 0] = 1.0
    R[1, 0] = u - c
    R[2, 0] = epsr - u * c + rep * b2
    R[3, 0] = -k
    R[0, 1] = 1.0
    R[1, 1] = u
    R[2, 1] = epsr
    R[3, 1] = 0.0
    R[0, 2] = 0.0
    R[1, 2] = 0.0
    R[2, 2] = rep * c2
    R[3, 2] = c2
    R[0, 3] = 1.0
    R[1, 3] = u + c
    R[2, 3] = epsr + u * c + rep * b2
    R[3, 3] = -k
    w = u * u - epsr
    h2 = 0.5 / c2
    L[0, 0] = 0.5 * u / c + g * w * h2
    L[0, 1] = -0.5 / c - g * u * h2
    L[0, 2] = g * h2
    L[0, 3] = -h2
    L[1, 0] = 1.0 - g * w / c2
    L[1, 1] = g * u / c2
    L[1, 2] = -g / c2
    L[1, 3] = 1.0 / c2
    c4 = c2 * c2
    L[2, 0] = g * w * k / c4
    L[2, 1] = -g * u * k / c4
    L[2, 2] = g * k / c4
    L[2, 3] = b2 / c4
    L[3, 0] = -0.5 * u / c + g * w * h2
    L[3, 1] = 0.5 / c - g * u * h2
    L[3, 2] = g * h2
    L[3, 3] = -h2


# ------------------------------------------------------------ interface kernel


@shared
def _face_ok(rho, u, p, s, rho0, a0, sh, g0, mu):
    b2 = eos_b2(rho, p, s, rho0, a0, sh, g0)
    return ((rho > rho0 * ETA_MIN) & (rho < rho0 * ETA_MAX) & (b2 > 0.0)
            & (b2 + 4.0 * mu / (3.0 * rho) > 0.0) & np.isfinite(p) & np.isfinite(u))


@jit
def reconstruct_nb(Q, h, prm, eps, nonlinear):
    """Scalar-loop reconstruction over the extended cell range.

    ``Q`` is (4, N+4) conserved averages incl. two ghost cells per side and
    ``h`` the matching widths.  Returns primitive limits (rho, u, p, s) on both
    sides of the N+1 interfaces and the fallback counters.
    """
    rho0, a0, sh, g0, mu = prm[0], prm[1], prm[2], prm[3], prm[4]
    m = Q.shape[1]
    n_if = m - 3
    minus = np.empty((4, n_if))
    plus = np.empty((4, n_if))
    L = np.empty((4, 4))
    R = np.empty((4, 4))
    q = np.empty((4, 3))
    lf = np.empty(4)
    rf = np.empty(4)
    face = np.empty(4)
    fallbacks = 0
    componentwise = 0
    for j in range(1, m - 1):
        rho = Q[0, j]
        u = Q[1, j] / rho
        e = Q[2, j] / rho - 0.5 * u * u
        p = eos_pressure(rho, e, rho0, a0, sh, g0)
        s = Q[3, j]
        epsr, g, c, k, b2, c2 = _basis_coeffs(rho, u, p, s, rho0, a0, sh, g0, mu)
        ok = rho > 0.0 and b2 > 0.0 and c2 > 0.0 and c > EPS_C * max(1.0, abs(u))
        if ok:
            _fill_basis(L, R, u, epsr, g, c, k, b2, c2)
        else:
            componentwise += 1
            for a in range(4):
                for b in range(4):
                    L[a, b] = 1.0 if a == b else 0.0
                    R[a, b] = L[a, b]
        for a in range(4):
            for t in range(3):
                acc = 0.0
                for b in range(4):
                    acc += L[a, b] * Q[b, j - 1 + t]
                q[a, t] = acc
            lf[a], rf[a] = weno3_faces(q[a, 0], q[a, 1], q[a, 2], h[j - 1], h[j], h[j + 1],
                                       eps, nonlinear)
        for side in range(2):
            src = rf if side == 1 else lf
            for a in range(4):
                acc = 0.0
                for b in range(4):
                    acc += R[a, b] * src[b]
                face[a] = acc
            fr = face[0]
            fu = face[1] / fr
            fp = eos_pressure(fr, face[2] / fr - 0.5 * fu * fu, rho0, a0, sh, g0)
            fs = face[3]
            if not _face_ok(fr, fu, fp, fs, rho0, a0, sh, g0, mu):
                fallbacks += 1
                fr, fu, fp, fs = rho, u, p, s
            if side == 1 and j - 1 < n_if:
                minus[0, j - 1] = fr
                minus[1, j - 1] = fu
                minus[2, j - 1] = fp
                minus[3, j - 1] = fs
            elif side == 0 and j >= 2:
                plus[0, j - 2] = fr
                plus[1, j - 2] = fu
                plus[2, j - 2] = fp
                plus[3, j - 2] = fs
    return minus, plus, fallbacks, componentwise


def reconstruct_np(Q, h, prm, eps, nonlinear):
    """Vectorised twin of :func:`reconstruct_nb`."""
    rho0, a0, sh, g0, mu = (float(v) for v in prm[:5])
    m = Q.shape[1]
    mid = slice(1, m - 1)
    rho = Q[0, mid]
    u = Q[1, mid] / rho
    e = Q[2, mid] / rho - 0.5 * u * u
    p = eos_pressure(rho, e, rho0, a0, sh, g0)
    s = Q[3, mid]
    with np.errstate(all="ignore"):
        epsr, g, c, k, b2, c2 = _basis_coeffs(rho, u, p, s, rho0, a0, sh, g0, mu)
        ok = (rho > 0) & (b2 > 0) & (c2 > 0) & (c > EPS_C * np.maximum(1.0, np.abs(u)))
    n = rho.shape[0]
    L = np.empty((4, 4, n))
    R = np.empty((4, 4, n))
    with np.errstate(all="ignore"):
        _fill_basis(L, R, u, epsr, g, c, k, b2, c2)
    eye = np.eye(4)[:, :, None]
    L = np.where(ok[None, None, :], L, eye)
    R = np.where(ok[None, None, :], R, eye)
    qm = np.einsum("abn,bn->an", L, Q[:, 0:m - 2])
    q0 = np.einsum("abn,bn->an", L, Q[:, 1:m - 1])
    qp = np.einsum("abn,bn->an", L, Q[:, 2:m])
    lf, rf = weno3_faces(qm, q0, qp, h[0:m - 2], h[1:m - 1], h[2:m], eps, nonlinear)
    faces = []
    fallbacks = 0
    for src in (lf, rf):
        F = np.einsum("abn,bn->an", R, src)
        with np.errstate(all="ignore"):
            fr = F[0]
            fu = F[1] / fr
            fp = eos_pressure(fr, F[2] / fr - 0.5 * fu * fu, rho0, a0, sh, g0)
            good = _face_ok(fr, fu, fp, F[3], rho0, a0, sh, g0, mu)
        fallbacks += int(np.count_nonzero(~good))
        faces.append(np.where(good, np.array([fr, fu, fp, F[3]]), np.array([rho, u, p, s])))
    left, right = faces
    n_if = m - 3
    minus = right[:, 0:n_if]          # cells 1..m-3 -> interfaces 0..n_if-1
    plus = left[:, 1:n_if + 1]        # cells 2..m-2
    # the two outermost reconstructed faces are never used; drop their fallbacks
    return minus, plus, fallbacks, int(np.count_nonzero(~ok))


def reconstruct_interfaces(Q, widths, prm, eps=WENO_EPS, nonlinear=True):
    """Interface limits from ghost-extended averages; see :class:`InterfaceStates`.

    ``Q`` is (4, N+4) with rows (rho, rho u, rho E, s_xx) and two ghost cells
    per side; ``widths`` has N+4 entries.
    """
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    h = np.ascontiguousarray(widths, dtype=np.float64)
    prm = np.ascontiguousarray(prm, dtype=np.float64)
    nl = 1.0 if nonlinear else 0.0
    if use_numba():
        minus, plus, fb, cw = reconstruct_nb(Q, h, prm, eps, nl)
    else:
        minus, plus, fb, cw = reconstruct_np(Q, h, prm, eps, nl)
    return InterfaceStates(*minus, *plus, fallbacks=int(fb), componentwise=int(cw))


def conserved_to_primitive(Q, mat):
    """(rho, u, p, s) from rows (rho, rho u, rho E, s)."""
    rho = Q[0]
    u = Q[1] / rho
    e = Q[2] / rho - 0.5 * u * u
    p = eos_pressure(rho, e, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0)
    return rho, u, p, Q[3]


def primitive_to_conserved(rho, u, p, s, mat):
    e = eos_energy(rho, p, mat.rho0, mat.a0, mat.hugoniot_slope_s, mat.gamma0)
    return np.array([rho, rho * u, rho * (e + 0.5 * u * u), s])


