"""Mie-Gruneisen equation of state.

The lower-case helpers (``hug_f``, ``eos_pressure`` ...) are pure arithmetic on
unpacked material constants.  They accept scalars or arrays and are inlined
into the jitted kernels; they never raise.  The public functions at the bottom
validate their input and raise :class:`~epflow.errors.NonPhysicalState` or
:class:`~epflow.errors.DenominatorSingular`.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import shared
from .errors import DenominatorSingular, NonPhysicalState

ETA_MIN = 0.5
ETA_MAX = 2.0
DENOM_TOL = 1e-12


@dataclass(frozen=True)
class MaterialModel:
    rho0: float
    a0: float
    hugoniot_slope_s: float
    gamma0: float
    shear_mu: float
    yield_Y0: float
    name: str = "material"

    def __post_init__(self):
        if not (self.rho0 > 0 and self.a0 > 0):
            raise ValueError("rho0 and a0 must be positive")
        if self.shear_mu < 0:
            raise ValueError("shear modulus must be non-negative")
        if not self.yield_Y0 > 0:
            raise ValueError("yield strength must be positive")
        if self.hugoniot_slope_s < 1:
            raise ValueError("Hugoniot slope s must be >= 1")

    @property
    def yield_limit(self):
        """Bound (2/3) Y0 on |s_xx|."""
        return 2.0 * self.yield_Y0 / 3.0

    def params(self):
        """Float vector handed to the kernels: (rho0, a0, s, gamma0, mu, Y0)."""
        return np.array([self.rho0, self.a0, self.hugoniot_slope_s, self.gamma0,
                         self.shear_mu, self.yield_Y0], dtype=np.float64)

    def replace(self, **kw):
        d = dict(self.__dict__)
        d.update(kw)
        return MaterialModel(**d)


COPPER = MaterialModel(8930.0, 3940.0, 1.49, 2.0, 45e9, 90e6, name="copper")
ALUMINIUM = MaterialModel(2785.0, 5328.0, 1.338, 2.0, 27.6e9, 300e6, name="aluminium")


@dataclass(frozen=True)
class PrimitiveState:
    """Point state at an interface: density, velocity, pressure, s_xx, total energy."""
    rho: float
    u: float
    p: float
    sxx: float
    E: float

    @classmethod
    def from_primitive(cls, rho, u, p, sxx, mat):
        e = energy_from_pressure(rho, p, mat)
        return cls(float(rho), float(u), float(p), float(sxx), float(e + 0.5 * u * u))

    @property
    def e(self):
        return self.E - 0.5 * self.u * self.u

    def mirrored(self, wall_velocity=0.0):
        """Reflection through a wall moving at ``wall_velocity``."""
        u = 2.0 * wall_velocity - self.u
        return PrimitiveState(self.rho, u, self.p, self.sxx, self.e + 0.5 * u * u)


# ---------------------------------------------------------------- arithmetic


@shared
def hug_f(eta, sh, g0):
    den = eta - sh * (eta - 1.0)
    return (eta - 1.0) * (eta - 0.5 * g0 * (eta - 1.0)) / (den * den)


@shared
def hug_df(eta, sh, g0):
    num = (eta - 1.0) * (eta - 0.5 * g0 * (eta - 1.0))
    dnum = (eta - 0.5 * g0 * (eta - 1.0)) + (eta - 1.0) * (1.0 - 0.5 * g0)
    den = eta - sh * (eta - 1.0)
    return (dnum * den - 2.0 * num * (1.0 - sh)) / (den * den * den)


@shared
def eos_pressure(rho, e, rho0, a0, sh, g0):
    return rho0 * a0 * a0 * hug_f(rho / rho0, sh, g0) + rho0 * g0 * e


@shared
def eos_energy(rho, p, rho0, a0, sh, g0):
    return (p - rho0 * a0 * a0 * hug_f(rho / rho0, sh, g0)) / (rho0 * g0)


@shared
def eos_a2(rho, p, rho0, a0, sh, g0):
    return a0 * a0 * hug_df(rho / rho0, sh, g0) + p / (rho * rho) * rho0 * g0


@shared
def eos_b2(rho, p, s, rho0, a0, sh, g0):
    """Squared bulk wave speed including the deviatoric work term."""
    return eos_a2(rho, p, rho0, a0, sh, g0) - rho0 * g0 * s / (rho * rho)


@shared
def eos_c2(rho, p, s, rho0, a0, sh, g0, mu):
    return eos_b2(rho, p, s, rho0, a0, sh, g0) + 4.0 * mu / (3.0 * rho)


# ------------------------------------------------------------ public, checked


def check_density(rho, mat):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        raise NonPhysicalState("density must be positive")
    eta = rho / mat.rho0
    if np.any(eta < ETA_MIN) or np.any(eta > ETA_MAX):
        raise NonPhysicalState(f"compression ratio outside [{ETA_MIN}, {ETA_MAX}]")
    _check_denominator(eta, mat)
    return eta


def _check_denominator(eta, mat):
    den = eta - mat.hugoniot_slope_s * (eta - 1.0)
    if np.any(np.abs(den) < DENOM_TOL * np.abs(eta)):
        raise DenominatorSingular("Hugoniot denominator vanishes")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def hugoniot_f(eta, mat):
    """f(eta) of the Mie-Gruneisen reference curve."""
    eta = np.asarray(eta, dtype=float)
    if np.any(~(eta > 0)):
        raise NonPhysicalState("eta must be positive")
    _check_denominator(eta, mat)
    return _out(hug_f(eta, mat.hugoniot_slope_s, mat.gamma0))


def hugoniot_df(eta, mat):
    eta = np.asarray(eta, dtype=float)
    _check_denominator(eta, mat)
    return _out(hug_df(eta, mat.hugoniot_slope_s, mat.gamma0))


def pressure(rho, e, mat):
    check_density(rho, mat)
    return _out(eos_pressure(np.asarray(rho, float), np.asarray(e, float), mat.rho0, mat.a0,
                             mat.hugoniot_slope_s, mat.gamma0))


def energy_from_pressure(rho, p, mat):
    if mat.gamma0 == 0:
        raise NonPhysicalState("gamma0 = 0: energy is not recoverable from pressure")
    check_density(rho, mat)
    return _out(eos_energy(np.asarray(rho, float), np.asarray(p, float), mat.rho0, mat.a0,
                           mat.hugoniot_slope_s, mat.gamma0))


def hydrodynamic_sound_speed_sq(rho, p, mat):
    check_density(rho, mat)
    a2 = eos_a2(np.asarray(rho, float), np.asarray(p, float), mat.rho0, mat.a0,
                mat.hugoniot_slope_s, mat.gamma0)
    if np.any(~(a2 > 0)):
        raise NonPhysicalState("hydrodynamic sound speed squared is not positive")
    return _out(a2)


def elastic_sound_speed(state, mat):
    """Longitudinal wave speed c of a :class:`PrimitiveState`.

    Also accepts any object with ``rho``, ``p`` and ``sxx`` attributes holding
    arrays.
    """
    rho = np.asarray(state.rho, dtype=float)
    check_density(rho, mat)
    c2 = eos_c2(rho, np.asarray(state.p, float), np.asarray(state.sxx, float), mat.rho0,
                mat.a0, mat.hugoniot_slope_s, mat.gamma0, mat.shear_mu)
    if np.any(~(c2 > 0)):
        raise NonPhysicalState("elastic sound speed radicand is not positive")
    return _out(np.sqrt(c2))
