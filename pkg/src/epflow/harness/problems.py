"""Built-in benchmark configurations and key=value config files."""
import dataclasses
from dataclasses import dataclass

import numpy as np

from ..eos import ALUMINIUM, COPPER, MaterialModel, eos_energy
from ..errors import ConfigError
from ..integrator import BoundarySide, BoundarySpec, ConservedCell

GAUSS_POINTS = 5


@dataclass(frozen=True)
class ProblemConfig:
    name: str
    domain: tuple
    n_cells: int
    material: MaterialModel
    initial: object              # x -> (rho, u, p, sxx) arrays
    boundary: BoundarySpec
    t_final: float
    mode: str = "mmcc"
    tau: float = 0.01
    cfl: float = 0.45
    sweeps: int = None

    def __post_init__(self):
        a, b = self.domain
        if not b > a:
            raise ConfigError("domain must satisfy a < b")
        if not self.t_final > 0:
            raise ConfigError("t_final must be positive")
        if int(self.n_cells) < 8:
            raise ConfigError("at least 8 cells are required")
        if self.mode not in ("mmcc", "ccl"):
            raise ConfigError(f"mode must be mmcc or ccl, got {self.mode!r}")
        if not self.tau > 0 or not 0 < self.cfl <= 1:
            raise ConfigError("tau must be positive and 0 < cfl <= 1")

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def key(self):
        """Stable text identity used for caching reference runs."""
        m = self.material
        return (f"{self.name}|{self.domain}|{self.n_cells}|{m.params().tolist()}|"
                f"{self.boundary}|{self.t_final!r}|{self.mode}|{self.tau}|{self.cfl}|{self.sweeps}")

    def initial_state(self):
        """Cell averages of the initial profile by Gauss quadrature on a uniform mesh."""
        a, b = self.domain
        n = int(self.n_cells)
        x = np.linspace(a, b, n + 1)
        g, wq = np.polynomial.legendre.leggauss(GAUSS_POINTS)
        h = np.diff(x)
        xq = 0.5 * (x[1:] + x[:-1])[:, None] + 0.5 * h[:, None] * g[None, :]
        rho, u, p, s = (np.broadcast_to(np.asarray(v, dtype=np.float64), xq.shape)
                        for v in self.initial(xq))
        m = self.material
        e = eos_energy(rho, p, m.rho0, m.a0, m.hugoniot_slope_s, m.gamma0)
        avg = lambda f: 0.5 * (f * wq).sum(axis=1)
        U = np.array([avg(rho), avg(rho * u), avg(rho * (e + 0.5 * u * u))])
        return ConservedCell(x, U, avg(s))


@dataclass(frozen=True)
class SineProfile:
    rho0: float

    def __call__(self, x):
        s = np.sin(2.0 * np.pi * x)
        return self.rho0 - 0.1 * s, 1.0 - 0.01 * s, 2.0, 0.0


def problem_accuracy(n_cells=100, t_final=1.0, mode="mmcc"):
    mat = COPPER.replace(shear_mu=4.5e9, yield_Y0=90e9, name="copper-smooth")
    bc = BoundarySpec(BoundarySide("periodic"), BoundarySide("periodic"))
    return ProblemConfig("accuracy", (0.0, 1.0), n_cells, mat, SineProfile(mat.rho0), bc, t_final,
                         mode)


def _piston_ic(x):
    return COPPER.rho0, 0.0, 1e5, 0.0


def problem_piston(n_cells=100, t_final=150e-6, mode="mmcc", velocity=20.0):
    bc = BoundarySpec(BoundarySide("piston", velocity), BoundarySide("wall"))
    return ProblemConfig("piston", (0.0, 1.0), n_cells, COPPER, _piston_ic, bc, t_final, mode)


def _wilkins_ic(x):
    return ALUMINIUM.rho0, np.where(x <= 5e-3, 800.0, 0.0), 1e-6, 0.0


def problem_wilkins(n_cells=200, t_final=5e-6, mode="mmcc"):
    bc = BoundarySpec(BoundarySide("free"), BoundarySide("wall"))
    return ProblemConfig("wilkins", (0.0, 50e-3), n_cells, ALUMINIUM, _wilkins_ic, bc, t_final,
                         mode)


PROBLEMS = {"accuracy": problem_accuracy, "piston": problem_piston, "wilkins": problem_wilkins}

_FLOAT_KEYS = ("t_final", "tau", "cfl")
_MAT_KEYS = {"rho0": "rho0", "a0": "a0", "s": "hugoniot_slope_s", "gamma0": "gamma0",
             "mu": "shear_mu", "Y0": "yield_Y0"}


def build_problem(name, **overrides):
    """Built-in problem by name with keyword overrides (cells, t_final, mode, ...)."""
    if name not in PROBLEMS:
        raise ConfigError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    cfg = PROBLEMS[name]()
    return apply_overrides(cfg, overrides)


def apply_overrides(cfg, overrides):
    kw = {}
    mat_kw = {}
    for key, val in overrides.items():
        if val is None:
            continue
        if key in ("cells", "n_cells", "N"):
            kw["n_cells"] = int(val)
        elif key in _FLOAT_KEYS:
            kw[key] = float(val)
        elif key == "mode":
            kw["mode"] = str(val).lower()
        elif key == "sweeps":
            kw["sweeps"] = int(val)
        elif key == "domain":
            a, b = (float(v) for v in str(val).split(",")) if isinstance(val, str) else val
            kw["domain"] = (a, b)
        elif key in ("left", "right"):
            sides = {"left": cfg.boundary.left, "right": cfg.boundary.right}
            name, _, arg = str(val).partition(":")
            try:
                sides[key] = BoundarySide(name.strip(), float(arg) if arg else 0.0)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            kw["boundary"] = BoundarySpec(sides["left"], sides["right"])
        elif key in _MAT_KEYS:
            mat_kw[_MAT_KEYS[key]] = float(val)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    if mat_kw:
        try:
            kw["material"] = cfg.material.replace(**mat_kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    try:
        return cfg.replace(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def parse_config_text(text):
    """key=value lines (``#`` comments allowed) into a dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        out[key.strip()] = val.strip()
    return out


def load_config(path, **overrides):
    """Read a key=value file; ``problem=<name>`` selects the base set-up."""
    try:
        with open(path) as fh:
            items = parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    base = items.pop("problem", None)
    if base is None:
        raise ConfigError("config file must name a base problem (problem=...)")
    items.update({k: v for k, v in overrides.items() if v is not None})
    return build_problem(base, **items)


def resolve_problem(name_or_path, **overrides):
    if name_or_path in PROBLEMS:
        return build_problem(name_or_path, **overrides)
    return load_config(name_or_path, **overrides)
