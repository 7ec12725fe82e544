"""Hypoelastic deviatoric stress update and von Mises yield limiting."""
import numpy as np

from ._jit import shared
from .errors import DegenerateCell

WIDTH_TOL = 1e-300


@shared
def yield_clamp(beta, limit):
    return min(max(beta, -limit), limit)


def von_mises_limit(beta, Y0):
    """Clamp ``beta`` to [-(2/3) Y0, (2/3) Y0]; scalars and arrays alike."""
    lim = 2.0 * Y0 / 3.0
    out = np.clip(beta, -lim, lim)
    return float(out) if np.ndim(out) == 0 else out


def sxx_rates(u_faces, sxx_faces, w_faces, sxx_bar, nodes, mu):
    """Rate of the cell-average deviatoric stress along mesh trajectories.

    ``u_faces``, ``sxx_faces`` and ``w_faces`` live on the N+1 nodes;
    ``sxx_bar`` on the N cells.  Returns an array of N rates [Pa/s].
    """
    dx = np.diff(nodes)
    if np.any(~(dx > WIDTH_TOL)):
        raise DegenerateCell("non-positive cell width in deviatoric update")
    du = np.diff(u_faces)
    dw = np.diff(w_faces)
    flux = w_faces * sxx_faces
    return (4.0 * mu / 3.0 * du - np.diff(flux) + sxx_bar * dw) / dx


def sxx_rhs(cell, u_faces, sxx_faces, w_faces, sxx_bar, mesh, mat):
    """Single-cell form of :func:`sxx_rates`; ``cell`` is 0-based."""
    nodes = getattr(mesh, "nodes", mesh)
    lo, hi = nodes[cell], nodes[cell + 1]
    dx = hi - lo
    if not dx > WIDTH_TOL:
        raise DegenerateCell(f"cell {cell} has width {dx}")
    i, j = cell, cell + 1
    s_avg = sxx_bar[cell] if np.ndim(sxx_bar) else sxx_bar
    return (4.0 * mat.shear_mu / 3.0 * (u_faces[j] - u_faces[i])
            - (w_faces[j] * sxx_faces[j] - w_faces[i] * sxx_faces[i])
            + s_avg * (w_faces[j] - w_faces[i])) / dx
