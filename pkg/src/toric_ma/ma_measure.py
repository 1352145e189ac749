"""Alexandrov real Monge-Ampère measure of PL convex functions.

The measure of a node is ``n!/2^n`` times the volume of its subgradient cell.
Nodes on the boundary of the node hull carry the part of the body that the
truncated grid cannot resolve; their masses go to a separate
``boundary_remainder`` instead of the total.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ._laguerre import mass_factor
from .convexfun import Obstacle, PLConvexFunction
from .errors import NonConvexInput
from .geometry import ConvexBody

__all__ = ["MAResult", "subgradient_cell", "ma", "full_mass_check", "boundary_nodes", "mass_factor"]


@dataclass(frozen=True, eq=False)
class MAResult:
    masses: np.ndarray
    """Mass per node; zero at boundary nodes (see ``boundary_masses``)."""
    boundary: np.ndarray
    boundary_masses: np.ndarray
    total: float
    boundary_remainder: float
    cell_vertices: list

    @cached_property
    def cells(self) -> list[ConvexBody]:
        return [ConvexBody(v) for v in self.cell_vertices]

    def to_dict(self) -> dict:
        return {
            "masses": self.masses.tolist(),
            "total": self.total,
            "boundary_remainder": self.boundary_remainder,
        }


def _require_convex(h):
    if not isinstance(h, PLConvexFunction):
        if isinstance(h, Obstacle):
            raise NonConvexInput("an obstacle has no Monge-Ampère measure; take its convex envelope first")
        raise TypeError(f"expected PLConvexFunction, got {type(h).__name__}")


def boundary_nodes(nodes: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Mask of nodes on the boundary of their convex hull.

    Every node counts as boundary when the hull is lower-dimensional.
    """
    N, n = nodes.shape
    if n == 1:
        x = nodes[:, 0]
        return (x == x.min()) | (x == x.max())
    scale = max(1.0, float(np.abs(nodes).max()))
    try:
        hull = ConvexHull(nodes)
    except (QhullError, ValueError):
        return np.ones(N, dtype=bool)
    slack = nodes @ hull.equations[:, :-1].T + hull.equations[:, -1]
    return slack.max(axis=1) >= -tol * scale


def subgradient_cell(h: PLConvexFunction, i: int) -> ConvexBody:
    """Subgradient set of ``h`` at node ``i``: ``{p in P : <p, x_i - x_j> >= v_i - v_j for all j}``."""
    _require_convex(h)
    return ConvexBody(h.complex.cells[i])


def ma(h: PLConvexFunction) -> MAResult:
    """Per-node Monge-Ampère masses ``(n!/2^n) Vol(dh(x_i))``."""
    _require_convex(h)
    cx = h.complex
    c = mass_factor(h.dim)
    raw = c * cx.volumes
    bnd = boundary_nodes(h.nodes)
    masses = np.where(bnd, 0.0, raw)
    bmasses = np.where(bnd, raw, 0.0)
    return MAResult(
        masses=masses,
        boundary=bnd,
        boundary_masses=bmasses,
        total=float(masses.sum()),
        boundary_remainder=float(bmasses.sum()),
        cell_vertices=cx.cells,
    )


def full_mass_check(h: PLConvexFunction, tol: float = 1e-9) -> bool:
    """Whether ``h`` has full mass relative to its body: ``total == (n!/2^n) Vol(P)``."""
    return abs(ma(h).total - mass_factor(h.dim) * h.body.volume) <= tol
