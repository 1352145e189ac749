"""Relative extremal functions and Monge-Ampère capacity of box unions.

For a compact ``K`` (a finite union of axis-aligned boxes) the extremal
function is the largest convex ``g`` with slopes in ``P``, ``g <= h_P``
everywhere and ``g <= h_P - 1`` on ``K``.  On a grid it is the envelope of the
obstacle ``h_P - 1`` on the nodes in ``K`` and ``h_P`` elsewhere.  The
capacity is computed twice, as the Monge-Ampère mass of ``g`` on ``K`` and as
the energy ``sum (h_P - g) MA(g)``; the two must agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._laguerre import mass_factor
from .convexfun import Obstacle, PLConvexFunction, as_nodes, box_grid, convex_envelope
from .errors import DimensionMismatch, GridCoverageError
from .geometry import ConvexBody, support
from .ma_measure import ma

__all__ = ["CompactRegion", "CapacityReport", "extremal_function", "capacity", "resolve_grid"]

IDENTITY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class CompactRegion:
    """Finite union of closed boxes ``[lo_i, hi_i]``; degenerate boxes (points, segments) are allowed.

    The empty union is allowed and has capacity zero.
    """

    lo: np.ndarray  # (m, n)
    hi: np.ndarray  # (m, n)

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim == 1:
            lo, hi = lo[None, :], hi[None, :]
        if lo.shape != hi.shape:
            raise DimensionMismatch("lo and hi corners differ in shape")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box corners must be finite")
        if np.any(hi < lo):
            raise ValueError("each box needs lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_boxes(cls, boxes, dim: int | None = None) -> "CompactRegion":
        """From ``[(lo, hi), ...]``; ``dim`` is required when ``boxes`` is empty."""
        boxes = [(np.atleast_1d(lo), np.atleast_1d(hi)) for lo, hi in boxes]
        if not boxes:
            if dim is None:
                raise ValueError("dimension needed for an empty region")
            return cls(np.zeros((0, dim)), np.zeros((0, dim)))
        return cls(np.array([b[0] for b in boxes]), np.array([b[1] for b in boxes]))

    @property
    def dim(self) -> int:
        return self.lo.shape[1]

    @property
    def is_empty(self) -> bool:
        return len(self.lo) == 0

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        """Membership mask for the rows of ``x``."""
        x = as_nodes(x, self.dim)
        if self.is_empty:
            return np.zeros(len(x), dtype=bool)
        inside = (x[:, None, :] >= self.lo[None] - tol) & (x[:, None, :] <= self.hi[None] + tol)
        return inside.all(axis=2).any(axis=1)

    def radius(self) -> float:
        if self.is_empty:
            return 0.0
        return float(max(np.abs(self.lo).max(), np.abs(self.hi).max()))


@dataclass(frozen=True, eq=False)
class CapacityReport:
    extremal: PLConvexFunction
    cap_mass: float
    cap_energy: float

    @property
    def discrepancy(self) -> float:
        return abs(self.cap_mass - self.cap_energy)

    def to_dict(self) -> dict:
        return {
            "cap_mass": self.cap_mass,
            "cap_energy": self.cap_energy,
            "discrepancy": self.discrepancy,
            "extremal": {"nodes": self.extremal.nodes.tolist(), "values": self.extremal.values.tolist()},
        }


def resolve_grid(grid, dim: int) -> np.ndarray:
    """Grid nodes from an ``(m, n)`` array or a ``(radius, points_per_axis)`` pair."""
    if isinstance(grid, tuple) and len(grid) == 2 and np.isscalar(grid[0]):
        radius, m = grid
        return box_grid(dim, float(radius), int(m))
    return as_nodes(grid, dim)


def _check_coverage(K: CompactRegion, nodes: np.ndarray):
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    for i in range(len(K.lo)):
        if np.any(K.lo[i] <= lo) or np.any(K.hi[i] >= hi):
            raise GridCoverageError(f"box {i} is not strictly inside the grid box [{lo}, {hi}]")
        piece = CompactRegion(K.lo[i], K.hi[i])
        if not piece.contains(nodes).any():
            raise GridCoverageError(f"box {i} contains no grid node; refine the grid")


def extremal_function(K: CompactRegion, P: ConvexBody, grid) -> PLConvexFunction:
    """Largest convex ``g`` with slopes in ``P``, ``g <= h_P`` and ``g <= h_P - 1`` on ``K``."""
    if K.dim != P.dim:
        raise DimensionMismatch(f"region in R^{K.dim}, body in R^{P.dim}")
    nodes = resolve_grid(grid, P.dim)
    _check_coverage(K, nodes)
    values = support(P, nodes) - K.contains(nodes).astype(float)
    return convex_envelope(Obstacle(P, nodes, values))


def capacity(K: CompactRegion, P: ConvexBody, grid) -> CapacityReport:
    """Capacity of ``K`` relative to ``h_P`` by the mass and energy formulas.

    The boundary nodes of the grid carry no mass (see ``ma``); the grid must
    reach far enough that the remaining mass of ``g`` is resolved, which the
    coverage margin guarantees for the envelope's kinks inside the grid.
    """
    if K.is_empty:
        nodes = resolve_grid(grid, P.dim)
        g = PLConvexFunction(P, nodes, support(P, nodes))
        return CapacityReport(g, 0.0, 0.0)
    g = extremal_function(K, P, grid)
    res = ma(g)
    in_k = K.contains(g.nodes)
    cap_mass = float(res.masses[in_k].sum())
    gap = support(P, g.nodes) - g.values
    cap_energy = float(np.dot(gap, res.masses))
    bound = mass_factor(P.dim) * P.volume
    if cap_mass > bound + 1e-9:
        raise ArithmeticError(f"capacity {cap_mass} exceeds the total mass {bound}")
    return CapacityReport(g, cap_mass, cap_energy)
