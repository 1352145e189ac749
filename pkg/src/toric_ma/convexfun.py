"""Piecewise-linear convex functions with a prescribed asymptotic body.

A :class:`PLConvexFunction` is stored as node values ``v_j`` at nodes ``x_j``
together with a body ``P``.  The function it stands for is the largest convex
function lying below the data whose slopes stay in ``P``::

    h(x) = max_{p in P} min_j ( v_j + <p, x - x_j> ).

Inside the node hull this is the lower-hull interpolant (when its slopes lie
in ``P``), and far away it grows like the support function ``h_P``, so ``h``
belongs to the class of convex functions bounded by ``h_P + C``.  All
envelope operations are biconjugations of node data computed through the
clipped Laguerre complex; nothing is solved iteratively.
"""
from __future__ import annotations

import dataclasses
from dataclasses import InitVar, dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from ._laguerre import LaguerreComplex, laguerre_complex
from .errors import DimensionMismatch, IncompatibleGrids, NoStabilization, NonConvexInput
from .geometry import ConvexBody, intersection, scale, support, unit_simplex

__all__ = [
    "Obstacle",
    "PLConvexFunction",
    "box_grid",
    "support_function",
    "sample",
    "evaluate",
    "reference_potential",
    "reference_function",
    "convex_envelope",
    "rooftop",
    "singularity_envelope",
    "is_model",
    "default_schedule",
    "legendre",
    "discrete_legendre",
]

CONVEXITY_TOL = 1e-9


def as_nodes(nodes, dim: int | None = None) -> np.ndarray:
    arr = np.asarray(nodes, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None] if dim in (None, 1) else arr[None, :]
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"expected {dim}-dimensional nodes, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Node data with a body and no convexity requirement."""

    body: ConvexBody
    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = as_nodes(self.nodes, self.body.dim)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(values) != len(nodes):
            raise ValueError(f"{len(nodes)} nodes but {len(values)} values")
        if not np.all(np.isfinite(values)):
            raise ValueError("node values must be finite")
        nodes.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.body.dim

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class PLConvexFunction(Obstacle):
    """Convex node data; see the module docstring for the represented function.

    Construction checks that the data reproduces itself under
    biconjugation with slopes in ``body`` (to ``1e-9`` relative to the value
    scale) and raises :class:`NonConvexInput` otherwise.  Pass
    ``check=False`` only for data that is convex by construction.
    """

    check: InitVar[bool] = True

    def __post_init__(self, check):
        super().__post_init__()
        if check:
            g = self.complex.evaluate(self.nodes)
            tol = CONVEXITY_TOL * max(1.0, float(np.abs(self.values).max()))
            bad = self.values - g
            if bad.max() > tol:
                i = int(np.argmax(bad))
                raise NonConvexInput(
                    f"node {i} value {self.values[i]:.12g} lies {bad[i]:.3g} above the convex "
                    "envelope with slopes in the body"
                )

    @cached_property
    def complex(self) -> LaguerreComplex:
        return laguerre_complex(self.body, self.nodes, self.values)

    def __call__(self, x):
        return evaluate(self, x)

    def shift(self, c: float) -> "PLConvexFunction":
        """``h + c``; the cell complex is reused, so ``ma(h.shift(c))`` equals ``ma(h)`` exactly."""
        out = PLConvexFunction(self.body, self.nodes, self.values + c, check=False)
        cx = self.__dict__.get("complex")
        if cx is not None:
            out.__dict__["complex"] = dataclasses.replace(cx, values=out.values, conj=cx.conj - c)
        return out

    def with_values(self, values, check: bool = True) -> "PLConvexFunction":
        return PLConvexFunction(self.body, self.nodes, values, check=check)


def box_grid(dim: int, radius: float, points_per_axis: int) -> np.ndarray:
    """Tensor grid on ``[-radius, radius]^dim``; odd counts include the origin."""
    axis = np.linspace(-radius, radius, points_per_axis)
    mesh = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def support_function(P: ConvexBody, nodes) -> PLConvexFunction:
    """``h_P`` sampled at ``nodes``."""
    nodes = as_nodes(nodes, P.dim)
    return PLConvexFunction(P, nodes, support(P, nodes))


def sample(body: ConvexBody, nodes, f: Callable, check: bool = True) -> PLConvexFunction:
    """Sample a convex function ``f`` (vectorised over rows) at ``nodes``."""
    nodes = as_nodes(nodes, body.dim)
    return PLConvexFunction(body, nodes, np.asarray(f(nodes), dtype=float).reshape(-1), check=check)


def evaluate(h: PLConvexFunction, x):
    """Value of the represented convex function at a point or stack of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 0 or (x.ndim == 1 and (h.dim > 1 or x.shape[0] == 1))
    pts = as_nodes(x, h.dim) if x.ndim < 2 else x
    if pts.shape[1] != h.dim:
        raise DimensionMismatch(f"expected {h.dim}-vectors, got shape {x.shape}")
    out = h.complex.evaluate(pts)
    return float(out[0]) if single else out


def reference_potential(r: float, x):
    """``(r/2) log(1 + e^{2x_1} + ... + e^{2x_n})``, evaluated stably.

    ``x`` is one point or a stack of points (rows).
    """
    if r <= 0:
        raise ValueError("r must be positive")
    x = np.asarray(x, dtype=float)
    pts = x.reshape(1, -1) if x.ndim <= 1 else x
    z = np.column_stack([np.zeros(len(pts)), 2.0 * pts])
    out = 0.5 * r * logsumexp(z, axis=1)
    return float(out[0]) if x.ndim <= 1 else out


def reference_function(r: float, nodes, dim: int | None = None) -> PLConvexFunction:
    """The reference potential sampled at ``nodes``, with body ``r`` times the unit simplex."""
    nodes = as_nodes(nodes, dim)
    body = scale(unit_simplex(nodes.shape[1]), r)
    return PLConvexFunction(body, nodes, reference_potential(r, nodes))


def convex_envelope(obs: Obstacle) -> PLConvexFunction:
    """Largest convex function below the obstacle at the nodes with slopes in its body."""
    cx = laguerre_complex(obs.body, obs.nodes, obs.values)
    g = np.minimum(cx.evaluate(obs.nodes), obs.values)
    return PLConvexFunction(obs.body, obs.nodes, g, check=False)


def _same_grid(u: Obstacle, v: Obstacle):
    if u.dim != v.dim:
        raise DimensionMismatch("functions of different dimension")
    if u.nodes.shape != v.nodes.shape or not np.array_equal(u.nodes, v.nodes):
        raise IncompatibleGrids("functions are not sampled on the same nodes")


def _common_body(P: ConvexBody, Q: ConvexBody) -> ConvexBody:
    if P is Q or (P.vertices.shape == Q.vertices.shape and np.array_equal(P.vertices, Q.vertices)):
        return P
    if all(P.contains(q) for q in Q.vertices):
        return Q
    if all(Q.contains(p) for p in P.vertices):
        return P
    if Q.is_degenerate:
        P, Q = Q, P
    out = intersection(P, Q)
    if out.is_empty:
        raise ValueError("bodies have empty intersection; no convex minorant with admissible slopes")
    return out


def rooftop(u: PLConvexFunction, v: PLConvexFunction) -> PLConvexFunction:
    """Largest convex minorant of ``min(u, v)`` on the shared nodes.

    Its slopes are confined to the intersection of the two bodies, the
    asymptotic body of ``min(h_P, h_Q)``'s convex minorant.
    """
    _same_grid(u, v)
    body = _common_body(u.body, v.body)
    return convex_envelope(Obstacle(body, u.nodes, np.minimum(u.values, v.values)))


def singularity_envelope(
    psi: PLConvexFunction, chi: PLConvexFunction, tol: float = 1e-9, max_doublings: int = 60
) -> PLConvexFunction:
    """Limit of ``rooftop(psi + C, chi)`` as ``C`` grows.

    ``C`` doubles from 1 until two successive envelopes agree to ``tol`` in
    the sup norm over the nodes.

    Raises
    ------
    NoStabilization
        If no two successive envelopes agree within ``max_doublings`` steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _same_grid(psi, chi)
    prev = None
    c = 1.0
    for _ in range(max_doublings):
        cur = rooftop(psi.shift(c), chi)
        if prev is not None and np.max(np.abs(cur.values - prev.values)) < tol:
            return cur
        prev = cur
        c *= 2.0
    raise NoStabilization(f"envelope still moving after {max_doublings} doublings of the shift")


def default_schedule(dim: int) -> list[np.ndarray]:
    """Expanding boxes ``[-2^k, 2^k]^dim``.

    In 1-D, k = 3..8 with the mesh halving at each step.  In higher
    dimensions, k = 3..6 with 17 points per axis, which keeps node counts
    desk-sized.
    """
    if dim == 1:
        return [box_grid(1, 2.0**k, 2 * 2**k * 2 ** (k - 3) + 1) for k in range(3, 9)]
    return [box_grid(dim, 2.0**k, 17) for k in range(3, 7)]


def is_model(
    h,
    r: float,
    grids: Sequence[np.ndarray] | None = None,
    body: ConvexBody | None = None,
    tol: float = 1e-9,
    growth: float = 0.1,
    streak: int = 3,
) -> tuple[bool, float]:
    """Numerical test for model-type singularity.

    ``h`` is a :class:`PLConvexFunction` (evaluated through its recession
    extension) or a vectorised callable together with ``body``.  On each grid
    the gap ``P[h](rho_r) - h`` is computed; the verdict is ``False`` when its
    oscillation grows by at least ``growth`` (relative) at ``streak``
    consecutive refinement steps.

    Returns
    -------
    (verdict, bound)
        ``bound`` is the largest sup-gap seen when the verdict is ``True`` and
        the last sup-gap otherwise.
    """
    if isinstance(h, PLConvexFunction):
        body = h.body
        f = h.complex.evaluate
    else:
        if body is None:
            raise ValueError("a callable h needs its body")
        f = h
    grids = default_schedule(body.dim) if grids is None else grids
    sups, oscs = [], []
    for nodes in grids:
        nodes = as_nodes(nodes, body.dim)
        psi = PLConvexFunction(body, nodes, np.asarray(f(nodes), dtype=float).reshape(-1))
        chi = reference_function(r, nodes, body.dim)
        env = singularity_envelope(psi, chi, tol=tol)
        gap = env.values - psi.values
        sups.append(float(gap.max()))
        oscs.append(float(gap.max() - gap.min()))
    run = 0
    for prev, cur in zip(oscs[:-1], oscs[1:]):
        if cur - prev >= growth * max(prev, 1e-12):
            run += 1
            if run >= streak:
                return False, sups[-1]
        else:
            run = 0
    return True, max(sups)


def discrete_legendre(nodes, values, dual_points) -> np.ndarray:
    """``f*(p) = max_i <p, x_i> - f_i`` for each row ``p`` of ``dual_points``."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    dual = as_nodes(dual_points, nodes.shape[1])
    out = np.empty(len(dual))
    step = max(1, 2_000_000 // max(1, len(nodes)))
    for s in range(0, len(dual), step):
        out[s : s + step] = (dual[s : s + step] @ nodes.T - values).max(axis=1)
    return out


def legendre(h: Obstacle, dual_grid) -> np.ndarray:
    """Discrete Legendre transform of the node data over ``dual_grid``.

    Only nodes enter the maximum, so enlarging the node set can only raise
    the result.
    """
    return discrete_legendre(h.nodes, h.values, dual_grid)
