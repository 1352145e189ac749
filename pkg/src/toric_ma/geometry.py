"""Vertex-represented convex polytopes in dimensions 1 to 3.

Predicates (hull minimality, containment, clipping) use an absolute
tolerance of ``TOL = 1e-9`` scaled by the coordinate magnitude.  There is no
exact arithmetic kernel.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .errors import DegenerateBody, DimensionMismatch, NegativeCoordinate

TOL = 1e-9

__all__ = [
    "TOL",
    "ConvexBody",
    "support",
    "minkowski_sum",
    "volume",
    "enclosing_simplex_radius",
    "body_from_subgradients",
    "intersection",
    "translate",
    "scale",
    "box",
    "unit_simplex",
    "hausdorff_distance",
    "clip",
]


def _scale_of(points: np.ndarray) -> float:
    return max(1.0, float(np.abs(points).max())) if points.size else 1.0


def _affine_rank(points: np.ndarray, tol: float):
    center = points.mean(axis=0)
    _, s, vt = np.linalg.svd(points - center, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, np.sqrt(len(points)))))
    return rank, center, vt[:rank]


def _drop_collinear(poly: np.ndarray, tol: float) -> np.ndarray:
    # poly is a ccw cycle; remove vertices lying on the segment of their neighbours
    pts = list(poly)
    changed = True
    while changed and len(pts) > 3:
        changed = False
        for i in range(len(pts)):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
            d = c - a
            nd = np.hypot(*d)
            if nd == 0.0:
                continue
            dist = abs(d[0] * (b[1] - a[1]) - d[1] * (b[0] - a[0])) / nd
            if dist <= tol:
                del pts[i]
                changed = True
                break
    return np.array(pts)


def _hull_indices(points: np.ndarray, tol: float) -> np.ndarray:
    """Indices of a minimal vertex set of conv(points); ccw order in 2-D."""
    m, n = points.shape
    if m == 1:
        return np.array([0])
    rank, center, basis = _affine_rank(points, tol)
    if rank == 0:
        return np.array([0])
    if rank == 1:
        t = (points - center) @ basis[0]
        return np.array([int(np.argmin(t)), int(np.argmax(t))])
    if rank < n:
        local = (points - center) @ basis.T
        return _hull_indices(local, tol)
    hull = ConvexHull(points)
    idx = hull.vertices
    if n == 2:
        kept = _drop_collinear(points[idx], tol)
        # map back to indices
        out = []
        for v in kept:
            out.append(int(idx[np.argmin(np.abs(points[idx] - v).sum(axis=1))]))
        return np.array(out)
    return np.asarray(idx)


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Compact convex polytope ``conv(vertices)`` in R^n, n in {1, 2, 3}.

    The constructor accepts any finite point set and keeps only its hull
    vertices.  Lower-dimensional hulls are allowed and reported through
    :attr:`is_degenerate`; an empty vertex array is the empty set (used for
    empty subgradient cells).
    """

    vertices: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if pts.ndim != 2 or pts.shape[1] not in (1, 2, 3):
            raise DimensionMismatch(f"vertices must have shape (m, n) with n <= 3, got {pts.shape}")
        if len(pts):
            if not np.all(np.isfinite(pts)):
                raise ValueError("vertices must be finite")
            pts = np.unique(pts, axis=0)
            pts = pts[_hull_indices(pts, TOL * _scale_of(pts))]
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    @classmethod
    def empty(cls, dim: int) -> "ConvexBody":
        return cls(np.zeros((0, dim)))

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    @cached_property
    def affine_rank(self) -> int:
        if self.is_empty:
            return -1
        if len(self.vertices) == 1:
            return 0
        return _affine_rank(self.vertices, TOL * _scale_of(self.vertices))[0]

    @property
    def is_degenerate(self) -> bool:
        return self.affine_rank < self.dim

    @cached_property
    def volume(self) -> float:
        if self.is_degenerate:
            return 0.0
        v = self.vertices
        c = v.mean(axis=0)
        if self.dim == 1:
            return float(v.max() - v.min())
        if self.dim == 2:
            a = v - c
            b = np.roll(a, -1, axis=0)
            return float(0.5 * np.sum(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]))
        simplices = ConvexHull(v).simplices
        d = v[simplices] - c
        return float(np.abs(np.linalg.det(d)).sum() / 6.0)

    @cached_property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @cached_property
    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Facet description ``A p <= b`` with unit normals (full-dimensional bodies)."""
        if self.is_degenerate:
            raise DegenerateBody("facet description requires a full-dimensional body")
        v = self.vertices
        if self.dim == 1:
            return np.array([[1.0], [-1.0]]), np.array([v.max(), -v.min()])
        if self.dim == 2:
            e = np.roll(v, -1, axis=0) - v
            normals = np.column_stack([e[:, 1], -e[:, 0]])
            normals /= np.linalg.norm(normals, axis=1)[:, None]
            return normals, np.einsum("ij,ij->i", normals, v)
        eq = ConvexHull(v).equations
        eq = np.unique(np.round(eq, 12), axis=0)
        return eq[:, :3], -eq[:, 3]

    def contains(self, x, tol: float = TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if self.is_empty:
            return False
        if self.is_degenerate:
            probe = ConvexBody(np.vstack([self.vertices, x]))
            return probe.affine_rank == self.affine_rank and hausdorff_distance(probe, self) <= tol
        a, b = self.halfspaces
        return bool(np.all(a @ x <= b + tol * _scale_of(self.vertices)))

    def __repr__(self):
        return f"ConvexBody(dim={self.dim}, vertices={self.vertices.tolist()})"


def _check_dim(P: ConvexBody, x: np.ndarray):
    if x.shape[-1] != P.dim:
        raise DimensionMismatch(f"expected {P.dim}-vectors, got shape {x.shape}")


def support(P: ConvexBody, x) -> float | np.ndarray:
    """Support function ``h_P(x) = max_{p in P} <x, p>``.

    Accepts a single vector or a stack of vectors of shape ``(m, n)``.
    """
    x = np.asarray(x, dtype=float)
    _check_dim(P, x)
    vals = x @ P.vertices.T
    out = vals.max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def minkowski_sum(P: ConvexBody, Q: ConvexBody) -> ConvexBody:
    if P.dim != Q.dim:
        raise DimensionMismatch(f"cannot add bodies of dimension {P.dim} and {Q.dim}")
    sums = P.vertices[:, None, :] + Q.vertices[None, :, :]
    return ConvexBody(sums.reshape(-1, P.dim))


def volume(P: ConvexBody) -> float:
    return P.volume


def translate(P: ConvexBody, t) -> ConvexBody:
    t = np.asarray(t, dtype=float)
    _check_dim(P, t)
    return ConvexBody(P.vertices + t)


def scale(P: ConvexBody, s: float) -> ConvexBody:
    """Homothety ``sP`` about the origin."""
    return ConvexBody(s * P.vertices)


def box(lo, hi) -> ConvexBody:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    corners = np.array(list(itertools.product(*zip(lo, hi))))
    return ConvexBody(corners)


def unit_simplex(n: int) -> ConvexBody:
    return ConvexBody(np.vstack([np.zeros(n), np.eye(n)]))


def enclosing_simplex_radius(P: ConvexBody) -> float:
    """Smallest ``r`` with ``P`` inside ``r`` times the unit simplex.

    Bodies must sit in the closed positive orthant; translate first otherwise.
    """
    if np.any(P.vertices < -TOL * _scale_of(P.vertices)):
        raise NegativeCoordinate("body has a negative vertex coordinate; translate it into R_+^n first")
    return float(P.vertices.sum(axis=1).max())


# -- clipping -----------------------------------------------------------------


def _clip_interval(lo, hi, a, b, eps):
    for ai, bi, ei in zip(a, b, eps):
        ai = ai[0]
        if ai > 0:
            hi = min(hi, bi / ai)
        elif ai < 0:
            lo = max(lo, bi / ai)
        elif bi < -ei:
            return None
    if lo > hi + 1e-15 * max(1.0, abs(lo), abs(hi)):
        return None
    return lo, max(lo, hi)


def _clip_polygon(poly: list, a0: float, a1: float, b: float, eps: float) -> list:
    # keeps {p : a . p <= b}
    m = len(poly)
    if m == 0:
        return poly
    s = [a0 * x + a1 * y - b for x, y in poly]
    if max(s) <= eps:
        return poly
    if min(s) > eps:
        return []
    out = []
    for i in range(m):
        j = i + 1 if i + 1 < m else 0
        si, sj = s[i], s[j]
        if si <= eps:
            out.append(poly[i])
        if (si < -eps and sj > eps) or (si > eps and sj < -eps):
            t = si / (si - sj)
            xi, yi = poly[i]
            xj, yj = poly[j]
            out.append((xi + t * (xj - xi), yi + t * (yj - yi)))
    # drop consecutive duplicates
    dedup = []
    for p in out:
        if not dedup or abs(p[0] - dedup[-1][0]) + abs(p[1] - dedup[-1][1]) > 1e-14 * (1 + abs(p[0]) + abs(p[1])):
            dedup.append(p)
    if len(dedup) > 1 and abs(dedup[0][0] - dedup[-1][0]) + abs(dedup[0][1] - dedup[-1][1]) <= 1e-14 * (
        1 + abs(dedup[0][0]) + abs(dedup[0][1])
    ):
        dedup.pop()
    return dedup


def _enumerate_vertices(a: np.ndarray, b: np.ndarray, eps: np.ndarray) -> np.ndarray:
    n = a.shape[1]
    combos = np.array(list(itertools.combinations(range(len(a)), n)))
    if len(combos) == 0:
        return np.zeros((0, n))
    mats = a[combos]
    rhs = b[combos]
    det = np.linalg.det(mats)
    ok = np.abs(det) > 1e-12
    if not ok.any():
        return np.zeros((0, n))
    pts = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]
    feasible = np.all(pts @ a.T <= b + eps, axis=1)
    return pts[feasible]


def clip(vertices: np.ndarray, a: np.ndarray, b: np.ndarray, base_halfspaces=None) -> np.ndarray:
    """Vertices of ``conv(vertices) ∩ {p : a p <= b}``.

    ``vertices`` must be in hull order for 2-D input (ccw cycle).  In 3-D the
    cut is done by vertex enumeration and ``base_halfspaces`` (the facet
    description of ``conv(vertices)``) is required.  Returns an ``(m, n)``
    array, possibly empty.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = vertices.shape[1]
    if len(vertices) == 0:
        return vertices
    scale_ = _scale_of(vertices)
    eps = 1e-12 * (np.abs(b) + np.linalg.norm(a, axis=1) * scale_ + 1.0)
    if n == 1:
        res = _clip_interval(vertices.min(), vertices.max(), a, b, eps)
        if res is None:
            return np.zeros((0, 1))
        lo, hi = res
        return np.array([[lo], [hi]]) if hi > lo else np.array([[lo]])
    if n == 2:
        poly = [tuple(p) for p in vertices.tolist()]
        for (a0, a1), bi, ei in zip(a.tolist(), b.tolist(), eps.tolist()):
            poly = _clip_polygon(poly, a0, a1, bi, ei)
            if not poly:
                return np.zeros((0, 2))
        return np.array(poly)
    if base_halfspaces is None:
        raise ValueError("3-D clipping needs the facet description of the base polytope")
    A0, b0 = base_halfspaces
    aa = np.vstack([A0, a])
    bb = np.concatenate([b0, b])
    ee = 1e-10 * (np.abs(bb) + np.linalg.norm(aa, axis=1) * scale_ + 1.0)
    return _enumerate_vertices(aa, bb, ee)


def intersection(P: ConvexBody, Q: ConvexBody) -> ConvexBody:
    """``P ∩ Q``; ``Q`` must be full-dimensional."""
    if P.dim != Q.dim:
        raise DimensionMismatch("bodies of different dimension")
    if P.is_empty:
        return P
    a, b = Q.halfspaces
    if P.dim == 3:
        if P.is_degenerate:
            raise DegenerateBody("3-D intersection needs a full-dimensional first body")
        return ConvexBody(clip(P.vertices, a, b, base_halfspaces=P.halfspaces))
    return ConvexBody(clip(P.vertices, a, b))


def _point_polygon_distance(x: np.ndarray, P: ConvexBody) -> float:
    if P.contains(x, tol=0.0) and not P.is_degenerate:
        return 0.0
    v = P.vertices
    if len(v) == 1:
        return float(np.linalg.norm(x - v[0]))
    segs = zip(v, np.roll(v, -1, axis=0)) if len(v) > 2 else [(v[0], v[1])]
    best = np.inf
    for p, q in segs:
        d = q - p
        t = np.clip(np.dot(x - p, d) / np.dot(d, d), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(x - (p + t * d))))
    return best


def hausdorff_distance(P: ConvexBody, Q: ConvexBody) -> float:
    """Hausdorff distance between two nonempty bodies of dimension <= 2."""
    if P.dim != Q.dim:
        raise DimensionMismatch("bodies of different dimension")
    if P.dim == 1:
        a0, a1 = P.vertices.min(), P.vertices.max()
        b0, b1 = Q.vertices.min(), Q.vertices.max()
        return float(max(abs(a0 - b0), abs(a1 - b1)))
    if P.dim != 2:
        raise NotImplementedError("hausdorff_distance supports n <= 2")
    # for convex polytopes the farthest point of one body from the other is a vertex
    d1 = max(_point_polygon_distance(x, Q) for x in P.vertices)
    d2 = max(_point_polygon_distance(x, P) for x in Q.vertices)
    return max(d1, d2)


def body_from_subgradients(h, sample_radius: float) -> ConvexBody:
    """Recover the asymptotic body of ``h`` from its subgradients.

    Takes the hull of the subgradient cells of every node that lies within
    ``sample_radius`` of the origin and strictly inside the node hull
    (boundary nodes carry the recession part of the body and are skipped).
    """
    from .ma_measure import ma

    if sample_radius <= 0:
        raise ValueError("sample_radius must be positive")
    result = ma(h)
    near = np.linalg.norm(h.nodes, axis=1) <= sample_radius
    pts = [
        cell.vertices
        for cell, keep, bnd in zip(result.cells, near, result.boundary)
        if keep and not bnd and not cell.is_empty
    ]
    if not pts:
        raise ValueError("no interior node within sample_radius")
    return ConvexBody(np.vstack(pts))
