"""Clipped Laguerre complex of lifted node data.

For nodes ``x_j`` with values ``w_j`` and a body ``P`` the cell of node ``j`` is

    C_j = {p in P : <p, x_j> - w_j >= <p, x_k> - w_k for all k}.

These are the subgradients of the largest convex function that is ``<= w_j``
at every node and has slopes in ``P``.  Cells are cut only by the constraints
of neighbouring vertices of the lifted hull of ``(x_j, w_j)``; that pruning is
exact because a vertex minimising a linear functional over a polytope's
vertex graph locally does so globally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .geometry import ConvexBody, clip

ALL_PAIRS_LIMIT = 400
_CHUNK = 2_000_000


@dataclass
class LaguerreComplex:
    body: ConvexBody
    nodes: np.ndarray
    values: np.ndarray
    cells: list  # per node: vertex array (ccw in 2-D), possibly empty
    volumes: np.ndarray
    owner: np.ndarray  # True where the cell was cut directly from neighbour constraints
    neighbors: list  # per node: candidate constraint indices (owners only)
    vertices: np.ndarray  # all cell vertices, stacked
    conj: np.ndarray  # conjugate g*(p) at those vertices
    # 1-D fast evaluation data
    _breaks: np.ndarray | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Value of the represented function ``max_k <p_k, x> - g*(p_k)``."""
        x = np.atleast_2d(x)
        if self._breaks is not None:
            p, c = self.vertices[:, 0], self.conj
            k = np.searchsorted(self._breaks, x[:, 0])
            best = np.full(len(x), -np.inf)
            for off in (-1, 0, 1):
                kk = np.clip(k + off, 0, len(p) - 1)
                best = np.maximum(best, p[kk] * x[:, 0] - c[kk])
            return best
        out = np.empty(len(x))
        step = max(1, _CHUNK // max(1, len(self.vertices)))
        for s in range(0, len(x), step):
            out[s : s + step] = (x[s : s + step] @ self.vertices.T - self.conj).max(axis=1)
        return out

    def min_conj(self) -> float:
        return float(self.conj.min())

    def max_conj_on_body(self) -> float:
        # g* is convex, so its max over P sits at a vertex of P
        pv = self.body.vertices
        return float(np.max(self.conj_at(pv)))

    def conj_at(self, p: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(p)
        return (p @ self.nodes.T - self.values).max(axis=1)


def _scale(nodes, values, body) -> float:
    r = float(np.abs(body.vertices).max()) if not body.is_empty else 1.0
    return max(1.0, float(np.abs(values).max()), float(np.abs(nodes).max()) * max(1.0, r))


def _polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    pts = poly.tolist()
    acc = 0.0
    x0, y0 = pts[-1]
    for x1, y1 in pts:
        acc += x0 * y1 - x1 * y0
        x0, y0 = x1, y1
    return 0.5 * abs(acc)


def _cell_volume(cell: np.ndarray) -> float:
    n = cell.shape[1]
    if len(cell) <= n:
        return 0.0
    if n == 1:
        return float(cell.max() - cell.min())
    if n == 2:
        return _polygon_area(cell)
    return ConvexBody(cell).volume


def _adjacency_from_hull(nodes, values):
    lifted = np.column_stack([nodes, values])
    hull = ConvexHull(lifted)
    n1 = lifted.shape[1]
    simp = hull.simplices
    pairs = np.concatenate([simp[:, [i, j]] for i in range(n1) for j in range(i + 1, n1)])
    pairs = np.concatenate([pairs, pairs[:, ::-1]])
    pairs = np.unique(pairs, axis=0)
    owner = np.zeros(len(nodes), dtype=bool)
    owner[hull.vertices] = True
    split = np.searchsorted(pairs[:, 0], np.arange(len(nodes) + 1))
    neighbors = [pairs[split[i] : split[i + 1], 1] for i in range(len(nodes))]
    return owner, neighbors


def _is_affine(nodes, values, tol):
    design = np.column_stack([nodes, np.ones(len(nodes))])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    return np.abs(design @ coef - values).max() <= tol


def _neighbors(nodes, values, tol):
    N, n = nodes.shape
    if N > n + 1:
        try:
            return _adjacency_from_hull(nodes, values)
        except QhullError:
            pass
    if N <= ALL_PAIRS_LIMIT:
        idx = np.arange(N)
        return np.ones(N, dtype=bool), [np.delete(idx, i) for i in range(N)]
    if _is_affine(nodes, values, tol):
        # affine data: constraints are linear in x_k, so node-hull vertices suffice
        hv = np.unique(ConvexHull(nodes).vertices)
        return np.ones(N, dtype=bool), [hv[hv != i] for i in range(N)]
    raise ValueError("could not build the lifted hull of the node data")


def _complex_1d(body, nodes, values, tol) -> LaguerreComplex:
    N = len(nodes)
    order = np.argsort(nodes[:, 0], kind="stable")
    xs, ws = nodes[order, 0], values[order]
    a, b = float(body.vertices.min()), float(body.vertices.max())
    hull: list[int] = []
    for i in range(N):
        while len(hull) >= 2:
            o, m = hull[-2], hull[-1]
            cross = (xs[m] - xs[o]) * (ws[i] - ws[o]) - (ws[m] - ws[o]) * (xs[i] - xs[o])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    H = np.array(hull)
    slopes = np.diff(ws[H]) / np.diff(xs[H])
    left = np.concatenate([[-np.inf], slopes])
    right = np.concatenate([slopes, [np.inf]])

    cells = [np.zeros((0, 1))] * N
    volumes = np.zeros(N)
    owner = np.zeros(N, dtype=bool)
    eps = 1e-12 * (1.0 + abs(a) + abs(b))
    for m, i in enumerate(H):
        lo, hi = max(left[m], a), min(right[m], b)
        j = order[i]
        owner[j] = True
        if lo <= hi + eps:
            hi = max(lo, hi)
            cells[j] = np.array([[lo], [hi]]) if hi > lo else np.array([[lo]])
            volumes[j] = hi - lo
    # non-vertex nodes lying on a hull segment get the segment slope
    seg = np.searchsorted(xs[H], xs, side="right") - 1
    for i in range(N):
        j = order[i]
        if owner[j]:
            continue
        m = min(seg[i], len(slopes) - 1)
        interp = ws[H[m]] + slopes[m] * (xs[i] - xs[H[m]])
        if ws[i] <= interp + tol and a - eps <= slopes[m] <= b + eps:
            cells[j] = np.array([[min(max(slopes[m], a), b)]])

    inner = slopes[(slopes > a) & (slopes < b)]
    p = np.unique(np.concatenate([[a, b], inner]))
    # owner of each dual vertex: the hull vertex whose slope interval contains it
    own = np.searchsorted(slopes, p, side="left")
    conj = p * xs[H[own]] - ws[H[own]]
    breaks = np.zeros(0)
    if len(p) > 1:
        # break between lines k and k+1 is the node owning (p_k, p_{k+1})
        mid = 0.5 * (p[:-1] + p[1:])
        breaks = xs[H[np.searchsorted(slopes, mid, side="left")]]
    return LaguerreComplex(
        body=body,
        nodes=nodes,
        values=values,
        cells=cells,
        volumes=volumes,
        owner=owner,
        neighbors=[np.zeros(0, dtype=int)] * N,
        vertices=p[:, None],
        conj=conj,
        _breaks=breaks,
    )


def laguerre_complex(body: ConvexBody, nodes, values) -> LaguerreComplex:
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    values = np.asarray(values, dtype=float).reshape(-1)
    N, n = nodes.shape
    if body.is_empty:
        raise ValueError("empty body")
    tol = 1e-9 * _scale(nodes, values, body)
    if n == 1:
        return _complex_1d(body, nodes, values, tol)

    owner, neighbors = _neighbors(nodes, values, tol)
    base = body.vertices
    base_hs = body.halfspaces if n == 3 else None
    cells = [np.zeros((0, n))] * N
    volumes = np.zeros(N)
    vert_chunks, conj_chunks = [], []
    for j in np.flatnonzero(owner):
        nb = neighbors[j]
        a = nodes[nb] - nodes[j]
        bb = values[nb] - values[j]
        if n == 2:
            cell = clip(base, a, bb)
        else:
            cell = clip(base, a, bb, base_halfspaces=base_hs)
            if len(cell):
                cell = np.unique(np.round(cell, 13), axis=0)
        cells[j] = cell
        if len(cell):
            volumes[j] = _cell_volume(cell)
            vert_chunks.append(cell)
            conj_chunks.append(cell @ nodes[j] - values[j])
    if not vert_chunks:
        raise ValueError("no nonempty cell; node data is inconsistent")
    V = np.vstack(vert_chunks)
    C = np.concatenate(conj_chunks)

    rest = np.flatnonzero(~owner)
    if len(rest):
        step = max(1, _CHUNK // len(V))
        for s in range(0, len(rest), step):
            idx = rest[s : s + step]
            gap = nodes[idx] @ V.T - values[idx, None] - C[None, :]
            hit = gap >= -tol
            for row, j in enumerate(idx):
                pts = V[hit[row]]
                if len(pts):
                    cells[j] = pts
    return LaguerreComplex(
        body=body,
        nodes=nodes,
        values=values,
        cells=cells,
        volumes=volumes,
        owner=owner,
        neighbors=neighbors,
        vertices=V,
        conj=C,
    )


def face_measures(cx: LaguerreComplex) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Triplets ``(i, k, |F_ik|)`` for pairs of cells sharing a facet.

    ``|F_ik|`` is the (n-1)-measure of ``C_i ∩ C_k``; in 1-D it is 1 for
    adjacent nonempty cells.  Each unordered pair is reported from both sides
    and averaged by the caller.
    """
    n = cx.dim
    rows, cols, meas = [], [], []
    nodes, values = cx.nodes, cx.values
    if n == 1:
        order = np.argsort(nodes[:, 0])
        live = [j for j in order if cx.volumes[j] > 0]
        for i, k in zip(live[:-1], live[1:]):
            rows += [i, k]
            cols += [k, i]
            meas += [1.0, 1.0]
        return np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(meas)
    tol = 1e-9 * _scale(nodes, values, cx.body)
    for j in np.flatnonzero(cx.volumes > 0):
        cell = cx.cells[j]
        nb = cx.neighbors[j]
        if len(nb) == 0:
            continue
        a = nodes[nb] - nodes[j]
        bb = values[nb] - values[j]
        resid = cell @ a.T - bb
        on = np.abs(resid) <= tol * (1.0 + np.linalg.norm(a, axis=1))
        counts = on.sum(axis=0)
        for col in np.flatnonzero(counts >= n):
            pts = cell[on[:, col]]
            if n == 2:
                d = pts - pts[0]
                direction = np.array([-a[col, 1], a[col, 0]])
                t = d @ direction / np.linalg.norm(direction)
                m = float(t.max() - t.min())
            else:
                normal = a[col] / np.linalg.norm(a[col])
                basis = np.linalg.svd(np.eye(3) - np.outer(normal, normal))[0][:, :2]
                local = (pts - pts[0]) @ basis
                try:
                    m = ConvexHull(local).volume
                except QhullError:
                    m = 0.0
            if m > 0:
                rows.append(j)
                cols.append(int(nb[col]))
                meas.append(m)
    return np.array(rows, dtype=int), np.array(cols, dtype=int), np.array(meas)


def mass_factor(n: int) -> float:
    """The normalisation ``n! / 2^n`` of the real Monge-Ampère measure."""
    return math.factorial(n) / 2.0**n
