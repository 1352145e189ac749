"""Volume polynomials of Minkowski combinations and mixed volumes.

``Vol(t_1 P_1 + ... + t_k P_k)`` is a homogeneous polynomial of degree ``n``
in ``t >= 0``.  It is recovered here by exact interpolation: all monomials of
degree ``<= n`` are fitted at the points ``t = 1 + a`` with ``|a| <= n``,
which is a unisolvent set inside the lattice ``{1, ..., n+1}^k``.  The
lower-degree coefficients must then vanish and the remaining lattice points
must be reproduced; both are checked, never smoothed away.

The mixed volume is the coefficient of ``t_1 ... t_n`` divided by ``n!``, so
that ``MV(P, ..., P) = Vol(P)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DegenerateBody, DimensionMismatch, FitResidualError
from .geometry import ConvexBody, minkowski_sum, scale, support

__all__ = [
    "VolumePolynomial",
    "volume_polynomial",
    "mixed_volume",
    "brunn_minkowski_check",
    "log_concavity_check",
    "log_concavity_report",
    "mixed_area_2d",
    "combination_volume",
]

EQ_TOL = 1e-9
FIT_TOL = 1e-8


def _multi_indices(k: int, deg: int):
    """All ``a`` in N^k with ``|a| = deg``, lexicographically descending."""
    if k == 1:
        yield (deg,)
        return
    for first in range(deg, -1, -1):
        for rest in _multi_indices(k - 1, deg - first):
            yield (first,) + rest


def combination_volume(bodies, t) -> float:
    """``Vol(sum t_i P_i)`` for ``t_i >= 0``."""
    terms = [scale(P, float(ti)) for P, ti in zip(bodies, t) if ti != 0]
    if not terms:
        return 0.0
    return reduce(minkowski_sum, terms).volume


@dataclass(frozen=True)
class VolumePolynomial:
    dim: int
    coefficients: dict
    """Map from multi-degree ``(d_1, ..., d_k)`` with ``sum d = dim`` to its coefficient."""
    fit_residual: float
    homogeneity_defect: float

    @property
    def k(self) -> int:
        return len(next(iter(self.coefficients)))

    def __call__(self, t) -> float:
        t = np.asarray(t, dtype=float)
        return float(sum(c * np.prod(t ** np.array(d)) for d, c in self.coefficients.items()))

    def coefficient(self, degrees) -> float:
        return self.coefficients.get(tuple(degrees), 0.0)

    def __repr__(self):
        terms = []
        for d, c in self.coefficients.items():
            if abs(c) <= EQ_TOL:
                continue
            mono = "*".join(f"t{i + 1}^{e}" if e > 1 else f"t{i + 1}" for i, e in enumerate(d) if e)
            terms.append(f"{c:.12g}*{mono}")
        return "VolumePolynomial(" + (" + ".join(terms) or "0") + ")"


def _check_bodies(bodies):
    if not bodies:
        raise ValueError("at least one body required")
    dims = {P.dim for P in bodies}
    if len(dims) != 1:
        raise DimensionMismatch(f"bodies of dimensions {sorted(dims)}")
    return dims.pop()


def volume_polynomial(bodies: list[ConvexBody]) -> VolumePolynomial:
    """Fit ``t -> Vol(sum t_i P_i)`` exactly.

    Raises
    ------
    FitResidualError
        If lower-degree coefficients or lattice residuals exceed ``1e-8``
        relative to the volume scale; this signals a geometry bug.
    """
    n = _check_bodies(bodies)
    k = len(bodies)
    if k > n + 1:
        raise ValueError(f"at most n + 1 = {n + 1} bodies supported, got {k}")
    monos = [a for d in range(n, -1, -1) for a in _multi_indices(k, d)]
    pts = np.array([[1 + ai for ai in a] for a in monos], dtype=float)
    expo = np.array(monos, dtype=float)
    V = np.prod(pts[:, None, :] ** expo[None, :, :], axis=2)
    cache: dict = {}

    def vol(t):
        key = tuple(t)
        if key not in cache:
            cache[key] = combination_volume(bodies, t)
        return cache[key]

    y = np.array([vol(p) for p in pts])
    coef = np.linalg.solve(V, y)
    scale_ = max(1.0, float(np.abs(y).max()))
    top = [i for i, a in enumerate(monos) if sum(a) == n]
    low = [i for i, a in enumerate(monos) if sum(a) < n]
    defect = float(np.abs(coef[low]).max()) / scale_ if low else 0.0

    homog = {monos[i]: float(coef[i]) for i in top}
    poly = VolumePolynomial(n, homog, 0.0, defect)
    resid = 0.0
    for t in itertools.product(range(1, n + 2), repeat=k):
        resid = max(resid, abs(poly(t) - vol(t)))
    resid /= scale_
    if defect > FIT_TOL or resid > FIT_TOL:
        raise FitResidualError(
            f"volume samples are not a homogeneous degree-{n} polynomial "
            f"(defect {defect:.3g}, residual {resid:.3g})"
        )
    return VolumePolynomial(n, homog, resid, defect)


def mixed_volume(bodies: list[ConvexBody]) -> float:
    """``MV(P_1, ..., P_n)`` normalised so that ``MV(P, ..., P) = Vol(P)``."""
    n = _check_bodies(bodies)
    if len(bodies) != n:
        raise ValueError(f"need exactly n = {n} bodies, got {len(bodies)}")
    poly = volume_polynomial(bodies)
    return poly.coefficient((1,) * n) / math.factorial(n)


def brunn_minkowski_check(bodies: list[ConvexBody]) -> tuple[float, float, bool]:
    """``(MV(P_1..P_n), prod Vol(P_i)^{1/n}, lhs >= rhs - 1e-9)``."""
    n = _check_bodies(bodies)
    if len(bodies) != n:
        raise ValueError(f"need exactly n = {n} bodies, got {len(bodies)}")
    vols = [P.volume for P in bodies]
    if min(vols) <= 0:
        raise DegenerateBody("every body must have positive volume")
    lhs = mixed_volume(bodies)
    rhs = float(np.prod([v ** (1.0 / n) for v in vols]))
    return lhs, rhs, bool(lhs >= rhs - EQ_TOL)


def log_concavity_report(P0: ConvexBody, P1: ConvexBody, t_samples) -> dict:
    """Per-sample data behind ``log_concavity_check``.

    At each ``t`` the volume ``V(t) = Vol(t P1 + (1-t) P0)`` is compared with
    ``(t Vol(P1)^{1/n} + (1-t) Vol(P0)^{1/n})^n`` on the ``1/n`` power scale;
    ``log V`` is checked for concavity on consecutive sample triples.
    """
    n = _check_bodies([P0, P1])
    v0, v1 = P0.volume, P1.volume
    if min(v0, v1) <= 0:
        raise DegenerateBody("both bodies must have positive volume")
    ts = sorted(float(t) for t in t_samples)
    if any(t < 0 or t > 1 for t in ts):
        raise ValueError("samples must lie in [0, 1]")
    rows = []
    for t in ts:
        vt = combination_volume([P1, P0], [t, 1 - t])
        lhs = vt ** (1.0 / n)
        rhs = t * v1 ** (1.0 / n) + (1 - t) * v0 ** (1.0 / n)
        rows.append({"t": t, "volume": vt, "lhs": lhs, "rhs": rhs, "holds": bool(lhs >= rhs - EQ_TOL)})
    logs = [math.log(r["volume"]) for r in rows]
    worst = 0.0
    for i in range(1, len(ts) - 1):
        a, b, c = ts[i - 1], ts[i], ts[i + 1]
        if c - a <= 0:
            continue
        chord = logs[i - 1] + (logs[i + 1] - logs[i - 1]) * (b - a) / (c - a)
        worst = max(worst, chord - logs[i])
    concave = worst <= EQ_TOL
    return {
        "samples": rows,
        "concavity_defect": worst,
        "concave": concave,
        "holds": bool(concave and all(r["holds"] for r in rows)),
    }


def log_concavity_check(P0: ConvexBody, P1: ConvexBody, t_samples) -> bool:
    """Whether ``Vol(tP1 + (1-t)P0)^{1/n}`` dominates the linear interpolation
    of ``Vol^{1/n}`` at each sample and ``log Vol`` is concave along them."""
    return log_concavity_report(P0, P1, t_samples)["holds"]


def mixed_area_2d(P: ConvexBody, Q: ConvexBody) -> float:
    """Mixed area ``(1/2) sum_i h_Q(nu_i) len_i`` over the edges of ``P``.

    Exact for polygons; kept as an independent check of the polynomial route.
    """
    if P.dim != 2 or Q.dim != 2:
        raise DimensionMismatch("mixed_area_2d needs planar bodies")
    verts = P.vertices
    if len(verts) < 3:
        return 0.0
    total = 0.0
    # edges in ccw order: vertex i -> i+1, outward normal is the edge rotated clockwise
    for i in range(len(verts)):
        e = verts[(i + 1) % len(verts)] - verts[i]
        length = float(np.hypot(*e))
        if length == 0:
            continue
        nu = np.array([e[1], -e[0]]) / length
        total += support(Q, nu) * length
    return 0.5 * total
