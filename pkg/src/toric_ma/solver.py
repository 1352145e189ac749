"""Discrete real Monge-Ampère and Aubin-Yau equations with prescribed body.

``solve_ma`` finds node values at the atoms of a discrete measure so that
every atom's subgradient cell inside ``P`` carries the atom's mass.  This is
a semi-discrete transport problem between ``(n!/2^n) Lebesgue|_P`` and the
atoms; it is solved by damped Newton iteration on the (concave) dual, whose
Jacobian is the weighted graph Laplacian of cell adjacencies.

``solve_aubin_yau`` wraps it in the damped fixed-point loop

    u <- (1 - a) u + a * S(c(u) e^{lambda u} mu),   c(u) = M / sum e^{lambda u} mu,

and returns ``u + log(c)/lambda`` at the fixed point, which solves
``MA(h) = e^{lambda h} mu`` with no free constant.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._laguerre import face_measures, laguerre_complex, mass_factor
from .convexfun import PLConvexFunction, as_nodes
from .errors import DegenerateBody, DimensionMismatch, MassMismatch, NonConvergence
from .geometry import ConvexBody

log = logging.getLogger(__name__)

__all__ = [
    "DiscreteMeasure",
    "SolveReport",
    "BoxDensity",
    "solve_ma",
    "solve_aubin_yau",
    "uniform_bound_diagnostic",
    "deviation_from_body",
]

MASS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite sum of weighted Dirac masses."""

    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pts = as_nodes(self.points)
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(m) != len(pts):
            raise ValueError("one mass per atom required")
        if len(m) == 0:
            raise ValueError("measure has no atoms")
        if np.any(m <= 0) or not np.all(np.isfinite(m)):
            raise ValueError("atom masses must be positive and finite")
        if len(pts) > 1:
            key = np.round(pts / 1e-12).astype(np.int64) if np.abs(pts).max() < 1e6 else pts
            if len(np.unique(key, axis=0)) < len(pts):
                raise ValueError("atoms must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_atoms(cls, atoms) -> "DiscreteMeasure":
        """Build from ``[(point, mass), ...]``."""
        pts = [np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in atoms]
        return cls(np.vstack(pts), [m for _, m in atoms])

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total(self) -> float:
        return float(self.masses.sum())

    def __len__(self):
        return len(self.masses)

    def scaled(self, c) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points, self.masses * c)


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: PLConvexFunction
    residual: float
    iterations: int
    normalization: str
    atom_values: np.ndarray
    masses: np.ndarray
    newton_steps: int = 0

    def to_dict(self) -> dict:
        return {
            "solution": {
                "nodes": self.solution.nodes.tolist(),
                "values": self.solution.values.tolist(),
            },
            "atom_values": self.atom_values.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "normalization": self.normalization,
        }


def _frame(dim: int, radius: float) -> np.ndarray:
    pts = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=dim)))
    pts = pts[np.abs(pts).max(axis=1) > 0]
    return radius * pts


def _check_problem(P: ConvexBody, mu: DiscreteMeasure, box_radius: float):
    if mu.dim != P.dim:
        raise DimensionMismatch(f"measure lives in R^{mu.dim}, body in R^{P.dim}")
    if P.volume <= 0:
        raise DegenerateBody("body has zero volume; the equation has no unique solution")
    support_radius = float(np.abs(mu.points).max())
    if not box_radius > 2.0 * support_radius:
        raise ValueError(
            f"box_radius {box_radius} must exceed twice the atom support radius {support_radius}"
        )


def _initial_values(P: ConvexBody, points: np.ndarray, spread: float = 1.1) -> np.ndarray:
    """Weights whose cells are the Voronoi cells of the atoms seen through ``P``.

    With ``v_i = (s/2)|x_i - c|^2`` the cell of atom ``i`` is the set of
    ``p`` for which ``c + p/s`` is closest to ``x_i``.  Choosing ``s`` so that
    ``c + P/s`` contains a ball around all atoms makes every cell nonempty.
    """
    a, b = P.halfspaces
    q = P.centroid
    inner = float(np.min(b - a @ q))
    center = points.mean(axis=0)
    reach = float(np.linalg.norm(points - center, axis=1).max())
    if reach == 0.0:
        return np.zeros(len(points))
    s = inner / (spread * reach)
    c = center - q / s
    return 0.5 * s * np.sum((points - c) ** 2, axis=1)


def _masses(P, X, v):
    cx = laguerre_complex(P, X, v)
    return cx, mass_factor(P.dim) * cx.volumes


def _hessian(cx, X):
    rows, cols, meas = face_measures(cx)
    N = len(X)
    w = mass_factor(cx.dim) * meas / np.linalg.norm(X[rows] - X[cols], axis=1)
    W = sp.coo_matrix((w, (rows, cols)), shape=(N, N)).tocsr()
    W = 0.5 * (W + W.T)
    return sp.diags(np.asarray(W.sum(axis=1)).ravel()) - W


def _newton(P, X, targets, v0, tol, max_iter, extra=None):
    """Damped Newton for ``masses(v) + extra_term = targets``.

    ``extra`` is an optional pair ``(F, dF)`` adding ``-F(v)`` to the
    residual and ``diag(dF(v))`` to the Jacobian; it is used for the
    Aubin-Yau right-hand side.  Without it the gauge is fixed by holding the
    first coordinate.
    """
    v = np.array(v0, dtype=float)
    N = len(v)

    def residual(m, v):
        return m - (targets if extra is None else extra[0](v))

    cx, m = _masses(P, X, v)
    if np.any(m <= 0):
        raise ValueError("initial values leave an atom with an empty cell")
    r = residual(m, v)
    floor = 0.5 * min(float(np.min(m)), float(np.min(targets if extra is None else extra[0](v))))
    it = 0
    while np.max(np.abs(r)) > tol:
        if it >= max_iter:
            raise NonConvergence(f"Newton stalled at residual {np.max(np.abs(r)):.3g} after {it} steps")
        L = _hessian(cx, X)
        if extra is None:
            A = L.tocsc()[1:, 1:]
            d = np.zeros(N)
            if N > 1:
                d[1:] = spla.spsolve(A, r[1:]) if N > 2 else r[1:] / A.toarray().ravel()
        else:
            # d/dv (m(v) - F(v)) = -L - diag(F'(v))
            J = (L + sp.diags(extra[1](v))).tocsc()
            d = spla.spsolve(J, r) if N > 1 else r / J.toarray().ravel()
        norm0 = np.linalg.norm(r)
        tau = 1.0
        while True:
            v_try = v + tau * d
            cx_try, m_try = _masses(P, X, v_try)
            r_try = residual(m_try, v_try)
            if np.min(m_try) >= floor and np.linalg.norm(r_try) <= (1 - tau / 2) * norm0:
                break
            tau *= 0.5
            if tau < 1e-12:
                raise NonConvergence(f"line search failed at residual {np.max(np.abs(r)):.3g}")
        v, cx, m, r = v_try, cx_try, m_try, r_try
        it += 1
    return v, cx, m, it


def _normalize(cx, v):
    # sup(h - h_P) is attained at the origin and equals h(0) = -min g*
    return v + cx.min_conj()


def _solution(P, X, v, box_radius, cx=None):
    """PL solution with nodes at the atoms and a frame on the box; ``cx`` may be
    a complex of ``v`` shifted by a constant, which leaves the cells unchanged."""
    if cx is None:
        cx = laguerre_complex(P, X, v)
    frame = _frame(P.dim, box_radius)
    shift = float(v[0] - cx.values[0])
    nodes = np.vstack([X, frame])
    values = np.concatenate([v, cx.evaluate(frame) + shift])
    # frame values lie on the graph by construction, so revalidation is skipped
    return PLConvexFunction(P, nodes, values, check=False), cx


def solve_ma(
    P: ConvexBody,
    mu: DiscreteMeasure,
    box_radius: float,
    tol: float = 1e-8,
    max_iter: int = 100,
    init: np.ndarray | None = None,
) -> SolveReport:
    """Solve ``MA(h) = mu`` for ``h`` of full mass relative to ``P``.

    The solution has nodes at the atoms plus a frame on the box of radius
    ``box_radius``, is normalised by ``sup(h - h_P) = 0`` and satisfies
    ``|(n!/2^n) Vol(dh(x_i)) - mu_i| <= tol`` at every atom.

    Raises
    ------
    MassMismatch
        If ``mu`` does not carry the mass ``(n!/2^n) Vol(P)``.
    NonConvergence
        If Newton iteration does not reach ``tol`` within ``max_iter`` steps.
    """
    _check_problem(P, mu, box_radius)
    full = mass_factor(P.dim) * P.volume
    if abs(mu.total - full) > MASS_TOL:
        raise MassMismatch(f"measure has mass {mu.total!r}, the body requires {full!r}")
    X = mu.points
    v0 = _initial_values(P, X) if init is None else np.asarray(init, dtype=float)
    if len(X) == 1:
        v, steps = np.zeros(1), 0
        cx = laguerre_complex(P, X, v)
    else:
        v, cx, _, steps = _newton(P, X, mu.masses, v0, tol, max_iter)
    v = _normalize(cx, v)
    sol, cx = _solution(P, X, v, box_radius, cx)
    m = mass_factor(P.dim) * cx.volumes
    return SolveReport(
        solution=sol,
        residual=float(np.max(np.abs(m - mu.masses))),
        iterations=steps,
        normalization="sup(h - h_P) = 0",
        atom_values=v,
        masses=m,
        newton_steps=steps,
    )


def solve_aubin_yau(
    P: ConvexBody,
    mu: DiscreteMeasure,
    lam: float,
    box_radius: float,
    tol: float = 1e-8,
    damping: float = 0.5,
    max_outer: int = 200,
    polish: bool = True,
) -> SolveReport:
    """Solve ``MA(h) = e^{lam h} mu`` (no normalisation: the equation fixes the constant).

    Runs the damped fixed-point loop described in the module docstring.
    If the loop reaches ``max_outer`` without meeting ``tol`` and ``polish``
    is set, the iterate seeds a Newton solve of the full system, whose
    Jacobian ``-L - lam diag(e^{lam h} mu)`` is nonsingular.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    _check_problem(P, mu, box_radius)
    full = mass_factor(P.dim) * P.volume
    X, w = mu.points, mu.masses

    u = np.zeros(len(X))
    v_warm = _initial_values(P, X)
    outer = 0
    newton_total = 0
    h = None
    for outer in range(1, max_outer + 1):
        weights = w * np.exp(lam * (u - u.max()))
        c_log = np.log(full) - np.log(weights.sum()) - lam * u.max()
        targets = full * weights / weights.sum()
        if len(X) == 1:
            u_new = np.zeros(1)
        else:
            v, cx, _, steps = _newton(P, X, targets, v_warm, 0.1 * tol, 200)
            newton_total += steps
            u_new = _normalize(cx, v)
            v_warm = u_new
        # candidate solution h = u_new + log(c)/lam, residual measured exactly
        h = u_new + c_log / lam
        cx_h, m_h = _masses(P, X, h)
        res = float(np.max(np.abs(m_h - np.exp(lam * h) * w)))
        if res <= tol:
            break
        u = (1.0 - damping) * u + damping * u_new
    else:
        if not polish:
            raise NonConvergence(f"fixed-point loop left residual {res:.3g} after {max_outer} steps")
        log.info("fixed-point loop residual %.3g; polishing with Newton", res)
        F = lambda vv: np.exp(lam * vv) * w  # noqa: E731
        dF = lambda vv: lam * np.exp(lam * vv) * w  # noqa: E731
        h, cx_h, m_h, steps = _newton(P, X, None, h, tol, 100, extra=(F, dF))
        newton_total += steps
        res = float(np.max(np.abs(m_h - np.exp(lam * h) * w)))
    sol, cx = _solution(P, X, h, box_radius, cx_h)
    m = mass_factor(P.dim) * cx.volumes
    return SolveReport(
        solution=sol,
        residual=float(np.max(np.abs(m - np.exp(lam * h) * w))),
        iterations=outer,
        normalization="none (fixed by the equation)",
        atom_values=h,
        masses=m,
        newton_steps=newton_total,
    )


@dataclass(frozen=True, eq=False)
class BoxDensity:
    """Bounded density on the box ``[lo, hi]`` with prescribed total mass.

    ``density`` is a vectorised callable on ``(m, n)`` arrays; ``None`` means
    uniform.  Discretisation puts one atom at the centre of each cell of a
    ``2^k`` per axis grid, weighted by the midpoint rule and rescaled to
    ``total``.
    """

    lo: np.ndarray
    hi: np.ndarray
    total: float
    density: Callable | None = None

    def __post_init__(self):
        object.__setattr__(self, "lo", np.atleast_1d(np.asarray(self.lo, dtype=float)))
        object.__setattr__(self, "hi", np.atleast_1d(np.asarray(self.hi, dtype=float)))
        if np.any(self.hi <= self.lo):
            raise ValueError("box must have positive side lengths")

    def atoms(self, level: int) -> DiscreteMeasure:
        k = 2**level
        axes = [lo + (np.arange(k) + 0.5) * (hi - lo) / k for lo, hi in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        dens = np.ones(len(pts)) if self.density is None else np.asarray(self.density(pts), dtype=float)
        if np.any(dens <= 0):
            raise ValueError("density must be positive on the box")
        return DiscreteMeasure(pts, self.total * dens / dens.sum())


def deviation_from_body(report: SolveReport, P: ConvexBody) -> float:
    """``sup(h_P - h)`` for a solution normalised by ``sup(h - h_P) = 0``.

    Far out along a vertex ``p`` of ``P`` the gap tends to ``g*(p)``, so the
    supremum over R^n is ``max_P g* - min_P g*`` of the atoms' conjugate.
    """
    cx = laguerre_complex(P, report.solution.nodes, report.solution.values)
    return float(cx.conj_at(P.vertices).max() - cx.min_conj())


def uniform_bound_diagnostic(
    P: ConvexBody,
    density: BoxDensity,
    levels: Sequence[int] = (4, 5, 6),
    tol: float = 1e-8,
    box_factor: float = 2.5,
) -> list[float]:
    """Deviation ``sup(h_P - h)`` of the normalised solution at each refinement level.

    A bounded, stabilising sequence is the discrete shadow of the uniform
    estimate for bounded densities.
    """
    full = mass_factor(P.dim) * P.volume
    if abs(density.total - full) > MASS_TOL:
        raise MassMismatch(f"density carries {density.total!r}, the body requires {full!r}")
    radius = box_factor * max(float(np.abs(np.vstack([density.lo, density.hi])).max()), 1e-3)
    out = []
    for k in levels:
        rep = solve_ma(P, density.atoms(k), radius, tol=tol)
        out.append(deviation_from_body(rep, P))
    return out
