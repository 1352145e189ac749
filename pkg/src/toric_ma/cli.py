"""Command-line scenario runner: ``toric-ma <kind> [options]``.

Every input (body, function, measure, region) is a JSON file path or an
inline JSON string.  Formats::

    body      {"dim": n, "vertices": [[...], ...]}
    function  {"body": <body>, "nodes": [[...], ...], "values": [...]}
    measure   {"atoms": [{"x": [...], "mass": m}, ...]}
    region    {"boxes": [{"lo": [...], "hi": [...]}, ...], "dim": n}

Parameters are resolved as command-line flag, then ``--config`` JSON file,
then built-in default.  Results go to stdout as JSON (keys sorted, so equal
inputs give byte-identical output) or long-form CSV.  Failures print a JSON
error object to stderr and exit with 1 (invalid input) or 2 (numerical
non-convergence).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import capacity as cap_mod
from ._laguerre import mass_factor
from .convexfun import PLConvexFunction, is_model, rooftop, singularity_envelope
from .errors import FitResidualError, NonConvergence, NoStabilization, ToricMAError
from .geometry import ConvexBody, body_from_subgradients
from .ma_measure import full_mass_check, ma
from .mixedvol import brunn_minkowski_check, log_concavity_report, mixed_volume, volume_polynomial
from .solver import BoxDensity, DiscreteMeasure, solve_aubin_yau, solve_ma, uniform_bound_diagnostic

DEFAULTS = {
    "tol": 1e-8,
    "box_radius": None,
    "grid": None,
    "lambda": 1.0,
    "r": 1.0,
    "out": "json",
    "seed": 0,
}

NUMERICAL_ERRORS = (NonConvergence, NoStabilization, FitResidualError)


class InputError(ToricMAError, ValueError):
    """Malformed or missing scenario input."""


# ---------------------------------------------------------------- parsing


def load_json(source):
    """Parse ``source`` as inline JSON, a path to a JSON file, or pass a parsed object through."""
    if isinstance(source, (dict, list)):
        return source
    text = str(source).strip()
    if text[:1] in "{[":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad inline JSON: {exc}") from None
    path = Path(text)
    if not path.is_file():
        raise InputError(f"no such file: {text}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"bad JSON in {text}: {exc}") from None


def _field(doc, key, what):
    if not isinstance(doc, dict) or key not in doc:
        raise InputError(f"{what} needs a '{key}' field")
    return doc[key]


def parse_body(source) -> ConvexBody:
    doc = load_json(source)
    verts = np.asarray(_field(doc, "vertices", "body"), dtype=float)
    if verts.ndim == 1:
        verts = verts[:, None]
    if "dim" in doc and verts.shape[1] != int(doc["dim"]):
        raise InputError(f"body declares dim {doc['dim']} but vertices have {verts.shape[1]} coordinates")
    return ConvexBody(verts)


def parse_function(source) -> PLConvexFunction:
    doc = load_json(source)
    body = parse_body(_field(doc, "body", "function"))
    nodes = np.asarray(_field(doc, "nodes", "function"), dtype=float)
    if nodes.ndim == 1:
        nodes = nodes[:, None]
    return PLConvexFunction(body, nodes, np.asarray(_field(doc, "values", "function"), dtype=float))


def parse_measure(source) -> DiscreteMeasure:
    doc = load_json(source)
    atoms = _field(doc, "atoms", "measure")
    try:
        return DiscreteMeasure.from_atoms([(a["x"], float(a["mass"])) for a in atoms])
    except (KeyError, TypeError) as exc:
        raise InputError(f"each atom needs 'x' and 'mass': {exc}") from None


def parse_region(source) -> cap_mod.CompactRegion:
    doc = load_json(source)
    boxes = _field(doc, "boxes", "region")
    try:
        pairs = [(b["lo"], b["hi"]) for b in boxes]
    except (KeyError, TypeError) as exc:
        raise InputError(f"each box needs 'lo' and 'hi': {exc}") from None
    return cap_mod.CompactRegion.from_boxes(pairs, dim=doc.get("dim"))


def parse_grid(spec: str, dim: int) -> list[int]:
    """``"17x17"`` -> per-axis point counts."""
    try:
        counts = [int(p) for p in str(spec).lower().split("x")]
    except ValueError:
        raise InputError(f"grid must look like NxN, got {spec!r}") from None
    if len(counts) == 1:
        counts = counts * dim
    if len(counts) != dim or min(counts) < 2:
        raise InputError(f"grid {spec!r} does not match dimension {dim}")
    return counts


def body_doc(P: ConvexBody) -> dict:
    return {"dim": P.dim, "vertices": P.vertices.tolist()}


def function_doc(h: PLConvexFunction) -> dict:
    return {"body": body_doc(h.body), "nodes": h.nodes.tolist(), "values": h.values.tolist()}


# ---------------------------------------------------------------- scenarios


def _auto_radius(points) -> float:
    return 4.0 * max(float(np.abs(np.asarray(points)).max()), 0.5)


def run_mass(p):
    h = parse_function(p["function"])
    res = ma(h)
    out = res.to_dict()
    out["full_mass"] = full_mass_check(h, tol=max(p["tol"], 1e-12))
    return out


def run_solve(p):
    P = parse_body(p["body"])
    mu = parse_measure(p["measure"])
    radius = p["box_radius"] or _auto_radius(mu.points)
    rep = solve_ma(P, mu, radius, tol=p["tol"])
    return {**rep.to_dict(), "box_radius": radius}


def run_aubin_yau(p):
    P = parse_body(p["body"])
    mu = parse_measure(p["measure"])
    radius = p["box_radius"] or _auto_radius(mu.points)
    rep = solve_aubin_yau(P, mu, float(p["lambda"]), radius, tol=p["tol"])
    return {**rep.to_dict(), "box_radius": radius, "lambda": float(p["lambda"])}


def _bodies(p, count=None):
    srcs = p.get("bodies") or []
    if count is not None and len(srcs) != count:
        raise InputError(f"expected {count} bodies, got {len(srcs)}")
    return [parse_body(s) for s in srcs]


def run_mixed_volume(p):
    bodies = _bodies(p)
    if not bodies:
        raise InputError("mixed-volume needs --bodies")
    if len(bodies) == bodies[0].dim:
        return {"mv": mixed_volume(bodies)}
    poly = volume_polynomial(bodies)
    return {
        "coefficients": [{"degrees": list(d), "value": c} for d, c in poly.coefficients.items()],
        "fit_residual": poly.fit_residual,
    }


def _random_polygon(rng, m):
    ang = np.sort(rng.uniform(0, 2 * np.pi, m))
    rad = rng.uniform(0.5, 1.0, m)
    pts = np.column_stack([np.cos(ang), np.sin(ang)]) * rad[:, None]
    return ConvexBody(rng.uniform(0.5, 3.0) * pts + rng.uniform(3, 7, 2))


def _random_pairs(p):
    rng = np.random.default_rng(int(p["seed"]))
    n = int(p["random"])
    return [(_random_polygon(rng, rng.integers(3, 11)), _random_polygon(rng, rng.integers(3, 11))) for _ in range(n)]


def run_bm_check(p):
    if p.get("random"):
        rows = []
        for P, Q in _random_pairs(p):
            lhs, rhs, holds = brunn_minkowski_check([P, Q])
            rows.append({"lhs": lhs, "rhs": rhs, "holds": holds})
        return {"seed": int(p["seed"]), "trials": rows, "holds": all(r["holds"] for r in rows)}
    lhs, rhs, holds = brunn_minkowski_check(_bodies(p))
    return {"lhs": lhs, "rhs": rhs, "holds": holds}


def run_log_concavity(p):
    ts = p.get("t") or [k / 10 for k in range(1, 10)]
    if p.get("random"):
        reps = [log_concavity_report(P, Q, ts) for P, Q in _random_pairs(p)]
        return {
            "seed": int(p["seed"]),
            "trials": [{"holds": r["holds"], "concavity_defect": r["concavity_defect"]} for r in reps],
            "holds": all(r["holds"] for r in reps),
        }
    P0, P1 = _bodies(p, 2)
    return log_concavity_report(P0, P1, ts)


def run_capacity(p):
    P = parse_body(p["body"])
    K = parse_region(p["region"])
    if K.dim != P.dim:
        raise InputError(f"region in R^{K.dim}, body in R^{P.dim}")
    radius = p["box_radius"] or 2.0 * K.radius() + 2.0
    counts = parse_grid(p["grid"] or "x".join(["33"] * P.dim), P.dim)
    axes = [np.linspace(-radius, radius, c) for c in counts]
    nodes = np.column_stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")])
    rep = cap_mod.capacity(K, P, nodes)
    return {**rep.to_dict(), "box_radius": radius, "grid": counts}


def run_envelope(p):
    psi = parse_function(p["psi"])
    chi = parse_function(p["chi"])
    if p.get("mode", "singularity") == "rooftop":
        env = rooftop(psi, chi)
    else:
        env = singularity_envelope(psi, chi, tol=p["tol"])
    return {"envelope": function_doc(env)}


def run_recover_body(p):
    h = parse_function(p["function"])
    radius = p.get("sample_radius") or float(np.abs(h.nodes).max())
    return {"body": body_doc(body_from_subgradients(h, radius))}


def run_is_model(p):
    h = parse_function(p["function"])
    verdict, bound = is_model(h, float(p["r"]))
    return {"model": verdict, "bound": bound, "r": float(p["r"])}


def run_uniform_bound(p):
    P = parse_body(p["body"])
    lo = np.asarray(p.get("lo") or [-1.0] * P.dim, dtype=float)
    hi = np.asarray(p.get("hi") or [1.0] * P.dim, dtype=float)
    total = p.get("total")
    if total is None:
        total = mass_factor(P.dim) * P.volume
    levels = [int(k) for k in (p.get("levels") or [4, 5, 6])]
    dev = uniform_bound_diagnostic(P, BoxDensity(lo, hi, float(total)), levels=levels, tol=p["tol"])
    inc = [abs(b - a) for a, b in zip(dev[:-1], dev[1:])]
    return {"levels": levels, "deviations": dev, "increments": inc}


RUNNERS = {
    "mass": run_mass,
    "solve": run_solve,
    "aubin-yau": run_aubin_yau,
    "mixed-volume": run_mixed_volume,
    "bm-check": run_bm_check,
    "log-concavity": run_log_concavity,
    "capacity": run_capacity,
    "envelope": run_envelope,
    "recover-body": run_recover_body,
    "is-model": run_is_model,
    "uniform-bound": run_uniform_bound,
}


def run(kind: str, params: dict, timing: bool = False) -> dict:
    """Execute one scenario and return the result document (raises on failure)."""
    if kind not in RUNNERS:
        raise InputError(f"unknown scenario kind {kind!r}")
    p = {**DEFAULTS, **{k: v for k, v in params.items() if v is not None}}
    if not (isinstance(p["tol"], (int, float)) and p["tol"] > 0):
        raise InputError("tol must be a positive number")
    start = time.perf_counter()
    try:
        result = RUNNERS[kind](p)
    except KeyError as exc:
        raise InputError(f"scenario {kind!r} is missing the input {exc}") from None
    doc = {"scenario": {"kind": kind, "params": _echo(p)}, "result": result}
    if timing:
        doc["wall_time"] = time.perf_counter() - start
    return doc


def _echo(p):
    return {k: v for k, v in sorted(p.items()) if isinstance(v, (str, int, float, bool, list, dict)) or v is None}


# ---------------------------------------------------------------- output


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k in sorted(obj):
            yield from _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def to_csv(doc: dict) -> str:
    """Long-form ``field,value`` rows for every leaf of the result document."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["field", "value"])
    for key, val in _flatten(doc):
        w.writerow([key, json.dumps(val) if isinstance(val, (bool, type(None))) else val])
    return buf.getvalue()


def render(doc: dict, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(doc)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def error_doc(exc: BaseException) -> tuple[int, dict]:
    code = 2 if isinstance(exc, NUMERICAL_ERRORS) else 1
    return code, {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}


# ---------------------------------------------------------------- argparse


def _common(sp):
    sp.add_argument("--tol", type=float, help="solver / comparison tolerance (default 1e-8)")
    sp.add_argument("--box-radius", dest="box_radius", type=float, help="truncation box half-width")
    sp.add_argument("--grid", help="grid point counts per axis, e.g. 33x33")
    sp.add_argument("--lambda", dest="lambda", type=float, help="exponent in MA(h) = e^{lambda h} mu (default 1)")
    sp.add_argument("--r", type=float, help="scale of the reference potential (default 1)")
    sp.add_argument("--out", choices=["json", "csv"], help="output format (default json)")
    sp.add_argument("--seed", type=int, help="seed for randomized scenarios (default 0)")
    sp.add_argument("--config", help="JSON file with default parameters; flags override it")
    sp.add_argument("--timing", action="store_true", help="add wall_time to the result (breaks byte-identity)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toric-ma",
        description=__doc__.split("\n\n")[0],
        epilog="Parameter precedence: command-line flags > --config file > defaults.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    sp = sub.add_parser("mass", help="Monge-Ampere masses of a PL convex function")
    sp.add_argument("--function")
    _common(sp)

    for name, hlp in (("solve", "solve MA(h) = mu"), ("aubin-yau", "solve MA(h) = e^{lambda h} mu")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--body")
        sp.add_argument("--measure")
        _common(sp)

    sp = sub.add_parser("mixed-volume", help="mixed volume (n bodies) or volume polynomial")
    sp.add_argument("--bodies", nargs="+")
    _common(sp)

    sp = sub.add_parser("bm-check", help="mixed volume against the product of volumes")
    sp.add_argument("--bodies", nargs="+")
    sp.add_argument("--random", type=int, help="check this many random polygon pairs instead")
    _common(sp)

    sp = sub.add_parser("log-concavity", help="concavity of Vol^(1/n) along Minkowski interpolation")
    sp.add_argument("--bodies", nargs="+")
    sp.add_argument("--t", nargs="+", type=float, help="samples in [0,1] (default 0.1..0.9)")
    sp.add_argument("--random", type=int, help="check this many random polygon pairs instead")
    _common(sp)

    sp = sub.add_parser("capacity", help="relative capacity of a union of boxes")
    sp.add_argument("--body")
    sp.add_argument("--region")
    _common(sp)

    sp = sub.add_parser("envelope", help="rooftop or singularity envelope of two functions")
    sp.add_argument("--psi")
    sp.add_argument("--chi")
    sp.add_argument("--mode", choices=["singularity", "rooftop"])
    _common(sp)

    sp = sub.add_parser("recover-body", help="asymptotic body from subgradient cells")
    sp.add_argument("--function")
    sp.add_argument("--sample-radius", dest="sample_radius", type=float)
    _common(sp)

    sp = sub.add_parser("is-model", help="model-singularity verdict over refining grids")
    sp.add_argument("--function")
    _common(sp)

    sp = sub.add_parser("uniform-bound", help="deviation sup(h_P - h) under box-density refinement")
    sp.add_argument("--body")
    sp.add_argument("--lo", nargs="+", type=float)
    sp.add_argument("--hi", nargs="+", type=float)
    sp.add_argument("--total", type=float)
    sp.add_argument("--levels", nargs="+", type=int)
    _common(sp)

    sp = sub.add_parser("batch", help="run a JSON list of scenarios, TORIC_MA_THREADS at a time")
    sp.add_argument("file")
    sp.add_argument("--out", choices=["json", "csv"])
    sp.add_argument("--timing", action="store_true")
    return parser


def _params(ns) -> dict:
    flags = {k: v for k, v in vars(ns).items() if k not in ("kind", "config", "timing", "file") and v is not None}
    config = {}
    if getattr(ns, "config", None):
        config = load_json(ns.config)
        if not isinstance(config, dict):
            raise InputError("config must be a JSON object")
        config = {k.replace("-", "_") if k != "lambda" else k: v for k, v in config.items()}
    return {**config, **flags}


def _run_batch(ns) -> tuple[int, dict]:
    items = load_json(ns.file)
    if not isinstance(items, list):
        raise InputError("batch file must hold a JSON list of scenarios")
    threads = max(1, int(os.environ.get("TORIC_MA_THREADS", "1") or 1))

    def one(item):
        try:
            kind = _field(item, "kind", "scenario")
            params = {k: v for k, v in item.items() if k != "kind"}
            return 0, run(kind, params, timing=ns.timing)
        except Exception as exc:  # noqa: BLE001 - each failure becomes a structured entry
            return error_doc(exc)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(one, items))
    code = max((c for c, _ in results), default=0)
    return code, {"results": [d for _, d in results]}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    fmt = ns.out or "json"
    try:
        if ns.kind == "batch":
            code, doc = _run_batch(ns)
        else:
            params = _params(ns)
            fmt = params.get("out", fmt)
            doc = run(ns.kind, params, timing=ns.timing)
            code = 0
    except Exception as exc:  # noqa: BLE001 - every failure path yields structured JSON
        code, err = error_doc(exc)
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return code
    sys.stdout.write(render(doc, fmt))
    return code


if __name__ == "__main__":
    sys.exit(main())
