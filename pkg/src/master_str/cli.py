"""Command line: ``master-str verify|solve|partition``.

Every run writes a JSON report (to ``--out``, or into the directory named by
``MASTER_STR_OUTPUT_DIR``, default the working directory) and exits with
0 when all cases pass, 1 when any fails and 2 on configuration or domain
errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Callable

import numpy as np

from . import chiral_potts as cpm
from . import classical as cl
from . import discrete as dm
from .errors import BadDomain, BadInput, ConfigError, MasterSTRError, NotAStar, TooManyInternalSites
from .lattice import LatticeGraph, partition_function, star_triangle_move
from .master_weights import (
    QuadratureControl,
    WeightSpec,
    check_recurrence,
    verify_inversion_first,
    verify_inversion_second,
    verify_str_master,
)
from .reports import make_report, output_dir, write_report
from .special_fn import EllipticParams

PI = math.pi

VERIFY_KINDS = ("str-master", "str-discrete", "km", "cp", "inversions", "recurrence",
                "classical-str", "q4-canonical", "asymptotics")
SOLVE_KINDS = ("q4", "lattice-min")

DEFAULTS = {
    "seed": 0,
    "cases": 5,
    "N": 3,
    "regime": "i",
    "points": 64,
    "rel_tol": 1e-10,
    "tol": None,
}

# pass thresholds per verify kind
TOLERANCES = {
    "str-master": 1e-8,
    "str-discrete": 1e-10,
    "km": 1e-10,
    "cp": 1e-10,
    "inversions": 1e-4,
    "recurrence": 1e-10,
    "classical-str": 1e-8,
    "q4-canonical": 1e-9,
    "asymptotics": 1e-4,
}


def _c(v) -> complex:
    """Complex from a number or an ``[re, im]`` pair."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex values are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, (int, float)):
        return complex(v)
    raise ConfigError(f"not a number: {v!r}")


# ---------------------------------------------------------------------------
# verify campaigns: each returns a list of case dicts with a "residual"


def _case(inputs: dict, residual: float, tol: float, **extra) -> dict:
    ok = bool(np.isfinite(residual) and residual < tol)
    return {"inputs": inputs, "residual": float(residual), "tol": tol, "passed": ok, **extra}


def _guard(fn: Callable[[], dict], inputs: dict, tol: float) -> dict:
    try:
        return fn()
    except MasterSTRError as exc:
        return {"inputs": inputs, "residual": math.inf, "tol": tol, "passed": False,
                "error": f"{type(exc).__name__}: {exc}"}


def _physical_params(rng, regime: str) -> EllipticParams:
    if regime == "i":
        return EllipticParams(1j * rng.uniform(0.6, 1.4), 1j * rng.uniform(0.6, 1.4))
    if regime == "ii":
        a, b = rng.uniform(-0.3, 0.3), rng.uniform(0.6, 1.2)
        return EllipticParams(a + 1j * b, -a + 1j * b)
    raise ConfigError(f"regime must be 'i' or 'ii', got {regime!r}")


def run_str_master(rng, cfg, tol):
    out = []
    qc = QuadratureControl(points=cfg["points"], rel_tol=cfg["rel_tol"])
    for _ in range(cfg["cases"]):
        P = _physical_params(rng, cfg["regime"])
        eta = P.eta.real
        a1, a3 = rng.uniform(0.1, 0.45, 2) * eta
        xs = rng.uniform(0, 2 * PI, 3)
        inputs = {"tau": P.tau, "sigma": P.sigma, "alpha1": a1, "alpha3": a3, "x": xs}

        def one():
            r = verify_str_master(WeightSpec(P, a1), WeightSpec(P, a3), *xs, qc)
            return _case(inputs, r.ratio_minus_one, tol, lhs=r.lhs, rhs=r.rhs, points=r.points)

        out.append(_guard(one, inputs, tol))
    return out


def _draw_discrete(rng):
    t1, t3 = rng.uniform(0.3, 1.0, 2)
    ph = rng.uniform(-0.25, 0.25, 3)
    tp = 1j * rng.uniform(0.8, 2.0)
    return t1, t3, ph, tp


def run_str_discrete(rng, cfg, tol):
    out = []
    N = cfg["N"]
    for _ in range(cfg["cases"]):
        t1, t3, ph, tp = _draw_discrete(rng)
        inputs = {"N": N, "theta1": t1, "theta3": t3, "phi": ph, "tau_prime": tp}

        def one():
            r = dm.verify_str_discrete(t1, t3, *ph, N, tp)
            ratio_gap = abs(r.R_ratio / r.R_formula - 1)
            return _case(inputs, max(r.max_residual, ratio_gap, r.ratio_spread), tol,
                         max_residual=r.max_residual, R_formula=r.R_formula, R_ratio=r.R_ratio,
                         phi0=r.phi[0])

        out.append(_guard(one, inputs, tol))
    return out


def run_km(rng, cfg, tol):
    out = []
    N = cfg["N"]
    for _ in range(cfg["cases"]):
        t1, t3 = rng.uniform(0.3, 1.2, 2)
        tp = 1j * rng.uniform(0.8, 2.0)
        for zeta in (0, 1, 2):
            for nu in (0.0, 0.5):
                inputs = {"N": N, "zeta": zeta, "nu": nu, "theta1": t1, "theta3": t3, "tau_prime": tp}

                def one():
                    r = dm.verify_km(dm.KMParams(N, zeta, nu, tp), t1, t3)
                    return _case(inputs, max(r.max_residual, r.reduction_error), tol,
                                 max_residual=r.max_residual, reduction_error=r.reduction_error,
                                 R=r.R, normalization=r.normalization)

                out.append(_guard(one, inputs, tol))
    return out


def run_cp(rng, cfg, tol):
    out = []
    N = cfg["N"]
    for _ in range(cfg["cases"]):
        t1, t3 = rng.uniform(0.3, 1.2, 2)
        ph = rng.uniform(-0.4, 0.4, 3)
        inputs = {"N": N, "theta1": t1, "theta3": t3, "phi": ph}

        def one():
            p, q, r, curve, dic = cpm.cp_from_angles(t1, t3, *ph, N)
            curve_res = max(max(cpm.curve_residuals(v, curve)) for v in (p, q, r))
            dict_err = cpm.dictionary_weight_error(t1, t3, *ph, N)
            rep = cpm.verify_str_cp(p, q, r, N)
            ang = cpm.cp_to_angles(p, q, r, N)
            trip = max(abs(cpm.wrap(ang["theta1"] - t1, N * PI)), abs(cpm.wrap(ang["theta3"] - t3, N * PI)),
                       *(abs(cpm.wrap(ang[f"phi{j}_minus_phi0"] - (ph[j - 1] - dic.phis[0]), N * PI))
                         for j in (1, 2, 3)))
            res = max(curve_res, dict_err, rep.max_residual, abs(rep.R_ratio / rep.R_formula - 1))
            c = _case(inputs, res, tol, curve_residual=curve_res, dictionary_error=dict_err,
                      str_residual=rep.max_residual, R=rep.R_formula, roundtrip=trip, k=curve.k)
            # angles come back modulo N pi; the round trip has its own threshold
            c["passed"] = bool(c["passed"] and trip < 1e-9)
            return c

        out.append(_guard(one, inputs, tol))
    return out


def _test_functions():
    return {
        "exp_cos": lambda y: np.exp(np.cos(y)) * (1 + 0.3 * np.cos(2 * y)),
        "cos_poly": lambda y: 2 + np.cos(y) + 0.5 * np.cos(3 * y),
    }


def run_inversions(rng, cfg, tol):
    out = []
    qc = QuadratureControl(points=cfg["points"], rel_tol=1e-8)
    for _ in range(cfg["cases"]):
        P = _physical_params(rng, cfg["regime"])
        eta = P.eta.real
        x, y = rng.uniform(0.3, PI - 0.3, 2)
        a = 0.1 * eta
        a2 = rng.uniform(0.1, 0.9) * eta
        inputs = {"tau": P.tau, "sigma": P.sigma, "alpha": a, "alpha_second": a2, "x": x, "y": y}

        def one():
            second = verify_inversion_second(WeightSpec(P, a2), x, y)
            firsts = {name: verify_inversion_first(WeightSpec(P, a), x, g, qc)
                      for name, g in _test_functions().items()}
            ok = second < 1e-12 and all(v < tol for v in firsts.values())
            c = _case(inputs, max(firsts.values()), tol, second_relation=second, first_relation=firsts)
            c["passed"] = bool(ok)
            return c

        out.append(_guard(one, inputs, tol))
    return out


def run_recurrence(rng, cfg, tol):
    out = []
    for _ in range(cfg["cases"]):
        P = _physical_params(rng, cfg["regime"])
        a = rng.uniform(0.1, 0.9) * P.eta.real
        x, y = rng.uniform(0, 2 * PI, 2)
        inputs = {"tau": P.tau, "sigma": P.sigma, "alpha": a, "x": x, "y": y}
        out.append(_guard(lambda: _case(inputs, check_recurrence(WeightSpec(P, a), x, y), tol), inputs, tol))
    return out


def _draw_classical(rng):
    t1, t3 = rng.uniform(0.6, 1.1, 2)
    ph = rng.uniform(-0.25, 0.25, 3)
    tp = complex(rng.uniform(-0.2, 0.2), rng.uniform(0.7, 1.6))
    return t1, t3, ph, tp


def run_classical_str(rng, cfg, tol):
    out = []
    for _ in range(cfg["cases"]):
        t1, t3, ph, tp = _draw_classical(rng)
        inputs = {"theta1": t1, "theta3": t3, "phi": ph, "tau_prime": tp}

        def one():
            cp = cl.ClassicalParams(tp)
            phi0 = cl.solve_q4_threeleg(t1, t3, *ph, cp)
            star = cl.action_star(phi0, *ph, t1, t3, cp)
            tri = cl.action_triangle(*ph, t1, t3, cp)
            return _case(inputs, abs(star - tri), tol, phi0=phi0, action_star=star, action_triangle=tri)

        out.append(_guard(one, inputs, tol))
    return out


def run_q4_canonical(rng, cfg, tol):
    out = []
    for _ in range(cfg["cases"]):
        t1, t3, ph, tp = _draw_classical(rng)
        inputs = {"theta1": t1, "theta3": t3, "phi": ph, "tau_prime": tp}

        def one():
            cp = cl.ClassicalParams(tp)
            phi0 = cl.solve_q4_threeleg(t1, t3, *ph, cp)
            res = abs(cl.q4_canonical_residual(cl.Q4Quad(t1, t3, (phi0, *ph), tp)))
            return _case(inputs, res, tol, phi0=phi0,
                         threeleg_residual=cl.threeleg_residual(phi0, t1, t3, *ph, cp))

        out.append(_guard(one, inputs, tol))
    return out


def run_asymptotics(rng, cfg, tol):
    out = []
    N = cfg["N"]
    for _ in range(cfg["cases"]):
        tau = 1j * rng.uniform(0.2, 0.35)
        alpha = rng.uniform(0.3, 0.5)
        xi1, xi2 = rng.uniform(0.2, 0.9, 2) * PI / N
        n1, n2 = (int(v) for v in rng.integers(0, N, 2))
        inputs = {"N": N, "tau": tau, "alpha": alpha, "xi": [xi1, xi2], "n": [n1, n2]}

        def one():
            r = cl.intercept_check(xi1, xi2, n1, n2, alpha, N, tau)
            c = _case(inputs, max(r.slope_rel_err, r.site_rel_err), tol,
                      weight_intercept_gap=r.weight_gap, site_intercept_gap=r.site_gap)
            c["passed"] = bool(c["passed"] and r.weight_gap < 1e-3 and r.site_gap < 1e-3)
            return c

        out.append(_guard(one, inputs, tol))
    return out


CAMPAIGNS = {
    "str-master": run_str_master,
    "str-discrete": run_str_discrete,
    "km": run_km,
    "cp": run_cp,
    "inversions": run_inversions,
    "recurrence": run_recurrence,
    "classical-str": run_classical_str,
    "q4-canonical": run_q4_canonical,
    "asymptotics": run_asymptotics,
}


# ---------------------------------------------------------------------------
# solve and partition


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def solve_q4(data: dict) -> list[dict]:
    try:
        t1, t3 = _c(data["theta1"]), _c(data["theta3"])
        ph = [_c(v) for v in data["phi"]]
        tp = _c(data["tau_prime"])
    except KeyError as exc:
        raise ConfigError(f"q4 input lacks {exc}") from exc
    if len(ph) != 3:
        raise ConfigError("q4 input needs three outer fields 'phi'")
    cp = cl.ClassicalParams(tp)
    phi0 = cl.solve_q4_threeleg(t1, t3, *ph, cp)
    res = cl.threeleg_residual(phi0, t1, t3, *ph, cp)
    canon = abs(cl.q4_canonical_residual(cl.Q4Quad(t1, t3, (phi0, *ph), tp)))
    case = _case({"theta1": t1, "theta3": t3, "phi": ph, "tau_prime": tp}, max(res, canon),
                 TOLERANCES["q4-canonical"], phi0=phi0, threeleg_residual=res, canonical_residual=canon)
    if tp.imag >= 20:
        case["phi0_trig"] = cl.cp_phi0_trig(t1, t3, *ph)
    return [case]


def solve_lattice_min(data: dict) -> list[dict]:
    try:
        g = LatticeGraph.from_dict(data["graph"])
        tp = _c(data["tau_prime"])
    except KeyError as exc:
        raise ConfigError(f"lattice-min input lacks {exc}") from exc
    if "thetas" in data:
        thetas = [_c(v) for v in data["thetas"]]
    elif "params" in data:
        P = EllipticParams(_c(data["params"]["tau"]), _c(data["params"]["sigma"]))
        thetas = cl.edge_thetas(g, P)
    else:
        raise ConfigError("lattice-min input needs 'thetas' or 'params'")
    boundary = {s.id: s.spin for s in g.sites if s.boundary}
    boundary.update({k: _c(v) for k, v in data.get("boundary_phi", {}).items()})
    r = cl.minimize_energy(g, thetas, boundary, cl.ClassicalParams(tp))
    return [_case({"tau_prime": tp, "thetas": thetas, "boundary_phi": boundary}, r.residual, 1e-9,
                  phi=r.phi, energy=r.energy, iterations=r.iterations)]


def run_partition(data: dict, move: str | None, cfg: dict) -> list[dict]:
    try:
        g = LatticeGraph.from_dict(data["graph"] if "graph" in data else data)
        pd = data["params"]
        P = EllipticParams(_c(pd["tau"]), _c(pd["sigma"]))
    except KeyError as exc:
        raise ConfigError(f"partition input lacks {exc}") from exc
    qc = QuadratureControl(points=cfg["points"], rel_tol=cfg["rel_tol"])
    trace: list = []
    Z = partition_function(g, P, qc, trace=trace)
    case = {"inputs": {"M": g.M, "params": {"tau": P.tau, "sigma": P.sigma}}, "Z": Z,
            "trace": [{"points": n, "Z": v} for n, v in trace], "residual": 0.0, "passed": True}
    if move is not None:
        g2 = star_triangle_move(g, move)
        Z2 = partition_function(g2, P, qc)
        res = abs(Z / Z2 - 1)
        case.update({"Z_moved": Z2, "moved_site": move, "residual": res, "tol": 1e-7, "passed": bool(res < 1e-7)})
    return [case]


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="master-str", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--seed", type=int)
    common.add_argument("--cases", type=int)
    common.add_argument("--N", type=int)
    common.add_argument("--regime", choices=("i", "ii"))
    common.add_argument("--points", type=int, help="initial quadrature points")
    common.add_argument("--rel-tol", type=float, dest="rel_tol", help="quadrature doubling tolerance")
    common.add_argument("--tol", type=float, help="override the pass threshold")
    common.add_argument("--out", help="report path (default: <output dir>/<command>-<kind>.json)")
    common.add_argument("--timing", action="store_true", help="record wall time (breaks byte stability)")
    sub = ap.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", parents=[common], help="run a verification campaign")
    v.add_argument("kind", choices=VERIFY_KINDS)
    s = sub.add_parser("solve", parents=[common], help="solve Q4 or minimize a lattice energy")
    s.add_argument("kind", choices=SOLVE_KINDS)
    s.add_argument("input", help="JSON input file")
    p = sub.add_parser("partition", parents=[common], help="partition function of a small graph")
    p.add_argument("graph", help="graph JSON file with a 'params' entry")
    p.add_argument("--move", help="also apply a star-triangle move at this site and compare")
    return ap


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        loaded = _read_json(args.config)
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if not isinstance(cfg["cases"], int) or cfg["cases"] < 1:
        raise ConfigError("cases must be a positive integer")
    if not isinstance(cfg["N"], int) or not 1 <= cfg["N"] <= 12:
        raise ConfigError("N must be an integer in 1..12")
    if cfg["regime"] not in ("i", "ii"):
        raise ConfigError("regime must be 'i' or 'ii'")
    if not isinstance(cfg["points"], int) or cfg["points"] < 32:
        raise ConfigError("points must be an integer >= 32")
    return cfg


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    kind = getattr(args, "kind", None)
    name = f"{args.command}-{kind}" if kind else args.command
    path = Path(args.out) if args.out else output_dir() / f"{name}.json"
    t0 = time.perf_counter()
    try:
        cfg = resolve_config(args)
        rng = np.random.default_rng(cfg["seed"])
        if args.command == "verify":
            tol = cfg["tol"] if cfg["tol"] is not None else TOLERANCES[kind]
            cases = CAMPAIGNS[kind](rng, cfg, tol)
        elif args.command == "solve":
            data = _read_json(args.input)
            cases = solve_q4(data) if kind == "q4" else solve_lattice_min(data)
        else:
            cases = run_partition(_read_json(args.graph), args.move, cfg)
    except (ConfigError, BadDomain, BadInput, NotAStar, TooManyInternalSites, ValueError) as exc:
        report = make_report(argv, {}, [], {"error": f"{type(exc).__name__}: {exc}", "passed": False})
        write_report(report, path)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except MasterSTRError as exc:
        report = make_report(argv, cfg, [], {"error": f"{type(exc).__name__}: {exc}", "passed": False,
                                            "residual": getattr(exc, "residual", None)})
        write_report(report, path)
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    extra = {"elapsed_seconds": time.perf_counter() - t0} if args.timing else None
    report = make_report(argv, cfg, cases, extra)
    write_report(report, path)
    worst = max((c.get("residual", 0.0) for c in cases), default=0.0)
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{status} {name}: {len(cases) - report['n_failed']}/{len(cases)} cases, "
          f"max residual {worst:.3e} -> {path}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
