"""Command-line front end: ``obsgraph <subcommand> [options]``.

Every subcommand prints (or writes to ``--out``) one JSON report holding the
inputs, tolerances, seed, result and wall time. Exit status is 0 on success,
1 on invalid input and 2 when redundant methods disagree.
"""
from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import bohr, density, experiments, tori
from .errors import InvalidInputError, InvalidSetError, ObsGraphError
from .graphs import build_graph, laplacian, parse_set
from .observability import (
    DEFAULT_TAU_RANK,
    exterior_average_norm,
    gramian,
    hautus_sweep,
    observability_constant,
    restriction_test,
)
from .spectral import eigendecompose, group_eigenspaces

EXIT_OK, EXIT_INVALID, EXIT_DISAGREE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# --------------------------------------------------------------------------
# argument parsing helpers

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "sqrt2": math.sqrt(2), "golden": (1 + math.sqrt(5)) / 2, "e": math.e}


def parse_number(text) -> float:
    """Float from a literal or a small arithmetic expression such as ``pi/200``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Call) and getattr(node.func, "id", None) == "sqrt" and len(node.args) == 1:
            return math.sqrt(ev(node.args[0]))
        raise ValueError
    try:
        return float(ev(ast.parse(str(text).strip(), mode="eval").body))
    except (ValueError, SyntaxError, ZeroDivisionError, TypeError):
        raise InvalidInputError(f"cannot parse number {text!r}") from None


def parse_int_list(text) -> list[int]:
    """``"0,1"``, ``"1..64"``, ``"1e3,1e4"`` or a JSON list."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    out = []
    for part in str(text).strip().strip("{}[]").split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = (int(parse_number(v)) for v in part.split(".."))
            out.extend(range(lo, hi + 1))
        else:
            v = parse_number(part)
            if v != int(v):
                raise InvalidInputError(f"expected an integer, got {part!r}")
            out.append(int(v))
    if not out:
        raise InvalidInputError(f"empty integer list {text!r}")
    return out


def parse_lattice_set(text: str) -> density.SetOracle:
    """Subset of ℤ from a descriptor.

    ``"r mod p"``, ``"{r1,r2} mod p"``, ``"rotation(alpha, gamma)"``,
    ``"mixed(q)"`` or ``"mixed(q, alpha)"``, ``"{i,j,a..b}"``, ``"all"``, ``"empty"``.
    """
    s = text.strip()
    if s in ("all", "Z"):
        return density.periodic(1, [0])
    if s in ("empty", "{}"):
        return density.explicit([])
    m = re.fullmatch(r"(\{[^}]*\}|-?\d+)\s*mod\s*(\d+)", s)
    if m:
        return density.periodic(int(m.group(2)), parse_int_list(m.group(1)))
    m = re.fullmatch(r"rotation\s*\(([^,]+),([^,]+)\)", s)
    if m:
        return density.rotation(parse_number(m.group(1)), parse_number(m.group(2)))
    m = re.fullmatch(r"mixed\s*\(([^,]+)(?:,([^,]+))?\)", s)
    if m:
        alpha = parse_number(m.group(2)) if m.group(2) else math.sqrt(2)
        return bohr.mixed_density_construct(parse_number(m.group(1)), alpha).oracle
    if re.fullmatch(r"\{[^}]*\}", s):
        return density.explicit(parse_int_list(s))
    raise InvalidSetError(f"cannot parse lattice set descriptor {text!r}")


def _require(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise InvalidInputError(f"--{n.replace('_', '-')} is required")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# --------------------------------------------------------------------------
# subcommands; each returns (result, tolerances, exit status)


def cmd_observability(args):
    _require(args, "graph", "set")
    g = build_graph(args.graph)
    E = parse_set(args.set, g)
    T = parse_number(args.time)
    A = laplacian(g)
    dec = eigendecompose(A)
    groups = group_eigenspaces(dec)
    rep = observability_constant(gramian(dec, groups, E, T), tau=args.tau_obs)
    rt = restriction_test(groups, dec, E, tau_rank=args.tau_rank)
    hs = hautus_sweep(A, E, n_grid=args.grid or 401)
    ext = exterior_average_norm(dec, groups, E.complement(), T)
    result = rep.to_dict() | {
        "graph": g.label,
        "n": g.n,
        "E": E.indices.tolist(),
        "refined": rep.refined,
        "restriction": {"observable": rt.observable, "witness_eigenvalue": rt.witness_eigenvalue,
                        "min_margin": rt.details["min_margin"]},
        "hautus": hs.to_dict(),
        "exterior": ext.to_dict(),
    }
    agree = rep.observable == rt.observable == hs.observable
    result["methods_agree"] = agree
    tol = {"tau_obs": rep.details["tau_obs"], "tau_rank": args.tau_rank, "tau_group": groups.tau, "tau_hautus": hs.tau}
    return result, tol, EXIT_OK if agree else EXIT_DISAGREE


def cmd_bohr(args):
    _require(args, "p", "residues")
    R = parse_int_list(args.residues)
    T = parse_number(args.time)
    grid = args.grid or bohr.DEFAULT_FIBER_GRID
    v = bohr.m_T_sweep(args.p, R, T, grid, threshold=args.threshold)
    fibers = [bohr.degenerate_kernel_test(args.p, R, x) for x in (0.0, -math.pi)]
    xs = bohr.fiber_grid(grid)
    lam = bohr.fiber_lambda_min(args.p, R, xs, T)
    result = v.to_dict() | {
        "p": args.p,
        "R": sorted(set(R)),
        "T": T,
        "numeric_observable": v.numeric_observable,
        "degenerate_fibers": [
            {"x": f.x, "injective": f.injective, "agree": f.agree, "kernel_kappas": f.kernel_kappas()} for f in fibers
        ],
        "rows": [{"x": float(x), "lambda_min": float(l)} for x, l in zip(xs, lam)],
    }
    agree = v.agree and all(f.agree for f in fibers) and all(f.injective for f in fibers) == v.observable
    result["methods_agree"] = agree
    tol = {"threshold": v.threshold, "tau_rank": DEFAULT_TAU_RANK}
    return result, tol, EXIT_OK if agree else EXIT_DISAGREE


def cmd_torus(args):
    _require(args, "N", "d")
    mode = args.construct or "product"
    if mode == "product":
        c = tori.product_construction(args.N, args.d, certify=args.certify)
        result = c.to_dict() | {"N": args.N, "d": args.d, "r": list(c.r), "expected_size": c.expected_size,
                                "support_size": c.support_size, "residual": c.residual, "details": c.details}
        ok = c.E_size == c.expected_size and c.verified_unobservable is not False
    elif mode == "zero-count":
        _require(args, "k")
        z = tori.zero_count(args.N, args.d, parse_int_list(args.k))
        result = {"N": z.N, "d": z.d, "k": list(z.k), "d0": z.d0, "closed_form": z.closed_form,
                  "brute_force": z.brute_force, "match": z.match, "notice": z.notice}
        ok = z.match is not False
    elif mode == "donoho-stark":
        _require(args, "r")
        rep = tori.donoho_stark_check(args.N, args.d, parse_int_list(args.r), trials=args.trials, seed=args.seed)
        result = {"N": args.N, "d": args.d, "r": list(rep.r), "bound": rep.bound, "min_support": rep.min_support,
                  "psi_r_support": rep.psi_r_support, "passed": rep.passed,
                  "rows": [{"trial": i, "support": int(s)} for i, s in enumerate(rep.supports)]}
        ok = rep.passed
    else:
        chars = tori.torus_spectrum(args.N, args.d, seed=args.seed)
        result = {"N": args.N, "d": args.d, "max_residual": chars.max_residual,
                  "rows": [{"k": k.tolist(), "mu": float(m)} for k, m in zip(chars.frequencies, chars.eigenvalues)]}
        ok = True
    tol = {"support": tori.SUPPORT_TOL, "residual": tori.RESIDUAL_TOL}
    return result, tol, EXIT_OK if ok else EXIT_DISAGREE


def cmd_density(args):
    _require(args, "set")
    E = parse_lattice_set(args.set)
    rows = []
    result = {"set": args.set, "kind": E.kind}
    if args.L is not None:
        prof = density.thickness_profile(E, parse_int_list(args.L), seed=args.seed)
        result["thickness"] = [{"L": c.L, "gamma_L": c.gamma_L, "min_count": c.min_count} for c in prof]
        result["thickness_exact"] = prof[0].exact
        rows += [{"kind": "L", "L_or_R": c.L, "lower": c.gamma_L, "upper": c.max_count / (2 * c.L + 1)} for c in prof]
    if args.R is not None:
        est = density.beurling_estimate(E, parse_int_list(args.R), seed=args.seed)
        result["beurling"] = {"d_minus": est.d_minus, "d_plus": est.d_plus, "exact": est.exact}
        rows += [{"kind": "R", "L_or_R": R, "lower": lo, "upper": hi} for R, lo, hi in est.rows()]
    if not rows:
        raise InvalidInputError("give --L and/or --R")
    result["rows"] = rows
    return result, {"scan": "one period" if E.period else f"{density.DEFAULT_RANDOM_CENTERS} seeded centers"}, EXIT_OK


def cmd_counterexample(args):
    _require(args, "p", "delta", "t")
    res = bohr.counterexample_ratio(args.p, parse_number(args.delta), parse_number(args.t), quad_nodes=args.nodes)
    return res.to_dict(), {"slack": 1e-6, "quad_nodes_min": 4096}, EXIT_OK if res.holds else EXIT_DISAGREE


def cmd_hautus(args):
    _require(args, "graph", "set")
    g = build_graph(args.graph)
    E = parse_set(args.set, g)
    A = laplacian(g)
    hs = hautus_sweep(A, E, M=parse_number(args.M), m=parse_number(args.m), n_grid=args.grid or 401)
    dec = eigendecompose(A)
    rt = restriction_test(group_eigenspaces(dec), dec, E, tau_rank=args.tau_rank)
    result = hs.to_dict() | {"graph": g.label, "E": E.indices.tolist(), "restriction_observable": rt.observable,
                             "rows": [{"lambda": float(x), "q": float(q)} for x, q in zip(hs.lambda_grid, hs.q)]}
    agree = hs.observable == rt.observable
    result["methods_agree"] = agree
    return result, {"tau_hautus": hs.tau, "tau_rank": args.tau_rank}, EXIT_OK if agree else EXIT_DISAGREE


def cmd_oracle_suite(args):
    names = list(experiments.ALL) if not args.only else [n for n in experiments.ALL if n.split("_")[0] in args.only.split(",")]
    if not names:
        raise InvalidInputError(f"no experiment matches {args.only!r}")
    runs = [experiments.ALL[n]() for n in names]
    result = {"experiments": {n: r.to_dict() for n, r in zip(names, runs)},
              "rows": [{"name": n, "passed": r.passed, "runtime": r.runtime} for n, r in zip(names, runs)],
              "all_passed": all(r.passed for r in runs)}
    tol = {k: getattr(experiments, k) for k in dir(experiments) if k.startswith("TOL_")}
    return result, tol, EXIT_OK if result["all_passed"] else EXIT_DISAGREE


COMMANDS = {
    "observability": cmd_observability,
    "bohr": cmd_bohr,
    "torus": cmd_torus,
    "density": cmd_density,
    "counterexample": cmd_counterexample,
    "hautus": cmd_hautus,
    "oracle-suite": cmd_oracle_suite,
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = _Parser(prog="obsgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--config", type=Path, default=None, help="JSON file of option defaults")
        subs[name] = sp
        return sp

    sp = add("observability", "Gramian, restriction and Hautus verdicts for a finite graph")
    sp.add_argument("--graph", help='e.g. "cycle:8", "torus:8,2", or a JSON file')
    sp.add_argument("--set", help='e.g. "{0,1} mod 4", "complement({0})"')
    sp.add_argument("--time", default="1.0")
    sp.add_argument("--grid", type=int, default=None, help="Hautus grid size")
    sp.add_argument("--tau-rank", type=float, default=DEFAULT_TAU_RANK)
    sp.add_argument("--tau-obs", type=float, default=None, help="override the 1e-8*T Gramian threshold")

    sp = add("bohr", "Periodic subsets of Z: arithmetic criterion and fiber sweep")
    sp.add_argument("--p", type=int)
    sp.add_argument("--residues", help='e.g. "0,1"')
    sp.add_argument("--time", default="1.0")
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--threshold", type=float, default=None, help="override the 1e-8*T m_T threshold")

    sp = add("torus", "Discrete torus constructions")
    sp.add_argument("--N", type=int)
    sp.add_argument("--d", type=int)
    sp.add_argument("--construct", choices=("product", "zero-count", "donoho-stark", "spectrum"), default="product")
    sp.add_argument("--certify", choices=("auto", "witness", "finite-obs"), default="auto")
    sp.add_argument("--k", help="frequency for zero-count")
    sp.add_argument("--r", help="frequency for donoho-stark")
    sp.add_argument("--trials", type=int, default=100)

    sp = add("density", "Thickness and Beurling density of a subset of Z")
    sp.add_argument("--set", help='e.g. "0 mod 2", "rotation(sqrt2, 0.3)", "mixed(0.7)"')
    sp.add_argument("--L", help='half-windows, e.g. "1..64"')
    sp.add_argument("--R", help='radii, e.g. "1e3,1e4,1e5"')

    sp = add("counterexample", "Mass fraction reaching one residue class versus 8t^2 delta^2/p")
    sp.add_argument("--p", type=int)
    sp.add_argument("--delta", help='e.g. "pi/200"')
    sp.add_argument("--t")
    sp.add_argument("--nodes", type=int, default=4096)

    sp = add("hautus", "Resolvent sweep q(lambda) = lambda_min(M(A-lambda)^2 + m 1_E)")
    sp.add_argument("--graph")
    sp.add_argument("--set")
    sp.add_argument("--M", default="1")
    sp.add_argument("--m", default="1")
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--tau-rank", type=float, default=DEFAULT_TAU_RANK)

    sp = add("oracle-suite", "Run the acceptance experiments")
    sp.add_argument("--only", default=None, help='comma-separated experiment numbers, e.g. "1,5"')
    return parser, subs


def _to_csv(result) -> str:
    buf = io.StringIO()
    rows = result.get("rows")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    else:
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in sorted(result.items()):
            w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
    return buf.getvalue()


def run(argv=None) -> int:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_INVALID
        subs[args.command].set_defaults(**{k.replace("-", "_"): v for k, v in cfg.items()})
        args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        result, tol, status = COMMANDS[args.command](args)
    except ObsGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    inputs = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
              if k not in ("command", "out", "format", "config", "seed")}
    report = _jsonable({
        "command": args.command,
        "inputs": inputs,
        "tolerances": tol,
        "seed": args.seed,
        "result": result,
        "exit_status": status,
        "wall_time": time.perf_counter() - t0,
    })
    text = _to_csv(report["result"]) if args.format == "csv" else json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return status


def main(argv=None):
    sys.exit(run(argv))
