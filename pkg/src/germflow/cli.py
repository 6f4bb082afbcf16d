"""Command-line entry point: ``germflow check|construct|verify|loja|bounds|lemtech``.

Exit codes: 0 pass, 2 hypothesis violation, 3 domain certificate failure,
4 numerical failure, 5 verification failure, 64 malformed input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    InsufficientCoverage,
    LemmaHypothesisError,
    inv_power_expand,
    lemtech_bound_scan,
    loja_gradient_scan,
    quotient_rule_derivative,
    scaling_suite,
)
from .casefile import CaseFileError, load_case, load_json
from .flow import FlowConfig
from .germ import check_hypotheses, multi_indices
from .grid import SHELLS, SampleGrid
from .homotopy import HomotopyField
from .pipeline import EXIT_CODES, run_construct, run_verify
from .poly import MultiPoly, PolySyntaxError, parse_poly

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_VERIFY = 5
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _clean(obj):
    """Make ``obj`` strict-JSON serialisable (numpy scalars, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def dump_report(payload: dict, out: str | None) -> str:
    doc = {"germflow_version": __version__, "generated_at": datetime.now(timezone.utc).isoformat()}
    doc.update(payload)
    text = json.dumps(_clean(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return text


def _flow_config(args, file_flow: dict) -> FlowConfig:
    kw = {}
    for key in ("rtol", "atol", "h_init", "h_min", "max_steps"):
        if key in file_flow:
            kw[key] = file_flow[key]
    if args.rtol is not None:
        kw["rtol"] = args.rtol
    if args.atol is not None:
        kw["atol"] = args.atol
    try:
        cfg = FlowConfig.from_env(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid flow settings: {exc}") from exc
    return cfg


def _radius_grid(args, cf, default_grid=41):
    radius = args.radius if args.radius is not None else (cf.radius if cf.radius is not None else 0.3)
    grid = args.grid if args.grid is not None else (cf.grid if cf.grid is not None else default_grid)
    if not radius > 0:
        raise UsageError("--radius must be positive")
    if grid < 3:
        raise UsageError("--grid must be at least 3")
    return float(radius), int(grid)


# commands ---------------------------------------------------------------------

def cmd_check(args) -> int:
    cf, case = load_case(args.case)
    rep = check_hypotheses(case)
    dump_report({"case": cf.id, "hypothesis": rep.to_dict(case.names)}, args.out)
    return EXIT_OK if rep.ok else EXIT_HYPOTHESIS


def cmd_construct(args) -> int:
    cf, case = load_case(args.case)
    radius, grid = _radius_grid(args, cf)
    report = run_construct(case, radius, grid, _flow_config(args, cf.flow), args.force, args.seed)
    dump_report(report.to_dict(), args.out)
    return report.exit_code


def cmd_verify(args) -> int:
    cf, case = load_case(args.case)
    radius, grid = _radius_grid(args, cf)
    report = run_verify(case, radius, grid, _flow_config(args, cf.flow), args.force, args.seed,
                        args.alpha_max)
    dump_report(report.to_dict(), args.out)
    return report.exit_code


def cmd_loja(args) -> int:
    data = load_json(args.poly)
    if not isinstance(data, dict) or "vars" not in data or "f" not in data:
        raise CaseFileError("polynomial file needs 'vars' and 'f'")
    f = parse_poly(data["f"], data["vars"])
    radius = args.radius if args.radius is not None else float(data.get("radius", 0.5))
    grid = args.grid if args.grid is not None else int(data.get("grid", 25))
    try:
        rep = loja_gradient_scan(f, SampleGrid(radius, grid, SHELLS))
    except ValueError as exc:
        dump_report({"f": data["f"], "error": str(exc)}, args.out)
        return EXIT_VERIFY
    dump_report({"f": data["f"], "loja": rep.to_dict()}, args.out)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def _write_cloud(path: Path, points) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["dist", "magnitude"])
        for d, m in points:
            w.writerow([repr(float(d)), repr(float(m))])


def cmd_bounds(args) -> int:
    cf, case = load_case(args.case)
    radius, grid = _radius_grid(args, cf, default_grid=25)
    hyp = check_hypotheses(case)
    if not hyp.ok and not args.force:
        dump_report({"case": cf.id, "hypothesis": hyp.to_dict(case.names)}, args.out)
        return EXIT_HYPOTHESIS
    alpha_max = case.r if args.alpha_max is None else args.alpha_max
    if alpha_max > case.r:
        raise UsageError(f"--alpha-max {alpha_max} exceeds r = {case.r}")
    field = HomotopyField(case)
    try:
        reports = scaling_suite(field, SampleGrid(radius, grid, SHELLS), alpha_max)
    except InsufficientCoverage as exc:
        dump_report({"case": cf.id, "error": str(exc)}, args.out)
        return EXIT_VERIFY
    payload = {"case": cf.id, "scaling": [r.to_dict() for r in reports]}
    if args.out:
        out = Path(args.out)
        clouds = []
        for rep in reports:
            tag = "".join(str(a) for a in rep.alpha)
            path = out.with_name(f"{out.stem}_alpha{tag}.csv")
            _write_cloud(path, rep.points)
            clouds.append(path.name)
        payload["point_clouds"] = clouds
    dump_report(payload, args.out)
    return EXIT_OK if all(r.pass_ for r in reports) else EXIT_VERIFY


def cmd_lemtech(args) -> int:
    data = load_json(args.xi)
    if not isinstance(data, dict) or "vars" not in data or "xi" not in data:
        raise CaseFileError("xi file needs 'vars' and 'xi'")
    vars_ = data["vars"]
    xi = parse_poly(data["xi"], vars_)
    if xi.is_zero():
        raise UsageError("xi must be nonzero")
    if args.order < 1:
        raise UsageError("--order must be at least 1")
    if "eta" in data:
        eta = parse_poly(data["eta"], vars_)
    else:
        xi_c = xi

        def eta(pts):
            from .poly import CompiledPolys

            return np.sqrt(np.abs(CompiledPolys([xi_c]).values(pts)[:, 0]))

    radius = args.radius if args.radius is not None else float(data.get("radius", 0.5))
    grid = args.grid if args.grid is not None else int(data.get("grid", 25))
    results = []
    ok = True
    one = MultiPoly.const(xi.n, 1)
    for k in multi_indices(xi.n, args.order, args.order):
        num, power = inv_power_expand(xi, k)
        qn, qd = quotient_rule_derivative(one, xi, k)
        match = num * qd == qn * xi**power
        entry = {"k": list(k), "numerator": num.to_string(vars_), "denominator_power": power,
                 "matches_quotient_rule": match}
        try:
            scan = lemtech_bound_scan(xi, eta, k, SampleGrid(radius, grid, SHELLS))
            entry["bound"] = scan.to_dict()
            scan_ok = scan.ok
        except (LemmaHypothesisError, ValueError) as exc:
            entry["bound"] = {"error": str(exc)}
            scan_ok = False
        ok = ok and match and scan_ok
        results.append(entry)
    dump_report({"xi": data["xi"], "order": args.order, "expansions": results, "pass": ok}, args.out)
    return EXIT_OK if ok else EXIT_VERIFY


# parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="germflow", description="Construct and verify right equivalences f = g o phi.")
    p.add_argument("--version", action="version", version=f"germflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, flow=True):
        sp.add_argument("--radius", type=float)
        sp.add_argument("--grid", type=int)
        sp.add_argument("--out")
        sp.add_argument("--seed", type=int, default=42)
        if flow:
            sp.add_argument("--rtol", type=float)
            sp.add_argument("--atol", type=float)
            sp.add_argument("--force", action="store_true")
            sp.add_argument("--alpha-max", type=int, dest="alpha_max")

    sp = sub.add_parser("check", help="hypothesis gate only")
    sp.add_argument("case")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_check)

    for name, func, helptext in (
        ("construct", cmd_construct, "certify a domain and integrate phi"),
        ("verify", cmd_verify, "construct plus all estimate checks"),
        ("bounds", cmd_bounds, "decay exponents of X and its derivatives"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("case")
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("loja", help="gradient-inequality scan of f")
    sp.add_argument("poly")
    common(sp, flow=False)
    sp.set_defaults(func=cmd_loja)

    sp = sub.add_parser("lemtech", help="derivatives of 1/xi and their bound")
    sp.add_argument("xi")
    sp.add_argument("--order", type=int, default=1)
    common(sp, flow=False)
    sp.set_defaults(func=cmd_lemtech)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PolySyntaxError as exc:
        print(f"germflow: polynomial syntax error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CaseFileError, UsageError) as exc:
        print(f"germflow: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
