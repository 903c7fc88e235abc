"""Command-line surface.

Exit codes: 0 solved and certified, 2 hypothesis or premise failure (named
in the report), 3 input error. Human-readable reports go to stdout; pass
``--out`` to also write the machine block (full certificates included, so
external tools can re-verify without this library).
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import io as kit_io
from . import product as prod
from . import solvers
from .errors import EvpkitError, HypothesisError, InputError, PremiseError
from .geometry import Polytope, singleton, strictly_positive_functional
from .instances import check_assumptions
from .io import Report, render
from .scalarize import GerstewitzFn, gz_bisect_oracle, gz_value

EVP_THEOREMS = ("3.1", "3.5", "3.6", "4.1", "4.2", "4.4", "4.5", "4.6")
PRODUCT_THEOREMS = ("5.1", "5.2", "5.6")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evpkit",
        description="Certified minimal-point solvers for finite "
                    "vector-optimization instances over polyhedral cones.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("--out", help="write the machine-readable report here")

    p = sub.add_parser("validate", help="check instance files")
    p.add_argument("paths", nargs="+")
    add_out(p)

    p = sub.add_parser("solve-evp", help="run a variational-principle solver")
    p.add_argument("--theorem", required=True, choices=EVP_THEOREMS)
    p.add_argument("--mode", default="greedy", choices=("greedy", "faithful"))
    p.add_argument("--xi", default="linear", choices=("linear", "gerstewitz"),
                   help="scalarization for the general solver")
    p.add_argument("paths", nargs="+")
    add_out(p)

    p = sub.add_parser("solve-minimal-point",
                       help="run a graph-space minimal-point solver")
    p.add_argument("--theorem", required=True, choices=PRODUCT_THEOREMS)
    p.add_argument("--mode", default="greedy", choices=("greedy", "faithful"))
    p.add_argument("paths", nargs="+")
    add_out(p)

    p = sub.add_parser("pareto", help="minimal points of the value set")
    p.add_argument("--strict", action="store_true")
    p.add_argument("paths", nargs="+")
    add_out(p)

    p = sub.add_parser("scalarize", help="evaluate the cone scalarization")
    p.add_argument("--y", required=True,
                   help="comma-separated point, e.g. '2,3'")
    p.add_argument("--k0", help="direction override, e.g. '1,1'")
    p.add_argument("paths", nargs=1)
    add_out(p)

    p = sub.add_parser("check-assumptions",
                       help="evaluate the named solver hypotheses")
    p.add_argument("--xi", default="linear", choices=("linear", "gerstewitz"))
    p.add_argument("paths", nargs="+")
    add_out(p)

    p = sub.add_parser("generate", help="emit a deterministic random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--values", type=int, default=2)
    p.add_argument("--variant", default="singleton",
                   choices=kit_io.VARIANTS)
    add_out(p)

    p = sub.add_parser("builtin", help="emit a bundled instance")
    p.add_argument("--name", required=True, choices=kit_io.BUILTIN_NAMES)
    p.add_argument("--samples", type=int, default=8)
    add_out(p)
    return parser


def _parse_point(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"not a comma-separated point: {text!r}") from None


def _family_direction_vertices(bundle):
    """Direction-set vertices the perturbation carries, for separation."""
    spec = bundle.raw["perturbation"]
    if spec["variant"] == "singleton":
        return Polytope([spec["k0"]])
    if spec["variant"] in ("polytope", "quasimetric"):
        return Polytope(spec["vertices"])
    # extensional: pool the vertices of all sets over distinct label pairs
    rows = []
    fam = bundle.family
    space = bundle.instance.space
    for x2 in space.labels:
        for x1 in space.labels:
            if x1 == x2:
                continue
            for _, scale, H in fam.sets(space, x2, x1):
                rows.extend((scale * H.vertices).tolist())
    if not rows:
        raise InputError("perturbation has no sets over distinct labels")
    return Polytope(rows)


def _general_xi(bundle, kind):
    inst = bundle.instance
    if kind == "gerstewitz":
        spec = bundle.raw["perturbation"]
        k0 = spec.get("k0")
        if k0 is None:
            raise InputError("gerstewitz scalarization needs perturbation.k0")
        return GerstewitzFn(inst.cone, k0, inst.tol)
    H = _family_direction_vertices(bundle)
    xi = strictly_positive_functional(H, inst.cone, inst.tol)
    if xi is None:
        raise HypothesisError(
            "separation", "no strictly positive functional for the "
            "perturbation's direction vertices")
    return xi


def _require(params, *names):
    for name in names:
        attr = "lam" if name == "lambda" else name
        if getattr(params, attr) is None:
            raise InputError(f"params.{name} is required for this solver")


def _dispatch_evp(bundle, theorem, mode, xi_kind):
    inst = bundle.instance
    params = bundle.params
    spec = bundle.raw["perturbation"]
    if theorem == "3.1":
        xi = _general_xi(bundle, xi_kind)
        return solvers.solve_evp_general(inst, bundle.family, xi,
                                         params.x0, mode)
    if theorem in ("3.5", "3.6"):
        _require(params, "epsilon", "lambda")
        if spec.get("k0") is None:
            raise InputError("perturbation.k0 is required for this solver")
        premise = "pointwise" if theorem == "3.5" else "global"
        return solvers.solve_evp_direction(inst, spec["k0"], params.epsilon,
                                           params.lam, params.x0,
                                           premise=premise, mode=mode)
    if theorem in ("4.1", "4.2"):
        _require(params, "gamma")
        H = _direction_polytope(spec)
        return solvers.solve_evp_set_direction(
            inst, H, params.gamma, params.x0,
            open_family=theorem == "4.1", mode=mode)
    if theorem == "4.4":
        if spec["variant"] != "quasimetric":
            raise InputError("this solver needs a quasimetric perturbation")
        return solvers.solve_evp_quasimetric(
            inst, Polytope(spec["vertices"]),
            bundle.family.p, params.x0, mode=mode)
    if theorem in ("4.5", "4.6"):
        _require(params, "epsilon", "gamma")
        H = _direction_polytope(spec)
        return solvers.solve_evp_approx(
            inst, H, params.epsilon, params.gamma, params.x0,
            strict=theorem == "4.6", mode=mode)
    raise InputError(f"unknown theorem {theorem!r}")


def _direction_polytope(spec):
    if spec["variant"] == "singleton":
        return singleton(spec["k0"])
    if "vertices" in spec:
        return Polytope(spec["vertices"])
    raise InputError("perturbation carries no direction set")


def _dispatch_product(bundle, theorem, mode):
    if bundle.product is None:
        raise InputError("instance has no product block")
    pi = bundle.product
    params = bundle.params
    spec = bundle.raw["perturbation"]
    if theorem == "5.6":
        _require(params, "epsilon", "lambda")
        if spec.get("k0") is None:
            raise InputError("perturbation.k0 is required for this solver")
        return prod.solve_pareto_evp(pi, spec["k0"], params.epsilon,
                                     params.lam, mode=mode)
    gamma = params.gamma if params.gamma is not None else spec.get("gamma")
    if gamma is None:
        raise InputError("params.gamma is required for this solver")
    H = _direction_polytope(spec)
    xi = strictly_positive_functional(H, pi.cone, pi.tol)
    if xi is None:
        raise HypothesisError(
            "separation", "no strictly positive functional for the "
            "direction set")
    fm = prod.fmap_from_rate(pi.base, H, gamma, xi)
    if theorem == "5.1":
        return prod.solve_minimal_point(pi, fm, mode=mode)
    if theorem == "5.2":
        return prod.solve_strict_minimal(pi, fm, mode=mode)
    raise InputError(f"unknown theorem {theorem!r}")


def _report_for_error(command, path, exc, started, theorem=None, tol=None):
    if isinstance(exc, InputError):
        status, code = "input_error", 3
    elif isinstance(exc, PremiseError):
        status, code = "premise_failed", 2
    elif isinstance(exc, HypothesisError):
        status, code = "hypothesis_failed", 2
    else:
        raise exc
    payload = {"error": str(exc)}
    witness = getattr(exc, "witness", None)
    if witness is not None:
        payload["witness"] = solvers._jsonable(witness)
    name = getattr(exc, "name", None)
    if name:
        payload["failed_hypothesis"] = name
    return Report(command=command, status=status, exit_code=code,
                  instance=path, theorem=theorem, payload=payload,
                  timing_s=time.perf_counter() - started,
                  tolerance=tol if tol is not None else kit_io.DEFAULT_TOL)


def _run_on_path(command, path, worker, theorem=None):
    started = time.perf_counter()
    tol = None
    try:
        bundle = kit_io.load_validate(path)
        tol = bundle.tol
        payload = worker(bundle)
        return Report(command=command, status="certified"
                      if "certificate" in payload else "ok",
                      exit_code=0, instance=str(path), theorem=theorem,
                      payload=payload,
                      timing_s=time.perf_counter() - started, tolerance=tol)
    except EvpkitError as exc:
        return _report_for_error(command, str(path), exc, started,
                                 theorem=theorem, tol=tol)


def run_command(argv):
    """Execute one CLI invocation; returns ``(exit_code, reports)``.

    Reports come back in input order; the exit code is the first nonzero
    per-report code, or 0.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return (3 if e.code not in (0, None) else 0), []

    reports = []
    if args.command == "validate":
        for path in args.paths:
            started = time.perf_counter()
            try:
                bundle = kit_io.load_validate(path)
                summary = {
                    "labels": len(bundle.instance.labels),
                    "dimension": bundle.instance.cone.dim,
                    "variant": bundle.raw["perturbation"]["variant"],
                    "has_product": bundle.product is not None,
                }
                reports.append(Report(
                    command="validate", status="ok", exit_code=0,
                    instance=str(path), payload={"summary": summary},
                    timing_s=time.perf_counter() - started,
                    tolerance=bundle.tol))
            except EvpkitError as exc:
                reports.append(_report_for_error("validate", str(path), exc,
                                                 started))

    elif args.command == "solve-evp":
        for path in args.paths:
            reports.append(_run_on_path(
                "solve-evp", path,
                lambda b: {"certificate": _dispatch_evp(
                    b, args.theorem, args.mode, args.xi).to_dict()},
                theorem=args.theorem))

    elif args.command == "solve-minimal-point":
        for path in args.paths:
            reports.append(_run_on_path(
                "solve-minimal-point", path,
                lambda b: {"certificate": _dispatch_product(
                    b, args.theorem, args.mode).to_dict()},
                theorem=args.theorem))

    elif args.command == "pareto":
        def pareto_worker(bundle):
            B = bundle.instance.fmap.all_points()
            fn = prod.strict_pareto_min if args.strict else prod.pareto_min
            pts = fn(list(B), bundle.instance.cone, bundle.tol)
            return {"minimal": [[float(v) for v in p] for p in pts],
                    "strict": bool(args.strict)}
        for path in args.paths:
            reports.append(_run_on_path("pareto", path, pareto_worker))

    elif args.command == "scalarize":
        def scalarize_worker(bundle):
            y = _parse_point(args.y)
            k0 = (_parse_point(args.k0) if args.k0
                  else bundle.raw["perturbation"].get("k0"))
            if k0 is None:
                raise InputError("no direction: pass --k0 or use a "
                                 "singleton perturbation")
            g = GerstewitzFn(bundle.instance.cone, k0, bundle.tol)
            value = gz_value(g, y)
            oracle = gz_bisect_oracle(g, y)
            return {"y": y, "k0": list(map(float, k0)),
                    "value": value, "oracle": oracle}
        reports.append(_run_on_path("scalarize", args.paths[0],
                                    scalarize_worker))

    elif args.command == "check-assumptions":
        def assumptions_worker(bundle):
            xi = _general_xi(bundle, args.xi)
            report = check_assumptions(bundle.instance, bundle.family, xi,
                                       bundle.params.x0)
            payload = {"assumptions": report.to_dict(),
                       "solvable": report.solvable()}
            if not report.solvable():
                raise HypothesisError(report.failed_name(),
                                      "assumption gate failed",
                                      witness=payload)
            return payload
        for path in args.paths:
            reports.append(_run_on_path("check-assumptions", path,
                                        assumptions_worker))

    elif args.command == "generate":
        started = time.perf_counter()
        try:
            data = kit_io.generate(args.seed, n=args.n, m=args.m,
                                   values_per_point=args.values,
                                   variant=args.variant)
            payload = {"instance": data}
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    json.dump(data, fh, indent=2)
                payload["written"] = args.out
            reports.append(Report(command="generate", status="ok",
                                  exit_code=0, payload=payload,
                                  timing_s=time.perf_counter() - started))
        except EvpkitError as exc:
            reports.append(_report_for_error("generate", None, exc, started))

    elif args.command == "builtin":
        started = time.perf_counter()
        try:
            data = kit_io.builtin(args.name, samples=args.samples)
            payload = {"instance": data}
            if args.name == "example41":
                bundle = kit_io.load_validate(data)
                payload["probes"] = kit_io.example41_probes(bundle)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    json.dump(data, fh, indent=2)
                payload["written"] = args.out
            reports.append(Report(command="builtin", status="ok",
                                  exit_code=0, payload=payload,
                                  timing_s=time.perf_counter() - started))
        except EvpkitError as exc:
            reports.append(_report_for_error("builtin", None, exc, started))

    exit_code = next((r.exit_code for r in reports if r.exit_code), 0)
    out = getattr(args, "out", None)
    if out and args.command not in ("generate", "builtin"):
        with open(out, "w", encoding="utf-8") as fh:
            json.dump({"reports": [r.to_dict() for r in reports]}, fh,
                      indent=2)
    return exit_code, reports


def main(argv=None):
    code, reports = run_command(sys.argv[1:] if argv is None else argv)
    for report in reports:
        print(render(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
