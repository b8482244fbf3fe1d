"""Command-line front end.

Every subcommand prints one report in the chosen format.  Rationals are
written as "num/den" strings and unit classes as "1" or "D".
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass

from . import btree, checks, classify, density, eislocal, lengths
from .padic import REAL, PrimeContext, PrimeError
from .qform import DiagonalForm, FormError, SymForm, diagonalize, fmt_rational, parse_form

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DOMAIN_ERRORS = (
    FormError,
    PrimeError,
    lengths.DomainError,
    btree.NotRepresentable,
    btree.WrongCase,
    btree.BudgetError,
    density.BudgetExceeded,
    density.NotReducible,
    eislocal.UnsupportedCase,
    eislocal.NotRegular,
)


@dataclass(frozen=True)
class RunConfig:
    prime: int
    delta: int | None
    precision: int
    radius: int
    fmt: str
    seed: int

    def context(self) -> PrimeContext:
        return PrimeContext.create(self.prime, self.delta, self.precision)


# ---------------------------------------------------------------------------
# output


def _flatten(obj, prefix: str = "") -> list[tuple[str, str]]:
    if isinstance(obj, dict):
        out = []
        for k in obj:
            out += _flatten(obj[k], f"{prefix}.{k}" if prefix else str(k))
        return out
    if isinstance(obj, list):
        if all(not isinstance(x, (dict, list)) for x in obj):
            return [(prefix, ";".join(str(x) for x in obj))]
        out = []
        for i, x in enumerate(obj):
            out += _flatten(x, f"{prefix}[{i}]")
        return out
    if isinstance(obj, bool):
        return [(prefix, "true" if obj else "false")]
    return [(prefix, "" if obj is None else str(obj))]


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2)
    rows = _flatten(report)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        w.writerows(rows)
        return buf.getvalue().rstrip("\n")
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


# ---------------------------------------------------------------------------
# input


def _form(args, ctx: PrimeContext) -> DiagonalForm:
    if args.gram:
        return diagonalize(SymForm.from_json(args.gram), ctx)
    if not args.form:
        raise FormError("give the form with --form 'e1*p^a1,...' or --gram '[[...],...]'")
    return parse_form(args.form, ctx)


def _symform(args, ctx: PrimeContext) -> SymForm:
    if args.gram:
        return SymForm.from_json(args.gram)
    return _form(args, ctx).symform()


def _unit(c: int) -> str:
    return "1" if c == 1 else "D"


# ---------------------------------------------------------------------------
# subcommands


def cmd_density(args, cfg: RunConfig) -> tuple[dict, int]:
    ctx = cfg.context()
    T = _form(args, ctx)
    S = density.with_hyperbolic(density.named_form(ctx, args.space), args.hyperbolic)
    out = {"S": S.label(), "T": T.label(), "p": ctx.p}
    try:
        out["reduced"] = fmt_rational(density.reduce(S, T).value())
    except density.NotReducible as exc:
        out["reduced"] = None
        out["reduced_note"] = str(exc)
    if not args.no_bruteforce:
        res = density.density_bruteforce(S, T, cfg.precision, ctx)
        out["bruteforce"] = res.to_json()
    return out, EXIT_OK


def cmd_length(args, cfg: RunConfig) -> tuple[dict, int]:
    ctx = cfg.context()
    T = _form(args, ctx)
    if T.n == 2:
        return {"T": T.label(), "ordinary_length": lengths.ordinary_length(T)}, EXIT_OK
    res = lengths.e_p(T).to_json()
    res["transversal"] = lengths.transversality(T)
    return res, EXIT_OK


def cmd_tube(args, cfg: RunConfig) -> tuple[dict, int]:
    ctx = cfg.context()
    T = _form(args, ctx)
    if any(a < 1 for a in T.exponents):
        raise FormError("tube counts need T = 0 mod p; the tube is built from p^-1 T")
    triple = btree.construct_triple(T.scaled(-1))
    limit = btree.ball_size(cfg.radius, ctx.p)
    rep = btree.tube_count(triple, max_vertices=limit)
    out = rep.to_json()
    out["T"] = T.label()
    out["seed"] = [v.key() for v in rep.seed]
    if args.edges:
        out["edge_list"] = [list(e) for e in rep.edge_list(ctx.p)]
    return out, EXIT_OK


def cmd_classify(args, cfg: RunConfig) -> tuple[dict, int]:
    ctx = cfg.context()
    T = _symform(args, ctx)
    out = classify.classify_cycle(T, ctx, args.case).to_json()
    if T.is_integral(ctx.p):
        D = diagonalize(T, ctx)
        out["T"] = D.label()
        out["units"] = [_unit(c) for c in D.chis()]
        if D.n == 3 and D.exponents[0] >= 1:
            out["components_irreducible"] = classify.hz_irreducible(D)
        if D.n == 4:
            out["siegel_irreducible"] = classify.siegel_irreducible(D)
    return out, EXIT_OK


def cmd_eis(args, cfg: RunConfig) -> tuple[dict, int]:
    ctx = cfg.context()
    T = _form(args, ctx)
    out = {"T": T.label(), "case": args.case,
           "value": eislocal.whittaker_value(T, args.case).to_json(),
           "derivative": eislocal.whittaker_derivative(T, args.case).to_json()}
    L = lengths.e_p(T)
    out["e_p"] = int(L.value) if L.in_domain else fmt_rational(L.value)
    return out, EXIT_OK


def cmd_diff(args, cfg: RunConfig) -> tuple[dict, int]:
    ctx = cfg.context()
    T = _symform(args, ctx)
    diff = classify.diff_set(T, ctx)
    places = sorted((v for v in diff if v != REAL)) + ([REAL] if REAL in diff else [])
    out = {"gram": [[fmt_rational(x) for x in r] for r in T.gram],
           "diff": [str(v) for v in places],
           "regular": classify.is_regular(T, args.level, ctx, args.case), "level": args.level}
    if out["regular"]:
        out["degree_factor"] = eislocal.degree_factor(T, args.level, ctx, args.case).to_json()
    return out, EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> tuple[dict, int]:
    results = checks.run_suite(args.suite, cfg.seed)
    ok = all(r.status == "pass" for r in results)
    report = {"suite": args.suite, "seed": cfg.seed,
              "checks": [r.to_json() for r in results],
              "passed": sum(r.status == "pass" for r in results),
              "failed": sum(r.status == "fail" for r in results),
              "skipped": sum(r.status == "skipped-budget" for r in results)}
    if not args.timings:
        for c in report["checks"]:
            del c["seconds"]
    return report, EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prime", type=int, default=3, help="odd prime p (default 3)")
    common.add_argument("--delta", type=int, default=None,
                        help="non-square unit Delta mod p (default: least non-residue)")
    common.add_argument("--precision", type=int, default=2,
                        help="modulus exponent t for brute-force counts (default 2)")
    common.add_argument("--radius", type=int, default=6,
                        help="tube search budget: at most the size of a ball of this radius")
    common.add_argument("--format", dest="fmt", choices=["json", "csv", "text"], default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized sweeps")

    form = argparse.ArgumentParser(add_help=False)
    form.add_argument("--form", help="diagonal entries, e.g. '1,D*p,p^3' or '1,2,3'")
    form.add_argument("--gram", help="half-Gram matrix as JSON rows, e.g. '[[1,0],[0,3]]'")

    case = argparse.ArgumentParser(add_help=False)
    case.add_argument("--case", choices=["inert", "split"], default="inert")

    ap = argparse.ArgumentParser(
        prog="localcycles",
        description="Exact local computations for special cycles on Hilbert-Blumenthal "
                    "surfaces: densities, lengths, tubes in the Bruhat-Tits tree, "
                    "classification and local Eisenstein data.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", parents=[common, form],
                       help="representation density alpha_p(S + H_2r, T): reduction and brute force")
    p.add_argument("--space", default="S", choices=["S", "H4", "S'", "S~'", "S'split", "N0"])
    p.add_argument("--hyperbolic", type=int, default=0, help="number r of hyperbolic planes")
    p.add_argument("--no-bruteforce", action="store_true")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("length", parents=[common, form],
                       help="length e_p(T) of an isolated point (rank 3) or ordinary length (rank 2)")
    p.set_defaults(func=cmd_length)

    p = sub.add_parser("tube", parents=[common, form],
                       help="vertices in the intersection of tubes for T = 0 mod p")
    p.add_argument("--edges", action="store_true", help="include the edge list")
    p.set_defaults(func=cmd_tube)

    p = sub.add_parser("classify", parents=[common, form, case],
                       help="shape of the cycle over the supersingular locus and irreducibility")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("eis", parents=[common, form, case],
                       help="local Whittaker value and derivative at p")
    p.set_defaults(func=cmd_eis)

    p = sub.add_parser("diff", parents=[common, form, case],
                       help="places where T is not represented; regularity and degree factor")
    p.add_argument("--level", type=int, default=1, help="level N")
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("verify", parents=[common],
                       help="run the cross-validation checks; nonzero exit on any failure")
    p.add_argument("--suite", default="all",
                   help=f"one of {sorted(checks.SUITES)} or a comma list of {sorted(checks.CHECKS)}")
    p.add_argument("--timings", action="store_true", help="include wall times (not deterministic)")
    p.set_defaults(func=cmd_verify)
    return ap


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.prime, args.delta, args.precision, args.radius, args.fmt, args.seed)
    if cfg.precision < 1 or cfg.radius < 0:
        print("error: --precision must be positive and --radius nonnegative", file=stderr)
        return EXIT_USAGE
    try:
        report, code = args.func(args, cfg)
    except DOMAIN_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE
    print(render(report, cfg.fmt), file=stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
