"""Command-line entry point.

Every subcommand writes one JSON document (or CSV for ``verify --format csv``)
carrying a ``schema_version`` field. Output is sorted and free of timings, so
repeated runs are byte-identical.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import bohr as _bohr
from . import bourgain as _bg
from . import decomp as _dc
from . import gap as _gap
from . import linsys as _ls
from . import parallel
from . import quad as _qd
from . import unorms as _un
from . import verify as _vf
from .generators import randpm1
from .reports import _clean
from .zn_core import GroupFn

SCHEMA_VERSION = 1

FUNCTION_HELP = """\
function inputs (--input / --fn):
  PATH.json             {"modulus": N, "values": [[re, im], ...]} or a bare [[re, im], ...] array
  quadphase:N,a,b       omega^(a x^2 + b x) on Z_N
  randpm1:N,seed        seeded random +-1 values (splitmix64)
  indicator:N,x1,x2,..  0/1 indicator of the listed residues
linear systems (--system FILE): one form per line, integer coefficients separated by spaces
"""

PRESETS = {"3ap": _ls.three_ap, "4ap": _ls.four_ap, "pairwise": _ls.pairwise_sums}


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    N: int | None = None
    seed: int | None = None
    budgets: dict = field(default_factory=dict)
    output: str | None = None
    fmt: str = "json"
    suites: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        return cls(**obj)


def config_from_args(args) -> RunConfig:
    budgets = {k: getattr(args, k) for k in ("budget", "trials") if getattr(args, k, None) is not None}
    n = getattr(args, "n", None)
    lemmas = getattr(args, "lemma", None) or []
    return RunConfig(
        command=args.command,
        N=n if isinstance(n, int) else None,
        seed=getattr(args, "seed", None),
        budgets=budgets,
        output=getattr(args, "out", None),
        fmt=getattr(args, "format", "json"),
        suites=list(lemmas),
    )


# --------------------------------------------------------------------------
# inputs


def _ints(text: str, what: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what}: expected comma-separated integers, got {text!r}") from None


def load_function(src: str) -> GroupFn:
    """A GroupFn from a JSON file or a generator spec (see FUNCTION_HELP)."""
    name, sep, arg = src.partition(":")
    if sep and name in ("quadphase", "randpm1", "indicator"):
        vals = _ints(arg, name)
        if name == "quadphase":
            if len(vals) != 3:
                raise UsageError(f"quadphase: expected N,a,b, got {arg!r}")
            return GroupFn.quadratic_phase(vals[0], vals[1], vals[2])
        if name == "randpm1":
            if len(vals) != 2:
                raise UsageError(f"randpm1: expected N,seed, got {arg!r}")
            return randpm1(vals[0], vals[1])
        if not vals:
            raise UsageError("indicator: expected N followed by residues")
        return GroupFn.indicator(vals[0], vals[1:])
    path = Path(src)
    if not path.exists():
        raise UsageError(f"{src!r} is neither a file nor a generator spec")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{src}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    try:
        return GroupFn.from_json(obj)
    except ValueError as exc:
        raise UsageError(f"{src}: {exc}") from None


def _load_system(args) -> _ls.LinearSystem:
    if getattr(args, "system", None):
        try:
            return _ls.LinearSystem.parse(Path(args.system).read_text())
        except OSError as exc:
            raise UsageError(str(exc)) from None
    return PRESETS[args.preset]()


def _gap_from(args, N: int) -> _gap.Gap:
    gens = _ints(args.gens, "--gens")
    lens = _ints(args.lens, "--lens")
    if len(gens) != len(lens):
        raise UsageError("--gens and --lens must have the same length")
    return _gap.build_gap(N, args.base, gens, lens)


# --------------------------------------------------------------------------
# commands; each returns (document, ok)


def cmd_norm(args):
    f = load_function(args.input)
    ids = [n for n in ("u2", "u3", "u2_dual", "l1", "l2", "linf") if getattr(args, n)] or ["u2"]
    out = {n: _un.norm(f, n).value for n in ids}
    return {"modulus": f.modulus, "norms": out}, True


def cmd_count(args):
    system = _load_system(args)
    if not args.fn:
        raise UsageError("count needs at least one --fn")
    fs = [load_function(s) for s in args.fn]
    if len(fs) == 1:
        fs = fs * system.r
    res = _ls.count_pattern(system, fs, budget=args.budget)
    doc = res.to_json()
    doc.pop("wall_time", None)
    doc["system"] = [list(r) for r in system.coeffs]
    return doc, True


def cmd_bohr(args):
    K = _ints(args.freqs, "--freqs")
    if args.action == "build":
        B = _bohr.build_bohr(args.n, K, args.rho)
        return {"bohr": B.to_json()}, True
    if args.action == "regular":
        B = _bohr.find_regular(args.n, K, args.rho0)
        res = _bohr.is_regular(B)
        return {"bohr": B.to_json(), "regular": res.regular, "worst_eps": res.worst_eps, "worst_slack": res.worst_slack}, res.regular
    B = _bohr.build_bohr(args.n, K, args.rho)
    cov = _bohr.bohr_cover(B)
    return {"bohr": B.to_json(), "cover": cov.to_json(), "report": _bohr.cover_report(B).to_json()}, cov.ok


def cmd_gap(args):
    if args.action == "find-in-bohr":
        B = _bohr.build_bohr(args.n, _ints(args.freqs, "--freqs"), args.rho)
        res = _gap.find_gap_in_bohr(B, d_target=args.d)
        return {
            "bohr": B.to_json(),
            "gap": res.gap.to_json(),
            "target_sigma_d": res.target_sigma_d,
            "target_sigma_2d": res.target_sigma_2d,
            "candidates": res.candidates,
        }, True
    P = _gap_from(args, args.n)
    cov = _gap.gap_cover(P)
    doc = {"gap": P.to_json(), "cover": {"translates": list(cov.translates), "m": cov.m, "bound": cov.bound, "covered": cov.covered}}
    return doc, cov.ok


def cmd_bourgain(args):
    if args.kind == "bohr":
        sys_ = _bg.bohr_family(args.n, _ints(args.freqs, "--freqs"), args.sigma)
    elif args.kind == "gap":
        sys_ = _bg.gap_scaled(_gap_from(args, args.n))
    else:
        sys_ = _bg.trivial_system(args.n)
    reps = [_bg.check_axioms(sys_)] + _bg.dilation_law_reports(sys_)
    sizes = {str(r): sys_.size(r) for r in _bg.default_grid()}
    doc = {"kind": sys_.kind, "d": sys_.d, "sizes": sizes, "reports": [r.to_json() for r in reps]}
    return doc, all(r.passed for r in reps)


def cmd_quad(args):
    N = args.n
    q = _qd.QuadForm.global_form(N, args.a, args.b, args.c)
    if args.action == "rank":
        P = _gap_from(args, N)
        rk = _qd.rank(q, P.members, method=args.method)
        return {"form": q.to_json(), "P": P.to_json(), "rank": rk.to_json()}, True
    if args.action == "dichotomy":
        P = _gap_from(args, N)
        Q = _qd.global_phase_average(_bohr.full_bohr(N), q)
        res = _qd.rank_dichotomy(Q, P, args.alpha)
        return {"form": q.to_json(), "P": P.to_json(), "dichotomy": res.to_json()}, res.ok
    B = _bohr.build_bohr(N, _ints(args.freqs, "--freqs"), args.rho)
    Q = _qd.build_special_average(B, q, args.eps)
    return {"average": Q.to_json()}, True


def cmd_decompose(args):
    f = load_function(args.input)
    if args.structured:
        dec = _dc.structured_decomposition(f, args.delta, budget=args.budget)
    else:
        dec = _dc.matching_pursuit(f, args.delta, family=args.family, budget=args.budget)
    ok = dec.converged and all(r.passed for r in dec.reports if not r.skipped)
    return {"decomposition": dec.to_json()}, ok


def _expand_lemmas(names: list[str]) -> list[str]:
    if names == ["all"]:
        return list(_vf.SUITES)
    return names


def cmd_verify(args):
    suites, all_reps = [], []
    for lem in _expand_lemmas(args.lemma):
        try:
            reps = _vf.run_suite(lem, trials=args.trials, seed=args.seed, N=args.n, negative=args.negative)
        except _vf.UnknownLemma as exc:
            raise UsageError(f"unknown lemma {lem!r}; known: {', '.join(_vf.registered())}") from exc
        all_reps += reps
        summary = _vf.report(reps)
        suites.append({"lemma_id": lem, "instances": [r.to_json() for r in reps], "summary": summary.to_json()["lemmas"], "ok": summary.ok})
    ok = all(s["ok"] for s in suites)
    if args.format == "csv":
        return _vf.report(all_reps).to_csv(), ok
    doc = suites[0] if len(suites) == 1 else {"suites": suites, "ok": ok}
    doc["negative"] = args.negative
    return doc, ok


def cmd_probe(args):
    system = _load_system(args)
    Ns = _ints(args.n, "--n")
    rows = _ls.main_theorem_probe(system, args.family, Ns)
    rows = sorted(rows, key=lambda r: (r.u2, r.N, sorted(r.params.items())))
    top = max((r.count for r in rows), default=0.0)
    doc = {"system": [list(r) for r in system.coeffs], "family": args.family, "max_count": top, "rows": len(rows)}
    if args.bound is not None:
        doc["bound"] = args.bound
    doc["table"] = [r.to_json() for r in rows[: args.limit]] if args.limit else [r.to_json() for r in rows]
    return doc, args.bound is None or top <= args.bound + 1e-9


COMMANDS = {
    "norm": cmd_norm,
    "count": cmd_count,
    "bohr": cmd_bohr,
    "gap": cmd_gap,
    "bourgain": cmd_bourgain,
    "quad": cmd_quad,
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "probe": cmd_probe,
}


# --------------------------------------------------------------------------
# parser


def _add_gap_args(p, required=True):
    p.add_argument("--base", type=int, default=0)
    p.add_argument("--gens", required=required, help="comma-separated generators")
    p.add_argument("--lens", required=required, help="comma-separated lengths")


def _add_system_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--system", help="linear system file")
    g.add_argument("--preset", choices=sorted(PRESETS), default="3ap")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="uniformity-lab",
        description="Exact desk-scale quadratic Fourier analysis on Z_N.",
        epilog=FUNCTION_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("--threads", type=int, default=None, help="worker cap (default: $UNIFORMITY_LAB_THREADS)")
    ap.add_argument("--out", help="write output here instead of stdout")
    # the shared flags are accepted after the subcommand too
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", parents=[common], help="uniformity and L^p norms")
    p.add_argument("--input", required=True)
    for n in ("u2", "u3", "u2_dual", "l1", "l2", "linf"):
        p.add_argument(f"--{n.replace('_', '-')}", dest=n, action="store_true")

    p = sub.add_parser("count", parents=[common], help="E prod f_i(L_i(x)) over Z_N^s")
    _add_system_args(p)
    p.add_argument("--fn", action="append", default=[], help="one per form, or a single one for all")
    p.add_argument("--budget", type=int, default=_ls.DEFAULT_BUDGET)

    p = sub.add_parser("bohr", parents=[common], help="Bohr sets")
    p.add_argument("action", choices=("build", "regular", "cover"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--freqs", default="1")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--rho0", type=float, default=0.5)

    p = sub.add_parser("gap", parents=[common], help="generalized arithmetic progressions")
    p.add_argument("action", choices=("find-in-bohr", "cover"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--freqs", default="1")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--d", type=int, default=1)
    _add_gap_args(p, required=False)

    p = sub.add_parser("bourgain", parents=[common], help="axiom checks for a Bourgain system")
    p.add_argument("--kind", choices=("bohr", "gap", "trivial"), default="bohr")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--freqs", default="1")
    p.add_argument("--sigma", type=float, default=0.5)
    _add_gap_args(p, required=False)

    p = sub.add_parser("quad", parents=[common], help="quadratic rank, rank dichotomy, special averages")
    p.add_argument("action", choices=("rank", "dichotomy", "special-average"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=int, default=1)
    p.add_argument("--b", type=int, default=0)
    p.add_argument("--c", type=int, default=0)
    p.add_argument("--method", choices=("fast", "literal"), default="fast")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--freqs", default="1")
    p.add_argument("--rho", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.1)
    _add_gap_args(p, required=False)

    p = sub.add_parser("decompose", parents=[common], help="quadratic decomposition by pursuit")
    p.add_argument("--input", required=True)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--family", choices=("global", "bohr"), default="global")
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--structured", action="store_true", help="cluster terms by quadratic part")

    p = sub.add_parser("verify", parents=[common], help="run lemma suites")
    p.add_argument("--lemma", action="append", required=True, help="suite id, repeatable, or 'all'")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--negative", action="store_true", help="run the deliberately violated variant")
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("probe", parents=[common], help="tabulate (U2 norm, |count|) over a family")
    _add_system_args(p)
    p.add_argument("--family", default="quadphase", help="quadphase | randpm1:count,seed | one")
    p.add_argument("--n", default="101", help="comma-separated moduli")
    p.add_argument("--bound", type=float, default=None, help="fail if any |count| exceeds this")
    p.add_argument("--limit", type=int, default=0, help="keep only the first rows of the table")
    return ap


def _needs_gap(args) -> bool:
    return (args.command == "gap" and args.action == "cover") or (args.command == "quad" and args.action != "special-average") or (
        args.command == "bourgain" and args.kind == "gap"
    )


def _render(doc) -> str:
    if isinstance(doc, str):
        return doc
    doc = dict(_clean(doc), schema_version=SCHEMA_VERSION)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None:
        parallel.set_threads(args.threads)
    try:
        if _needs_gap(args) and not (args.gens and args.lens):
            raise UsageError(f"{args.command} {getattr(args, 'action', '')} needs --gens and --lens".replace("  ", " "))
        doc, ok = COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError, _ls.BudgetExceeded) as exc:
        print(f"error: {exc}\n\n{FUNCTION_HELP}", file=sys.stderr)
        return 2
    finally:
        if args.threads is not None:
            parallel.set_threads(None)
    text = _render(doc)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
