# src/caterlab/main.py

import argparse
import csv
import logging
import sys
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from caterlab.config import Settings, configure_logging
from caterlab.cyclic_core import (
    Permutation,
    PositiveTuple,
    cater_C,
    cater_C_lower,
    cater_C_upper,
    perm_functional,
)
from caterlab.errors import CaterlabError, InputParseError
from caterlab.explorer.constants import epsilon_constant, remark42_tuple, self_power_constant
from caterlab.explorer.limits import FunctionSpec, convergence_report
from caterlab.explorer.search import TARGET_ALIASES, SearchConfig, SearchFinding, search_with_stats
from caterlab.lemma_suite import BATTERIES, infimum_convergence, run_battery, self_power_minimum
from caterlab.rearrangement import (
    brute_force_scan,
    chain_property_battery,
    exhaustive_chain_battery,
    sort_to_reverse,
    swap_chain_battery,
    swap_inequality_battery,
    verify_chain,
)
from caterlab.reports import BatteryResult, RunManifest, build_document, dumps, write_csv

logger = logging.getLogger("caterlab.main")

DEFAULT_SEED = 0
WHICH = ("C", "C_upper", "C_lower", "F", "chain")
REARRANGEMENT_BATTERIES = ("swap_inequality", "swap_chain", "exhaustive_chain", "chain_property")
# tuple sizes scanned over all n! assignments, and sampled above that
EXHAUSTIVE_SIZES = range(2, 8)
PROPERTY_SIZES = range(8, 13)
PROPERTY_TUPLES = 10


@dataclass
class CommandOutput:
    """Document payload plus the flat table used by --format csv."""

    payload: Dict[str, Any]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    fieldnames: Sequence[str] = ()
    seed: Optional[int] = None


#function to parse a comma separated list of numbers
def parse_numbers(text: str, cast: Callable[[str], Any] = float, what: str = "tuple") -> List[Any]:
    """Parse '1,2,3' into numbers; anything else is an InputParseError."""
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(p == "" for p in parts):
        raise InputParseError(f"empty entry in {what} {text!r}", {"text": text})
    try:
        return [cast(p) for p in parts]
    except ValueError:
        raise InputParseError(f"cannot parse {what} {text!r}", {"text": text}) from None


def read_tuple_file(path: str) -> List[List[float]]:
    """One tuple per CSV line; blank lines are skipped."""
    try:
        with open(path, newline="") as handle:
            lines = [row for row in csv.reader(handle) if any(cell.strip() for cell in row)]
    except OSError as exc:
        raise InputParseError(f"cannot read tuple file {path!r}: {exc.strerror}", {"path": path}) from None
    if not lines:
        raise InputParseError(f"tuple file {path!r} holds no tuples", {"path": path})
    return [parse_numbers(",".join(row)) for row in lines]


def load_tuples(args: argparse.Namespace) -> List[PositiveTuple]:
    if args.tuple is not None:
        return [PositiveTuple(tuple(parse_numbers(args.tuple)))]
    if args.tuple_file is not None:
        return [PositiveTuple(tuple(values)) for values in read_tuple_file(args.tuple_file)]
    return [remark42_tuple(args.remark42)]


#function to evaluate the cyclic functions on every input tuple
def cmd_eval(args: argparse.Namespace, settings: Settings) -> CommandOutput:
    results, rows = [], []
    perm = Permutation(tuple(parse_numbers(args.perm, int, "permutation"))) if args.perm else None
    if args.which == "F" and perm is None:
        raise InputParseError("--which F needs --perm", {"which": args.which})
    for a in load_tuples(args):
        if args.which == "chain":
            lower_report, upper_report = verify_chain(a, band=settings.band)
            result = {
                "tuple": a.to_dict(),
                "lower": cater_C_lower(a),
                "C": cater_C(a),
                "upper": cater_C_upper(a),
                "reports": [lower_report.to_dict(), upper_report.to_dict()],
            }
            rows.append({
                "tuple": list(a.values),
                "lower": result["lower"],
                "C": result["C"],
                "upper": result["upper"],
                "lower_verdict": lower_report.verdict,
                "upper_verdict": upper_report.verdict,
                "hypothesis_H": a.hypothesis_H,
            })
        else:
            if args.which == "F":
                value = perm_functional(a, perm)
            else:
                value = {"C": cater_C, "C_upper": cater_C_upper, "C_lower": cater_C_lower}[args.which](a)
            result = {"tuple": a.to_dict(), "which": args.which, "value": value}
            rows.append({"tuple": list(a.values), "which": args.which, "value": value})
        results.append(result)
    fieldnames = (
        ["tuple", "lower", "C", "upper", "lower_verdict", "upper_verdict", "hypothesis_H"]
        if args.which == "chain"
        else ["tuple", "which", "value"]
    )
    return CommandOutput({"results": results}, rows, fieldnames)


def cmd_oracle(args: argparse.Namespace, settings: Settings) -> CommandOutput:
    """Exhaustive scan of every tuple, plus the swap chain trace under the hypothesis."""
    results, rows = [], []
    n_cap = args.n_cap if args.n_cap is not None else settings.scan_n_cap
    for a in load_tuples(args):
        scan = brute_force_scan(a, n_cap=n_cap, band=settings.band, workers=settings.workers)
        chain = sort_to_reverse(a, Permutation.shift(a.n), band=settings.band) if a.hypothesis_H else None
        results.append({"scan": scan.to_dict(), "chain": chain.to_dict() if chain else None})
        rows.append({
            "tuple": list(a.values),
            "count": scan.count,
            "min_value": scan.min_value,
            "min_perm": list(scan.min_perm.map),
            "max_value": scan.max_value,
            "max_perm": list(scan.max_perm.map),
            "chain_steps": len(chain.steps) if chain else None,
        })
    fieldnames = ["tuple", "count", "min_value", "min_perm", "max_value", "max_perm", "chain_steps"]
    return CommandOutput({"results": results}, rows, fieldnames)


#function to print one finding as a JSON line on stderr while the search runs
def _stream_finding(finding: SearchFinding) -> None:
    print(dumps(finding.to_dict(), indent=None), file=sys.stderr, flush=True)


def cmd_search(args: argparse.Namespace, settings: Settings) -> CommandOutput:
    bounds = parse_numbers(args.range, float, "range") if args.range else [1e-3, 2.0]
    if len(bounds) != 2:
        raise InputParseError(f"--range takes lo,hi, got {args.range!r}", {"range": args.range})
    lo, hi = bounds
    cfg = SearchConfig(
        n=args.n,
        region=args.region,
        samples=args.samples,
        seed=args.seed,
        value_range=(lo, hi),
        target=args.target,
    )
    on_finding = _stream_finding if args.stream else None
    outcome = search_with_stats(
        cfg, band=settings.band, workers=settings.workers, dps=settings.recheck_dps, on_finding=on_finding
    )
    rows = [f.to_dict() for f in outcome.findings]
    fieldnames = ["sample_index", "tuple", "margin", "recheck_margin", "hypothesis_H", "seed"]
    return CommandOutput(outcome.to_dict(), rows, fieldnames, seed=cfg.seed)


def cmd_constants(args: argparse.Namespace, settings: Settings) -> CommandOutput:
    constants = [epsilon_constant(settings.recheck_dps), self_power_constant(settings.recheck_dps)]
    fieldnames = ["name", "value", "residual", "printed_digits", "printed_distance"]
    return CommandOutput({"constants": constants}, constants, fieldnames)


def cmd_limit(args: argparse.Namespace, settings: Settings) -> CommandOutput:
    f = FunctionSpec.parse(args.f)
    n_list = parse_numbers(args.n, int, "n list")
    report = convergence_report(f, n_list, band=settings.band, tol=args.tol, panel_budget=settings.quad_panel_budget)
    rows = [row.to_dict() for row in report.rows]
    fieldnames = ["n", "riemann_mean", "upper_riemann_mean", "integral_mean", "gap", "slack"]
    return CommandOutput({"convergence": report.to_dict()}, rows, fieldnames)


def _battery_results(name: str, args: argparse.Namespace, seed: int, settings: Settings) -> List[BatteryResult]:
    band = settings.band
    if name == "swap_inequality":
        return [swap_inequality_battery(args.samples, seed, band=band)]
    if name == "swap_chain":
        return [swap_chain_battery(args.samples, seed, band=band)]
    if name == "exhaustive_chain":
        return [exhaustive_chain_battery(n, args.tuples, seed, band=band, workers=settings.workers) for n in EXHAUSTIVE_SIZES]
    if name == "chain_property":
        perms = max(args.samples // PROPERTY_TUPLES, 1)
        return [chain_property_battery(n, PROPERTY_TUPLES, perms, seed, band=band) for n in PROPERTY_SIZES]
    return [run_battery(name, args.samples, seed, band=band)]


def cmd_lemmas(args: argparse.Namespace, settings: Settings) -> CommandOutput:
    """Run the sampled property batteries, the infimum sequences and the t^t minimum."""
    seed = args.seed
    if seed is None:
        logger.warning("no --seed given, using %d", DEFAULT_SEED)
        seed = DEFAULT_SEED
    names = args.battery or list(BATTERIES) + list(REARRANGEMENT_BATTERIES)
    batteries = []
    for name in names:
        batteries.extend(result.to_dict() for result in _battery_results(name, args, seed, settings))
    infima = [infimum_convergence(m, parity) for m in (1, 2, 3) for parity in ("even", "odd")]
    payload = {"batteries": batteries, "infima": infima, "self_power_minimum": self_power_minimum(band=settings.band)}
    fieldnames = ["name", "samples", "seed", "holds", "equality", "violated", "mismatched_equality", "worst_margin", "ok"]
    return CommandOutput(payload, batteries, fieldnames, seed=seed)


COMMANDS: Dict[str, Callable[[argparse.Namespace, Settings], CommandOutput]] = {
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "search": cmd_search,
    "constants": cmd_constants,
    "limit": cmd_limit,
    "lemmas": cmd_lemmas,
}


def _add_tuple_source(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--tuple", help="comma separated positive reals, e.g. 1,2,3")
    source.add_argument("--tuple-file", help="CSV file with one tuple per line")
    source.add_argument("--remark42", type=int, metavar="N", help="the epsilon construction a_i = eps + (i-1)/N")


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser with one subcommand per workflow."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json", help="output format (default: json)")
    common.add_argument("--debug", action="store_true", help="debug logging on stderr")
    common.add_argument("--abs-tol", type=float, help="absolute tolerance of the verdict band")
    common.add_argument("--rel-tol", type=float, help="relative tolerance of the verdict band")
    common.add_argument("--workers", type=int, help="worker processes (default: CATERLAB_WORKERS or cpu count)")

    parser = argparse.ArgumentParser(prog="caterlab", description="Numerical verification of cyclic power-sum inequalities")
    commands = parser.add_subparsers(dest="command", required=True)

    p_eval = commands.add_parser("eval", parents=[common], help="evaluate C, C_upper, C_lower, F or the whole chain")
    _add_tuple_source(p_eval)
    p_eval.add_argument("--which", choices=WHICH, default="chain")
    p_eval.add_argument("--perm", help="exponent assignment for --which F, e.g. 2,3,1")

    p_oracle = commands.add_parser("oracle", parents=[common], help="exhaustive permutation scan and swap chain")
    _add_tuple_source(p_oracle)
    p_oracle.add_argument("--n-cap", type=int, help="largest n to enumerate (default: 8)")

    p_search = commands.add_parser("search", parents=[common], help="seeded counterexample search")
    p_search.add_argument("--target", choices=sorted(TARGET_ALIASES), default="lower")
    p_search.add_argument(
        "--region", choices=("hypothesis-fail", "hypothesis-hold", "unconstrained"), default="unconstrained"
    )
    p_search.add_argument("--n", type=int, default=3)
    p_search.add_argument("--samples", type=int, default=10_000)
    p_search.add_argument("--seed", type=int, required=True)
    p_search.add_argument("--range", help="sampling range lo,hi (default: 0.001,2)")
    p_search.add_argument("--stream", action="store_true", help="also print each finding as a JSON line on stderr as it is verified")

    commands.add_parser("constants", parents=[common], help="epsilon and e^(-1/e) with residuals")

    p_limit = commands.add_parser("limit", parents=[common], help="Riemann means against the integral of f^f")
    p_limit.add_argument("--f", required=True, help="const:c | affine:c0,c1 | power:c0,c1,p | exp_scaled:c0,c1")
    p_limit.add_argument("--n", default="10,100,1000,10000", help="ascending n list")
    p_limit.add_argument("--tol", type=float, default=1e-10, help="quadrature tolerance")

    p_lemmas = commands.add_parser("lemmas", parents=[common], help="sampled property batteries")
    p_lemmas.add_argument(
        "--battery", action="append", choices=sorted(BATTERIES) + list(REARRANGEMENT_BATTERIES),
        help="battery to run; repeat for several (default: all)",
    )
    p_lemmas.add_argument("--samples", type=int, default=10_000)
    p_lemmas.add_argument("--tuples", type=int, default=1000, help="tuples per n for the exhaustive chain scan")
    p_lemmas.add_argument("--seed", type=int)
    return parser


def _config_snapshot(args: argparse.Namespace, settings: Optional[Settings]) -> Dict[str, Any]:
    snapshot = {key: value for key, value in vars(args).items() if key not in ("debug", "format")}
    if settings is not None:
        snapshot["settings"] = asdict(settings)
    return snapshot


#main function that runs one subcommand and prints its document
def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line and return the process exit code.

    Documents go to stdout, logs to stderr. Every CaterlabError becomes a
    JSON error document and the exit code of its class.
    """
    args = create_parser().parse_args(argv)
    configure_logging(args.debug)
    settings = None
    try:
        settings = Settings.from_env().with_overrides(args.abs_tol, args.rel_tol, args.workers)
        output = COMMANDS[args.command](args, settings)
    except CaterlabError as exc:
        return _fail(args, settings, exc)
    except Exception as exc:
        logger.exception("unexpected failure")
        return _fail(args, settings, CaterlabError(f"{type(exc).__name__}: {exc}"))

    manifest = RunManifest(command=args.command, config=_config_snapshot(args, settings), seed=output.seed)
    if args.format == "csv":
        write_csv(output.rows, output.fieldnames, sys.stdout, manifest=manifest)
    else:
        print(dumps(build_document(manifest, output.payload)))
    return 0


def _fail(args: argparse.Namespace, settings: Optional[Settings], exc: CaterlabError) -> int:
    logger.error("%s: %s", exc.kind, exc.message)
    manifest = RunManifest(
        command=args.command, config=_config_snapshot(args, settings), seed=getattr(args, "seed", None)
    )
    print(dumps(build_document(manifest, {"error": exc.to_dict()})))
    return exc.exit_code
