"""``densify`` command line.

Exit codes: 0 on success, 1 when a goal is not proved or a proof or
pipeline stage fails its checks, 2 on usage errors and malformed inputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence
import argparse
import sys

from loguru import logger as log

from .builder import annotate
from .calculus import Derivation, SystemId, check_proof
from .config import LOG_LEVELS, SearchBudget, Settings, setup_logging
from .density import d_rule, translate_proof
from .errors import DensifyError, ParseError, ShapeError, AddressError
from .extraction import entry_template
from .fuzz import admissibility_sweep, fuzz_translation
from .pipeline import DensityGoal, run_pipeline
from .preprocess import preprocess, stage_report
from .proofio import dump_proof, load_proof
from .prover import prove_checked
from .separation import SeparationContext, separate_multi
from .syntax import IdSource, canonical_text, parse_hypersequent

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _parse_args(argv: Optional[Sequence[str]]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="densify", description="Hypersequent proofs and density elimination")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default=None, help="log level (default: $DENSIFY_LOG or error)")
    parser.add_argument("--assert-lemmas", action="store_true", help="check structural postconditions of every stage")
    parser.add_argument("--pure-gl", action="store_true", help="expand generalized branching rules in the output")
    parser.add_argument("--system", default=None, help="gul, giul, gmtl or gimtl (default: from the input, else giul)")
    parser.add_argument("--depth", type=int, default=None, help="search depth of the prover")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="search for a proof of a hypersequent")
    p.add_argument("--goal", required=True)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("check", help="check a proof document")
    p.add_argument("--in", dest="input", type=Path, required=True)

    p = sub.add_parser("d-rule", help="apply the generalized density rule to a closed hypersequent")
    p.add_argument("--goal", required=True)

    p = sub.add_parser("densify", help="eliminate the density rule from a proof of a density premise")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--in", dest="input", type=Path)
    source.add_argument("--goal")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--emit-trace", type=Path, default=None, metavar="DIR")

    p = sub.add_parser("trace", help="write every preprocessing stage of a proof")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, metavar="DIR")

    p = sub.add_parser("separate", help="separate registry entries of a preprocessed proof")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--entries", required=True, help="comma separated registry indexes")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("extract", help="extract the elimination rule of registry entries")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--entries", required=True, help="comma separated registry indexes")
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("translate", help="translate a labeled proof with the generalized density rule")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, default=None)

    p = sub.add_parser("fuzz", help="translate random labeled proofs and report failures")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--steps", type=int, default=8)

    p = sub.add_parser("sweep", help="eliminate density from proofs of random density premises")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=50)

    return parser.parse_args(argv)


def _settings(args: argparse.Namespace) -> Settings:
    overrides = {
        "log_level": args.log_level,
        "assert_lemmas": True if args.assert_lemmas else None,
        "pure_gl": True if args.pure_gl else None,
    }
    if args.depth is not None:
        overrides["search"] = SearchBudget(depth=args.depth)
    return Settings.from_env(**overrides)


def _system(args: argparse.Namespace, stored: Optional[SystemId] = None) -> SystemId:
    if args.system:
        try:
            return SystemId.from_value(args.system)
        except ValueError as e:
            raise UsageError(str(e)) from e
    return stored or SystemId.from_value("giul")


def _entries(text: str) -> list[int]:
    try:
        indexes = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise UsageError(f"Invalid entry list: {text}") from e
    if not indexes:
        raise UsageError("No registry entry given")
    return indexes


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"Cannot read {path}: {e.strerror}") from e


def _load(args: argparse.Namespace, omega: bool = False) -> tuple[SystemId, Derivation]:
    stored, d = load_proof(_read(args.input))
    system = _system(args, stored)
    if omega:
        system = system.as_omega()
    return system, annotate(system, d)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")
    log.info("Wrote {}", out)


def _cmd_prove(args: argparse.Namespace, settings: Settings) -> int:
    system = _system(args)
    goal = parse_hypersequent(args.goal)
    d = prove_checked(system, goal, settings.search)
    if d is None:
        print(f"not proved in {system} within depth {settings.search.max_depth}: {canonical_text(goal)}")
        return EXIT_FAILED
    _emit(dump_proof(d, system), args.out)
    return EXIT_OK


def _cmd_check(args: argparse.Namespace, settings: Settings) -> int:
    system, d = _load(args)
    violation = check_proof(system, d)
    if violation is not None and not system.omega and check_proof(system.as_omega(), d) is None:
        system, violation = system.as_omega(), None
    if violation is not None:
        print(f"invalid: {violation}")
        return EXIT_FAILED
    print(f"ok: {system} proof of {canonical_text(d.conclusion)} ({d.size} nodes)")
    return EXIT_OK


def _cmd_d_rule(args: argparse.Namespace, settings: Settings) -> int:
    print(canonical_text(d_rule(parse_hypersequent(args.goal))))
    return EXIT_OK


def _write_stages(directory: Path, stages: list[tuple[str, Derivation]], system: SystemId) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for k, (name, d) in enumerate(stages):
        (directory / f"{k:02d}_{name}.json").write_text(dump_proof(d), encoding="utf-8")
    log.info("Wrote {} stages of a {} run to {}", len(stages), system, directory)


def _cmd_densify(args: argparse.Namespace, settings: Settings) -> int:
    if args.input is not None:
        system, tau = _load(args)
        violation = check_proof(system, tau)
        if violation is not None:
            print(f"invalid input proof: {violation}")
            return EXIT_FAILED
    else:
        system = _system(args)
        goal = parse_hypersequent(args.goal)
        DensityGoal.from_hypersequent(goal)
        tau = prove_checked(system, goal, settings.search)
        if tau is None:
            print(f"not proved in {system} within depth {settings.search.max_depth}: {canonical_text(goal)}")
            return EXIT_FAILED

    run = run_pipeline(system, tau, settings, IdSource())
    if args.emit_trace is not None:
        _write_stages(args.emit_trace, run.stages(), system)
        (args.emit_trace / "registry.json").write_text(run.trace.registry.to_json(), encoding="utf-8")
        (args.emit_trace / "report.txt").write_text(stage_report(run.trace), encoding="utf-8")
    _emit(dump_proof(run.proof, system), args.out)
    if args.out is not None:
        print(canonical_text(run.proof.conclusion))
    return EXIT_OK


def _preprocessed(args: argparse.Namespace, settings: Settings):
    system, tau = _load(args)
    return preprocess(system, tau, IdSource(), settings.assert_lemmas)


def _cmd_trace(args: argparse.Namespace, settings: Settings) -> int:
    trace = _preprocessed(args, settings)
    _write_stages(args.out, trace.stages(), trace.system)
    (args.out / "registry.json").write_text(trace.registry.to_json(), encoding="utf-8")
    report = stage_report(trace)
    (args.out / "report.txt").write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_OK


def _cmd_separate(args: argparse.Namespace, settings: Settings) -> int:
    indexes = _entries(args.entries)
    trace = _preprocessed(args, settings)
    ctx = SeparationContext.from_trace(trace, settings)
    run = separate_multi(ctx, indexes)
    print(canonical_text(run.result.conclusion))
    if run.pivots:
        print("pivots: " + ", ".join(str(j) for j in run.pivots))
    if run.intersection is not None:
        print(f"split at {list(run.intersection)}: {run.case}")
    if args.out is not None:
        _emit(dump_proof(run.result.derivation, trace.system.as_omega()), args.out)
    return EXIT_OK


def _cmd_extract(args: argparse.Namespace, settings: Settings) -> int:
    indexes = _entries(args.entries)
    trace = _preprocessed(args, settings)
    rule = entry_template(trace.tau_star, trace.registry, indexes, settings.assert_lemmas)
    print(canonical_text(rule.conclusion))
    if args.out is not None:
        _emit(dump_proof(rule.derivation, trace.system.as_omega()), args.out)
    return EXIT_OK


def _cmd_translate(args: argparse.Namespace, settings: Settings) -> int:
    system, d = _load(args, omega=True)
    violation = check_proof(system, d)
    if violation is not None:
        print(f"invalid labeled proof: {violation}")
        return EXIT_FAILED
    out = translate_proof(d)
    _emit(dump_proof(out, system.as_base()), args.out)
    return EXIT_OK


def _cmd_fuzz(args: argparse.Namespace, settings: Settings) -> int:
    system = _system(args)
    failures = fuzz_translation(args.seed, args.count, system, args.steps)
    for failure in failures:
        print(f"#{failure.index}: {failure.reason}")
        print(f"  {canonical_text(failure.proof.conclusion)}")
    print(f"{len(failures)} of {args.count} translations failed")
    return EXIT_FAILED if failures else EXIT_OK


def _cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    budget = settings.search if args.depth is not None else SearchBudget(depth=6)
    report = admissibility_sweep(args.seed, args.count, _system(args), budget)
    for failure in report.failures:
        print(f"#{failure.index}: {failure.reason}")
        print(f"  {canonical_text(failure.proof.conclusion)}")
    print(
        f"{report.system}: {report.proved} of {report.tried} premises proved, "
        f"{report.confirmed} conclusions re-proved, {len(report.failures)} failed"
    )
    return EXIT_FAILED if report.failures else EXIT_OK



_COMMANDS = {
    "prove": _cmd_prove,
    "check": _cmd_check,
    "d-rule": _cmd_d_rule,
    "densify": _cmd_densify,
    "trace": _cmd_trace,
    "separate": _cmd_separate,
    "extract": _cmd_extract,
    "translate": _cmd_translate,
    "fuzz": _cmd_fuzz,
    "sweep": _cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        settings = _settings(args)
    except ValueError as e:
        print(f"densify: {e}", file=sys.stderr)
        return EXIT_USAGE
    setup_logging(settings.log_level)

    try:
        return _COMMANDS[args.command](args, settings)
    except UsageError as e:
        print(f"densify: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ShapeError, AddressError) as e:
        print(f"densify: invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DensifyError as e:
        log.info("{} failed: {}", args.command, e)
        print(f"densify: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
