from __future__ import annotations

import argparse
import sys
from typing import NoReturn

from loguru import logger

from blocksys_app import __version__, config
from blocksys_app.errors import BlocksysError, UsageError
from blocksys_app.schemas import FindBlocksResult, RunConfig, SubspaceRead
from blocksys_app.services.block_systems import find_blocks_group_action, find_linear_block_systems
from blocksys_app.services.cipher import CipherSpec
from blocksys_app.services.field_structure import field_appendix
from blocksys_app.services.gf2 import Subspace
from blocksys_app.services.gf2m import FieldSpec
from blocksys_app.services.primitivity import TRACE_MAX_DIM, trace_invariant_subspace, verify_primitivity
from blocksys_app.services.render import emit
from blocksys_app.services.spec_file import load_spec, parse_preset, save_cipher_spec
from blocksys_app.services.trapdoor import run_trapdoor_demo

# --- Exit codes ---
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2
EXIT_BLOCKS_FOUND = 3

LOG_FORMAT = "<level>{level: <8}</level> | {message}"


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad arguments; 2 means INCONCLUSIVE here."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _configure_logging(args: argparse.Namespace) -> None:
    level = config.settings.log_level.upper()
    if getattr(args, "verbose", False):
        level = "DEBUG"
    elif getattr(args, "quiet", False):
        level = "WARNING"
    logger.remove()
    logger.add(sys.stderr, level=level, format=LOG_FORMAT)


def _run_config(args: argparse.Namespace) -> RunConfig:
    """
    Folds per-run flags into the process settings and records them.
    Flags left unset keep the environment defaults.
    """
    s = config.settings
    if args.seed is not None:
        s.seed = args.seed
    if args.budget is not None:
        s.enum_budget = args.budget
    if args.sample_size is not None:
        s.sample_size = args.sample_size
    run = RunConfig(
        command=args.cmd,
        source=getattr(args, "preset", None) or getattr(args, "spec", None),
        seed=s.seed,
        budget=s.enum_budget,
        sample_size=s.sample_size,
        sampled=args.sampled,
        format=args.format,
    )
    logger.debug(f"run config: {run.model_dump()}")
    return run


def _load(args: argparse.Namespace) -> tuple[CipherSpec, Subspace | None]:
    if args.preset and args.spec:
        raise UsageError("give either a spec file or --preset, not both")
    if args.preset:
        return parse_preset(args.preset, config.settings.seed), None
    if args.spec:
        return load_spec(args.spec)
    raise UsageError("a spec file or --preset is required")


# --- Commands ---


def cmd_analyze(args: argparse.Namespace) -> int:
    """
    Checks the sufficient primitivity conditions.
    Exit 0 when certified primitive, 2 when inconclusive.
    """
    run = _run_config(args)
    spec, _ = _load(args)
    report = verify_primitivity(spec, args.s)
    emit(report, run.format)
    return EXIT_OK if report.verdict == "CERTIFIED_PRIMITIVE" else EXIT_INCONCLUSIVE


def cmd_find_blocks(args: argparse.Namespace) -> int:
    """
    Searches for block systems by difference closure, and by the group action
    when the state is small enough. Exit 3 when a nontrivial system exists.
    """
    run = _run_config(args)
    spec, planted = _load(args)
    closure = find_linear_block_systems(spec, sampled=run.sampled)
    reports = [closure]
    agree = None
    if spec.n_b <= config.settings.group_action_bits:
        group = find_blocks_group_action(spec)
        reports.append(group)
        agree = group.exists_nontrivial == closure.exists_nontrivial
        if not agree:
            logger.error("closure and group-action searches disagree")

    traces = []
    if spec.n_b <= 64:
        for s in closure.invariant_subspaces[:8]:
            if s.dim <= TRACE_MAX_DIM:
                traces.append(trace_invariant_subspace(spec, s.to_subspace()))

    recovered = None
    if planted is not None:
        found = [s.to_subspace() for s in closure.invariant_subspaces]
        recovered = any(s.is_subspace_of(planted) for s in found)

    result = FindBlocksResult(
        cipher=spec.name,
        n_b=spec.n_b,
        reports=reports,
        methods_agree=agree,
        traces=traces,
        planted_U=SubspaceRead.from_subspace(planted) if planted is not None else None,
        planted_recovered=recovered,
    )
    emit(result, run.format)
    if agree is False:
        return EXIT_ERROR
    return EXIT_BLOCKS_FOUND if closure.exists_nontrivial else EXIT_OK


def cmd_trapdoor_demo(args: argparse.Namespace) -> int:
    """
    Builds a trapdoor cipher, runs the truncated-differential distinguisher
    against it and a control cipher, then recovers seeded keys coset by coset.
    """
    run = _run_config(args)
    trapdoor, report = run_trapdoor_demo(
        args.bits, args.dim, run.seed, trials=args.trials, pairs=args.pairs
    )
    if args.save:
        save_cipher_spec(args.save, trapdoor.cipher, trapdoor.planted_u)
    emit(report, run.format)
    ok = (
        report.all_keys_recovered
        and report.max_trial_count <= report.trial_bound
        and report.distinguisher_trapdoor == 1.0
    )
    return EXIT_OK if ok else EXIT_ERROR


def cmd_field_appendix(args: argparse.Namespace) -> int:
    """
    Catalogs the inversion-closed subspaces of GF(2^m) and sweeps Hua's identity.
    Exit 0 iff every catalog entry is a subfield.
    """
    run = _run_config(args)
    if not 2 <= args.m <= 8:
        raise UsageError(f"--m must be in 2..8, got {args.m}")
    report = field_appendix(FieldSpec.default(args.m), seed=run.seed)
    emit(report, run.format)
    return EXIT_OK if report.catalog.all_subfields else EXIT_INCONCLUSIVE


# --- Main CLI entrypoint and argument parsing ---


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help=f"Seed for randomized steps (default {config.DEFAULT_SEED})")
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--budget", type=int, help="Subspace enumeration budget")
    common.add_argument("--sampled", action="store_true", help="Allow sampled closures above the exhaustive cap")
    common.add_argument("--sample-size", type=int, help="States sampled per closure step")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("-q", "--quiet", action="store_true")
    return common


def _spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("spec", nargs="?", help="Cipher-spec JSON file")
    p.add_argument("--preset", help="'aes' or 'toy:<n_t>x<m>:<sbox>:<lambda>'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blocksys", description="Imprimitivity analysis of key-alternating ciphers")
    parser.add_argument("--version", action="version", version=f"blocksys {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)
    common = _common()

    p1 = sub.add_parser("analyze", parents=[common], help="Certify primitivity of <T, rho>")
    _spec_args(p1)
    p1.add_argument("--s", type=int, default=2, help="Power s with gamma^s = 1 (default 2)")
    p1.set_defaults(func=cmd_analyze)

    p2 = sub.add_parser("find-blocks", parents=[common], help="Search for block systems")
    _spec_args(p2)
    p2.set_defaults(func=cmd_find_blocks)

    p3 = sub.add_parser("trapdoor", parents=[common], help="Trapdoor cipher demo")
    p3.add_argument("--bits", type=int, required=True, help="State width n_b (<= 16)")
    p3.add_argument("--dim", type=int, help="Planted dimension d (default n_b/2)")
    p3.add_argument("--trials", type=int, default=1, help="Seeded key-recovery runs")
    p3.add_argument("--pairs", type=int, default=10_000, help="Distinguisher pairs")
    p3.add_argument("--save", help="Write the trapdoor cipher spec to this path")
    p3.set_defaults(func=cmd_trapdoor_demo)

    p4 = sub.add_parser("field", help="Finite-field checks")
    field_sub = p4.add_subparsers(dest="field_cmd", required=True)
    p5 = field_sub.add_parser("appendix", parents=[common], help="Inversion-closed subspaces and Hua's identity")
    p5.add_argument("--m", type=int, required=True, help="Extension degree 2..8")
    p5.set_defaults(func=cmd_field_appendix)
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Main entrypoint for the CLI.
    Parses arguments, configures logging and dispatches to the command handler.
    """
    logger.remove()
    logger.add(sys.stderr, level=config.settings.log_level.upper(), format=LOG_FORMAT)
    # flags override settings for this run only
    saved = config.settings
    config.settings = saved.model_copy()
    try:
        args = build_parser().parse_args(sys.argv[1:] if argv is None else argv)
        _configure_logging(args)
        return int(args.func(args))
    except (BlocksysError, FileNotFoundError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR
    finally:
        config.settings = saved


if __name__ == "__main__":
    raise SystemExit(main())
