"""Command-line entry point: ``persuasionlab <command> [flags]``.

Flags mirror ``ExperimentConfig`` fields and override values read from
``--config``. Exit status is 0 on success, 1 on invalid input or a failed
value check, and 2 when ``--strict`` is set and some trial did not complete.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

import structlog
from pydantic import ValidationError

from persuasionlab import __version__
from persuasionlab.config import LabSettings
from persuasionlab.constants import ProfileMode
from persuasionlab.environment import OracleMode
from persuasionlab.generators import gen_hardness1, gen_hardness2_known, gen_hardness3, gen_random_instance
from persuasionlab.harness import run_experiment, run_oracle_checks
from persuasionlab.logger import setup_logging
from persuasionlab.models import ExperimentConfig, ExperimentMode, InstanceKind
from persuasionlab.persuasion import Instance, compute_opt, load_instance, save_instance

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ABORTED = 2

RUN_COMMANDS = {
    "run-regret": ExperimentMode.REGRET,
    "run-pac": ExperimentMode.PAC,
    "run-pac-known": ExperimentMode.PAC_KNOWN,
    "run-geometry": ExperimentMode.GEOMETRY_ONLY,
}

logger = structlog.get_logger()


def parse_seeds(text: str) -> list[int]:
    """``"3"``, ``"0,4,7"`` or an inclusive range ``"0-19"``."""
    seeds: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep and lo:
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def _add_generator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kind", choices=[k.value for k in InstanceKind if k is not InstanceKind.FILE])
    parser.add_argument("--d", type=int)
    parser.add_argument("--n", type=int)
    parser.add_argument("--bit-cap", type=int)
    parser.add_argument("--which", type=int)
    parser.add_argument("--instance-epsilon", dest="instance_epsilon", help="hardness3 parameter, e.g. 1/8")
    parser.add_argument("--instance-gamma", dest="instance_gamma", help="hardness2_known parameter")
    parser.add_argument("--p", help="hardness1 bit vector, e.g. 1,0")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="persuasionlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    for name, mode in RUN_COMMANDS.items():
        run = commands.add_parser(name, help=f"run the {mode} experiment")
        run.add_argument("--config", type=Path, help="ExperimentConfig JSON file")
        run.add_argument("--instance", type=Path, help="instance JSON file")
        _add_generator_flags(run)
        run.add_argument("--seed", type=int)
        run.add_argument("--seeds", type=parse_seeds)
        run.add_argument("--rounds", type=int)
        run.add_argument("--gamma")
        run.add_argument("--eta")
        run.add_argument("--profile", choices=[m.value for m in ProfileMode])
        run.add_argument("--b-bound", type=int)
        run.add_argument("--safety", type=int)
        run.add_argument("--oracle", choices=[m.value for m in OracleMode])
        run.add_argument("--stride", type=int)
        run.add_argument("--epsilon")
        run.add_argument("--budget", type=int)
        run.add_argument("--out", type=Path)
        run.add_argument("--workers", type=int)
        run.add_argument("--export-transcripts", action="store_true", default=None)
        run.add_argument("--strict", action="store_true", default=None)

    gen = commands.add_parser("gen-instance", help="generate an instance file")
    _add_generator_flags(gen)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", type=Path, help="write here instead of stdout")

    verify = commands.add_parser("verify-instance", help="validate an instance file and print its statistics")
    verify.add_argument("path", type=Path)

    commands.add_parser("oracle-check", help="recompute the values of the lower-bound instance families")
    return parser


def _instance_overrides(args: argparse.Namespace) -> dict[str, Any]:
    source: dict[str, Any] = {}
    if getattr(args, "instance", None) is not None:
        source = {"kind": InstanceKind.FILE.value, "path": str(args.instance)}
    if args.kind is not None:
        source["kind"] = args.kind
    for key, value in (
        ("d", args.d),
        ("n", args.n),
        ("bit_cap", args.bit_cap),
        ("which", args.which),
        ("epsilon", args.instance_epsilon),
        ("gamma", args.instance_gamma),
        ("p", [int(b) for b in args.p.split(",")] if args.p else None),
    ):
        if value is not None:
            source[key] = value
    return source


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file (if any) with the command-line flags."""
    data: dict[str, Any] = json.loads(args.config.read_text()) if args.config else {}
    data["mode"] = RUN_COMMANDS[args.command].value

    instance = _instance_overrides(args)
    if instance:
        data["instance"] = {**data.get("instance", {}), **instance}
    if args.seeds is not None:
        data["seeds"] = args.seeds
    elif args.seed is not None:
        data["seeds"] = [args.seed]

    for key, value in (
        ("rounds", args.rounds),
        ("gamma", args.gamma),
        ("eta", args.eta),
        ("oracle_mode", args.oracle),
        ("out", str(args.out) if args.out else None),
        ("workers", args.workers),
        ("strict", args.strict),
        ("export_transcripts", args.export_transcripts),
    ):
        if value is not None:
            data[key] = value

    learner = dict(data.get("learner", {}))
    for key, value in (("epsilon", args.epsilon), ("oracle_budget", args.budget), ("resolve_stride", args.stride)):
        if value is not None:
            learner[key] = value
    profile = dict(learner.get("profile", {}))
    for key, value in (("mode", args.profile), ("b_bound", args.b_bound), ("safety_factor", args.safety)):
        if value is not None:
            profile[key] = value
    learner["profile"] = profile
    data["learner"] = learner
    return ExperimentConfig.model_validate(data)


def generate(args: argparse.Namespace) -> Instance:
    """Build the instance described by the generator flags."""
    kind = InstanceKind(args.kind or InstanceKind.RANDOM)
    match kind:
        case InstanceKind.RANDOM:
            if args.d is None or args.n is None:
                raise ValueError("random instances need --d and --n")
            return gen_random_instance(args.d, args.n, args.bit_cap or 6, args.seed)
        case InstanceKind.HARDNESS1:
            if args.d is None or not args.p:
                raise ValueError("hardness1 needs --d and --p")
            return gen_hardness1(args.d, [int(b) for b in args.p.split(",")])
        case InstanceKind.HARDNESS3:
            if args.instance_epsilon is None:
                raise ValueError("hardness3 needs --instance-epsilon")
            return gen_hardness3(args.which or 1, args.instance_epsilon)
        case InstanceKind.HARDNESS2_KNOWN:
            if args.instance_gamma is None:
                raise ValueError("hardness2_known needs --instance-gamma")
            return gen_hardness2_known(args.instance_gamma, args.which or 1)
    raise ValueError(f"cannot generate instances of kind {kind}")


def _run(args: argparse.Namespace, settings: LabSettings) -> int:
    try:
        config = build_config(args)
    except (ValidationError, ValueError, OSError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    updates: dict[str, Any] = {}
    if config.workers is None:
        updates["workers"] = settings.workers
    if settings.assertions:
        profile = config.learner.profile.model_copy(update={"assert_vertex_bits": True})
        updates["learner"] = config.learner.model_copy(update={"profile": profile})
    if updates:
        config = config.model_copy(update=updates)

    report = run_experiment(config)
    sys.stdout.write((config.out / "summary.txt").read_text())
    if config.strict and report.any_aborted:
        return EXIT_ABORTED
    return EXIT_OK


def _verify(path: Path) -> int:
    try:
        instance = load_instance(path)
    except (ValidationError, OSError) as exc:
        print(f"invalid instance: {exc}", file=sys.stderr)
        return EXIT_INVALID
    opt, _ = compute_opt(instance)
    print(f"d={instance.d} n={instance.n} B={instance.bit_bound} product_bits={instance.product_bits} OPT={opt}")
    return EXIT_OK


def _oracle_check() -> int:
    checks = run_oracle_checks()
    for check in checks:
        print(f"{'ok  ' if check.ok else 'FAIL'} {check.name}" + ("" if check.ok else f": {check.detail}"))
    return EXIT_OK if all(c.ok for c in checks) else EXIT_INVALID


def main(argv: list[str] | None = None) -> int:
    settings = LabSettings()
    setup_logging(service=settings.log_service, level=settings.log_level, fmt=settings.log_format)
    args = build_parser().parse_args(argv)

    if args.command in RUN_COMMANDS:
        return _run(args, settings)
    if args.command == "gen-instance":
        try:
            instance = generate(args)
        except (ValidationError, ValueError) as exc:
            print(f"cannot generate instance: {exc}", file=sys.stderr)
            return EXIT_INVALID
        if args.out:
            save_instance(instance, args.out)
            logger.info("instance written", path=str(args.out), d=instance.d, n=instance.n)
        else:
            sys.stdout.write(instance.to_json() + "\n")
        return EXIT_OK
    if args.command == "verify-instance":
        return _verify(args.path)
    return _oracle_check()


if __name__ == "__main__":
    sys.exit(main())
