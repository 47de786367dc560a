"""CLI for netveil: anonymize router configurations while keeping forwarding behaviour."""

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .anonymization import AnonymityParams, KdmaLevel
from .config import CONFIG_FILE, get_reference_dir, load_config, save_config
from .errors import EXIT_ERROR, EXIT_VERIFICATION_FAILED, NetveilError
from .pipeline import Anonymizer, ExpansionMode, RepairMode, RunConfig, run_pipeline
from .repair import IbgpStrategy
from .sampling import SamplerRegistry, SamplingStrategy, sampling_report
from .simulator import compute_fibs, dataplane, dump_fibs
from .snapshot import load_snapshot
from .topology import load_library

logger = logging.getLogger(__name__)


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _fail(payload: dict, code: int) -> None:
    print(json.dumps(payload, indent=2))
    sys.exit(code)


def _choices(enum_cls) -> list[str]:
    return [member.value for member in enum_cls]


def build_run_config(args) -> RunConfig:
    """RunConfig from parsed ``anonymize`` arguments."""
    params = AnonymityParams(
        k_R=args.k_routers,
        k_H=args.k_hosts,
        kdma_level=args.kdma,
        mul=args.mul,
    )
    sampling = SamplingStrategy(kind=args.sampling, seed=args.seed)
    return RunConfig(
        input_dir=args.input,
        output_dir=args.output,
        reference_dir=args.reference_dir,
        mode=args.mode,
        add_routers=args.add_routers,
        params=params,
        anonymizer=args.anonymizer,
        sampling=sampling,
        repair_mode=args.repair,
        ibgp_strategy=args.ibgp_strategy,
        seed=args.seed,
        report_path=args.report,
        filter_mimicry=not args.no_filter_mimicry,
        timings=args.timings,
        solver_timeout_ms=args.solver_timeout_ms,
    )


def _handle_anonymize(args) -> None:
    cfg = build_run_config(args)
    report = run_pipeline(cfg)
    if cfg.report_path is None:
        print(report.to_json(), end="")
    else:
        print(json.dumps({
            "output": str(cfg.output_dir),
            "report": str(cfg.report_path),
            "actual_adds": report.actual_adds,
            "verified": report.verified,
        }, indent=2))
    if not report.verified:
        _fail({
            "error": "anonymized network is not equivalent to the original",
            "type": "VerificationFailed",
            "phase": "verify",
            "missing": len(report.equivalence.missing),
        }, EXIT_VERIFICATION_FAILED)


def _handle_simulate(args) -> None:
    snapshot = load_snapshot(args.input)
    fibs = compute_fibs(snapshot)
    text = dump_fibs(fibs)
    if args.fib_dump is not None:
        args.fib_dump.parent.mkdir(parents=True, exist_ok=True)
        args.fib_dump.write_text(text, encoding="utf-8")
    if args.dataplane:
        print(json.dumps(dataplane(snapshot, fibs).to_dict(), indent=2))
    elif args.fib_dump is None:
        print(text, end="" if text.endswith("\n") else "\n")


def _handle_sample(args) -> None:
    library = load_library(args.reference_dir or get_reference_dir())
    report = sampling_report(library, rate=args.rate, trials=args.trials, seed=args.seed)
    print(json.dumps(report.model_dump(mode="json"), indent=2))


def _handle_config(args) -> None:
    has_changes = args.reference_dir is not None or args.solver_timeout_ms is not None or args.interas_cap is not None
    config = load_config()
    if has_changes:
        if args.reference_dir is not None:
            config["reference_dir"] = str(args.reference_dir)
        if args.solver_timeout_ms is not None:
            config["solver_timeout_ms"] = args.solver_timeout_ms
        if args.interas_cap is not None:
            config["interas_cap"] = args.interas_cap
        save_config(config)
        logger.info(f"Saved {CONFIG_FILE}")
    if args.show or not has_changes:
        print(json.dumps(config, indent=2))


def main() -> None:
    parser = argparse.ArgumentParser(description="netveil: network configuration anonymization")
    parser.add_argument("--version", action="version", version=f"netveil {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logs")
    sub = parser.add_subparsers(dest="command")

    an = sub.add_parser("anonymize", help="Expand, anonymize and repair a snapshot")
    an.add_argument("--input", "-i", type=Path, required=True, help="Snapshot directory (configs/, hosts/)")
    an.add_argument("--output", "-o", type=Path, required=True, help="Output snapshot directory")
    an.add_argument("--mode", choices=_choices(ExpansionMode), default=ExpansionMode.EMBEDDING.value)
    an.add_argument("--add-routers", type=int, default=None,
                    help="Routers to add (default: --mul x original routers)")
    an.add_argument("--mul", type=int, default=1, help="Added routers per original router (default: 1)")
    an.add_argument("--k-routers", type=int, default=2, help="Router anonymity k_R (default: 2)")
    an.add_argument("--k-hosts", type=int, default=2, help="Host anonymity k_H (default: 2)")
    an.add_argument("--kdma", choices=_choices(KdmaLevel), default=KdmaLevel.STRONG.value)
    an.add_argument("--anonymizer", choices=_choices(Anonymizer), default=Anonymizer.GREEDY.value)
    an.add_argument("--sampling", choices=[k.value for k in SamplerRegistry.list_kinds()], default="RW",
                    help="Sampling strategy for sample-connect (default: RW)")
    an.add_argument("--repair", choices=_choices(RepairMode), default=RepairMode.CONSTRAINT.value)
    an.add_argument("--ibgp-strategy", choices=_choices(IbgpStrategy), default=IbgpStrategy.FILTER_NEXTHOP.value)
    an.add_argument("--reference-dir", type=Path, default=None,
                    help="GraphML reference corpus (default: NETVEIL_REFERENCE_DIR, config, bundled)")
    an.add_argument("--seed", type=int, default=0)
    an.add_argument("--report", type=Path, default=None, help="Write the run report here (default: stdout)")
    an.add_argument("--no-filter-mimicry", action="store_true", help="Don't copy real host filters to fake hosts")
    an.add_argument("--timings", action="store_true", help="Record per-phase wall times in the report")
    an.add_argument("--solver-timeout-ms", type=int, default=None)

    sim = sub.add_parser("simulate", help="Compute FIBs and the data plane of a snapshot")
    sim.add_argument("--input", "-i", type=Path, required=True)
    sim.add_argument("--fib-dump", type=Path, default=None, help="Write sorted FIB JSON to this file")
    sim.add_argument("--dataplane", action="store_true", help="Print host-to-host paths and per-pair errors")

    smp = sub.add_parser("sample", help="Compare sampling strategies over a reference corpus")
    smp.add_argument("--reference-dir", type=Path, default=None)
    smp.add_argument("--rate", type=float, default=0.75)
    smp.add_argument("--trials", type=int, default=200)
    smp.add_argument("--seed", type=int, default=0)

    cfg = sub.add_parser("config", help="View or set config")
    cfg.add_argument("--reference-dir", type=Path, default=None)
    cfg.add_argument("--solver-timeout-ms", type=int, default=None)
    cfg.add_argument("--interas-cap", type=int, default=None)
    cfg.add_argument("--show", action="store_true", help="Print the stored config")

    args = parser.parse_args()
    _configure_logging(args.verbose)

    if args.command is None:
        parser.print_help()
        sys.exit(EXIT_ERROR)

    handlers = {
        "anonymize": _handle_anonymize,
        "simulate": _handle_simulate,
        "sample": _handle_sample,
        "config": _handle_config,
    }
    try:
        handlers[args.command](args)
    except NetveilError as e:
        _fail(e.to_dict(), e.exit_code)
    except ValidationError as e:
        _fail({"error": str(e), "type": "ValidationError", "phase": None}, EXIT_ERROR)
    except (FileNotFoundError, ValueError) as e:
        _fail({"error": str(e), "type": type(e).__name__, "phase": None}, EXIT_ERROR)


if __name__ == "__main__":
    main()
