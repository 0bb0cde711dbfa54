"""
tempodag command-line interface

    tempodag {validate|classify|unroll|faithfulness|discover|simulate} <spec.json> [flags]
    tempodag schema [--report {classify|unroll|faithfulness|discover}]
    tempodag verify [fixtures_dir]

Exit codes: 0 ok, 2 invalid input, 3 cyclic, 4 nothing to do, 5 violations found.
"""

import argparse
import json
import sys
from pathlib import Path

from loguru import logger

from .acyclicity import classify_system, derive_composite_graph
from .config import Settings, configure_logging
from .discovery import audit_faithfulness, discover
from .errors import (
    AlreadyAcyclic,
    BadPartition,
    InvalidArgument,
    NotADag,
    TempoDagError,
    UnresolvableWithMixing,
)
from .export import BatchExporter
from .reporting import (
    REPORT_MODELS,
    classify_document,
    discovery_document,
    faithfulness_document,
    render_classify,
    render_discovery,
    render_faithfulness,
    render_simulation,
    render_unroll,
    report_schema,
    to_json,
    unroll_document,
)
from .scm_oracle import EmpiricalOracle, ExactOracle, sample
from .spec_format import dump_spec, json_schema, load_spec, system_to_spec
from .unroll import apply_unrolling, suggest_unrolling, unroll_at
from .verify import verify_corpus

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CYCLIC = 3
EXIT_NOTHING_TO_DO = 4
EXIT_VIOLATIONS = 5


def exit_code_for(error):
    if isinstance(error, (NotADag, UnresolvableWithMixing)):
        return EXIT_CYCLIC
    if isinstance(error, AlreadyAcyclic):
        return EXIT_NOTHING_TO_DO
    return EXIT_INVALID


def format_diagnostic(error, source, document=None):
    """Render ``<file>:<line>:<col>: <CODE>: <message>``."""
    if "line" in error.details:
        line, col = error.details["line"], error.details["column"]
    elif error.path and document is not None:
        line, col = document.locate(error.path)
    else:
        return f"{source}: {error}"
    return f"{source}:{line}:{col}: {error}"


class _Run:
    """Per-invocation state shared by the command handlers."""

    def __init__(self, args, stdout):
        self.args = args
        self.stdout = stdout
        self.color = Settings.from_env().use_color(stdout)
        self.document = None

    def load(self):
        self.document = load_spec(self.args.spec)
        return self.document

    def emit(self, text):
        self.stdout.write(text)


def cmd_validate(run):
    run.load().build()
    run.emit("OK\n")
    return EXIT_OK


def cmd_classify(run):
    system, _ = run.load().build()
    report = classify_system(system, workers=run.args.workers, allow_mediation=run.args.allow_mediation)
    if run.args.json:
        run.emit(to_json(classify_document(report)))
    else:
        run.emit(render_classify(report, run.color))
    return EXIT_OK if report.composite_dag else EXIT_CYCLIC


def _parse_partition(text):
    try:
        return [[int(t) for t in block.split(",") if t.strip()] for block in text.split("|")]
    except ValueError:
        raise BadPartition(f"cannot read partition {text!r}; expected e.g. '0,6|10'") from None


def cmd_unroll(run):
    args = run.args
    document = run.load()
    system, scm = document.build()
    mediation = args.allow_mediation
    before = derive_composite_graph(system, allow_mediation=mediation)

    if args.auto:
        proposals = suggest_unrolling(system, allow_mediation=mediation)
        result = apply_unrolling(system, proposals)
    elif args.var is None:
        raise InvalidArgument("unroll needs --auto or --var with --at/--partition")
    elif args.at is not None:
        result = unroll_at(system, args.var, args.at)
        proposals = [(args.var, [result.variable(f"{args.var}#{i}").deterministic_times for i in (1, 2)])]
    elif args.partition is not None:
        partition = _parse_partition(args.partition)
        proposals = [(args.var, partition)]
        result = apply_unrolling(system, proposals)
    else:
        raise InvalidArgument("--var needs --at or --partition")

    output = Path(args.out) if args.out else Path(args.spec).with_suffix(".unrolled.json")
    spec = system_to_spec(
        result,
        scm=scm,
        include_joint=document.spec.joint is not None,
        time_unit=document.spec.time_unit,
        processes=document.spec.processes,
    )
    output.write_text(dump_spec(spec), encoding="utf-8")
    logger.info(f"unrolled spec written to {output}")

    after = derive_composite_graph(result, allow_mediation=mediation)
    if args.json:
        run.emit(to_json(unroll_document(before, after, proposals, output)))
    else:
        run.emit(render_unroll(before, after, proposals, output, run.color))
    return EXIT_OK if after.is_dag() else EXIT_CYCLIC


def cmd_faithfulness(run):
    system, scm = run.load().require_scm()
    violations = audit_faithfulness(system, scm, max_conditioning=run.args.max_conditioning)
    if run.args.json:
        run.emit(to_json(faithfulness_document(violations)))
    else:
        run.emit(render_faithfulness(violations, run.color))
    return EXIT_VIOLATIONS if violations else EXIT_OK


def cmd_discover(run):
    args = run.args
    system, scm = run.load().require_scm()
    if args.samples is None or args.exact:
        result = discover(ExactOracle(system, scm), system, mode="exact")
    else:
        batch = sample(system, scm, args.seed, args.samples)
        oracle = EmpiricalOracle(batch, alpha=args.alpha)
        result = discover(oracle, system, mode="empirical")
    if args.json:
        run.emit(to_json(discovery_document(result)))
    else:
        run.emit(render_discovery(result, run.color))
    return EXIT_OK


def cmd_simulate(run):
    args = run.args
    system, scm = run.load().require_scm()
    batch = sample(system, scm, args.seed, args.samples)
    exporter = BatchExporter()
    path, count, summary = exporter.export(batch, args.out, summary=args.summary)
    if args.timeline:
        exporter.export_timeline(batch, args.timeline)
    run.emit(render_simulation(path, count, summary))
    return EXIT_OK


def cmd_schema(run):
    schema = report_schema(run.args.report) if run.args.report else json_schema()
    run.emit(json.dumps(schema, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_verify(run):
    ok = verify_corpus(run.args.fixtures, out=lambda line: run.emit(line + "\n"))
    return EXIT_OK if ok else EXIT_INVALID


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tempodag",
        description="Acyclicity analysis, unrolling and discovery for composite causal variables",
    )
    parser.add_argument("--log-level", default=None, help="loguru level (default: TEMPODAG_LOG_LEVEL or WARNING)")
    commands = parser.add_subparsers(dest="command", required=True)

    def spec_command(name, handler, help_text, json_flag=True):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("spec", help="tempodag/1 spec file")
        if json_flag:
            sub.add_argument("--json", action="store_true", help="machine-readable output")
        sub.set_defaults(handler=handler)
        return sub

    spec_command("validate", cmd_validate, "check a spec file", json_flag=False)

    classify = spec_command("classify", cmd_classify, "classify pairwise acyclicity")
    classify.add_argument("--workers", type=int, default=None, help="threads for per-pair classification")
    classify.add_argument(
        "--allow-mediation", action="store_true", help="keep edges whose only paths run through other variables"
    )

    unroll = spec_command("unroll", cmd_unroll, "split variables in time to remove cycles")
    unroll.add_argument("--auto", action="store_true", help="search the smallest contiguous split")
    unroll.add_argument("--var", help="variable to split")
    unroll.add_argument("--at", type=int, help="split into ticks before / from this tick")
    unroll.add_argument("--partition", help="explicit blocks, e.g. '0,6|10'")
    unroll.add_argument("--out", help="output spec path (default: <spec>.unrolled.json)")
    unroll.add_argument(
        "--allow-mediation", action="store_true", help="keep edges whose only paths run through other variables"
    )

    faithfulness = spec_command("faithfulness", cmd_faithfulness, "audit faithfulness against the exact oracle")
    faithfulness.add_argument("--max-conditioning", type=int, default=None, help="largest conditioning set")

    disc = spec_command("discover", cmd_discover, "PC skeleton and orientation")
    disc.add_argument("--exact", action="store_true", help="use the analytic oracle (default)")
    disc.add_argument("--samples", type=int, default=None, help="use Fisher-z tests on N samples")
    disc.add_argument("--seed", type=int, default=0)
    disc.add_argument("--alpha", type=float, default=0.01)

    simulate = spec_command("simulate", cmd_simulate, "sample realizations to CSV", json_flag=False)
    simulate.add_argument("--samples", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", required=True, help="CSV destination")
    simulate.add_argument("--summary", action="store_true", help="also write <out>_summary.json")
    simulate.add_argument("--timeline", help="also write per-realization atomic timelines")

    schema = commands.add_parser("schema", help="print the JSON schema of the spec format or of a report")
    schema.add_argument(
        "--report", choices=sorted(REPORT_MODELS), help="schema of this command's --json document instead"
    )
    schema.set_defaults(handler=cmd_schema)

    verify = commands.add_parser("verify", help="check the canonical fixture corpus")
    verify.add_argument("fixtures", nargs="?", default=None)
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None, stdout=None):
    """
    Entry point

    Args:
        argv (list): Arguments without the program name
        stdout: Stream for reports (default sys.stdout)

    Returns:
        int: Exit code
    """
    args = build_parser().parse_args(argv)
    source = getattr(args, "spec", "tempodag")
    run = None
    try:
        configure_logging(args.log_level)
        run = _Run(args, stdout or sys.stdout)
        return args.handler(run)
    except TempoDagError as error:
        document = run.document if run is not None else None
        print(format_diagnostic(error, source, document), file=sys.stderr)
        return exit_code_for(error)
    except OSError as error:
        print(f"{source}: {error}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
