"""
Report rendering
Human-readable tables (tabulate) and key-sorted JSON documents for every
command
"""

import json
from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field
from tabulate import tabulate

from .config import FORMAT_VERSION
from .errors import InvalidArgument

GREEN = "\033[32m"
RED = "\033[31m"
BOLD = "\033[1m"
RESET = "\033[0m"


class _Report(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class WitnessedEdge(_Report):
    source: str = Field(alias="from")
    target: str = Field(alias="to")
    witnesses: List[List[str]]


class ClassifiedGraph(_Report):
    variables: List[str]
    edges: List[WitnessedEdge]
    cycles: List[List[str]]


class PairRow(_Report):
    a: str
    b: str
    time_acyclic: bool
    acyclic: bool
    acyclic_joint: bool
    effect_acyclic: bool
    total_effect_acyclic: bool
    cycle_possible: bool
    precedence: str


class Verdicts(_Report):
    time_acyclic: bool
    acyclic: bool
    acyclic_joint: bool
    effect_acyclic: bool
    total_effect_acyclic: bool
    composite_dag: bool


class ClassifyReport(_Report):
    version: Literal[FORMAT_VERSION]
    graph: ClassifiedGraph
    pairs: List[PairRow]
    verdicts: Verdicts


class Proposal(_Report):
    variable: str
    partition: List[List[int]]


class GraphSummary(_Report):
    variables: List[str]
    edges: List[Tuple[str, str]]
    cycles: List[List[str]]
    is_dag: bool


class UnrollReport(_Report):
    version: Literal[FORMAT_VERSION]
    proposals: List[Proposal]
    before: GraphSummary
    after: GraphSummary
    output: str


class Violation(_Report):
    pair: Tuple[str, str]
    conditioning: List[str]
    partial_correlation: float


class FaithfulnessReport(_Report):
    version: Literal[FORMAT_VERSION]
    faithful: bool
    violations: List[Violation]


class SeparatingSet(_Report):
    pair: Tuple[str, str]
    set: List[str]


class PdagSummary(_Report):
    nodes: List[str]
    directed: List[Tuple[str, str]]
    undirected: List[Tuple[str, str]]


class TemporalViolationRow(_Report):
    edge: Tuple[str, str]
    offending_pairs: List[Tuple[List[int], List[int]]]


class DiscoveryReport(_Report):
    version: Literal[FORMAT_VERSION]
    mode: str
    skeleton: List[Tuple[str, str]]
    separating_sets: List[SeparatingSet]
    v_structures: List[Tuple[str, str, str]]
    pdag: PdagSummary
    temporal_violations: List[TemporalViolationRow]


REPORT_MODELS = {
    "classify": ClassifyReport,
    "unroll": UnrollReport,
    "faithfulness": FaithfulnessReport,
    "discover": DiscoveryReport,
}


def report_schema(kind):
    """
    JSON schema of a command's ``--json`` document

    Args:
        kind (str): classify, unroll, faithfulness or discover

    Returns:
        dict: Schema with the wire field names
    """
    try:
        model = REPORT_MODELS[kind]
    except KeyError:
        raise InvalidArgument(f"no report schema for {kind!r}; expected one of {', '.join(REPORT_MODELS)}") from None
    return model.model_json_schema(by_alias=True)


def _checked(model, payload):
    return model.model_validate(payload).model_dump(mode="json", by_alias=True)


def to_json(payload):
    """Stable JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _paint(text, code, color):
    return f"{code}{text}{RESET}" if color else text


def _flag(value, color):
    return _paint("yes", GREEN, color) if value else _paint("no", RED, color)


def _header(title, color):
    return _paint(title, BOLD, color)


def graph_lines(graph, color=False):
    lines = []
    if not graph.edges:
        lines.append("  (no edges)")
    for a, b in graph.edge_list():
        witnesses = graph.edges[(a, b)]
        shortest = min(witnesses, key=len) if witnesses else ()
        via = " -> ".join(str(n) for n in shortest)
        lines.append(f"  {a} -> {b}    [{len(witnesses)} witness path(s); e.g. {via}]")
    for cycle in graph.cycles():
        loop = " -> ".join(cycle + (cycle[0],))
        lines.append(_paint(f"  cycle: {loop}", RED, color))
    return lines


def classify_document(report):
    return _checked(ClassifyReport, {"version": FORMAT_VERSION, **report.to_dict()})


def render_classify(report, color=False):
    rows = [
        [
            f"{p.a}, {p.b}",
            _flag(p.time_acyclic, color),
            _flag(p.acyclic, color),
            _flag(p.acyclic_joint, color),
            _flag(p.effect_acyclic, color),
            _flag(p.total_effect_acyclic, color),
            p.precedence,
        ]
        for p in report.pairs
    ]
    table = tabulate(
        rows,
        headers=["pair", "time-acyclic", "acyclic", "acyclic (joint)", "effect-acyclic", "total effect-acyclic", "precedence"],
        tablefmt="simple",
    )
    lines = [_header("Pairs", color), table, "", _header("Composite graph", color)]
    lines.extend(graph_lines(report.graph, color))
    lines.append("")
    lines.append(_header("Verdicts", color))
    lines.append(tabulate([[k, _flag(v, color)] for k, v in report.verdicts.items()], tablefmt="plain"))
    return "\n".join(lines) + "\n"


def unroll_document(before, after, proposals, output):
    payload = {
        "version": FORMAT_VERSION,
        "proposals": [
            {"variable": name, "partition": [sorted(block) for block in partition]}
            for name, partition in proposals
        ],
        "before": _graph_dict(before),
        "after": _graph_dict(after),
        "output": str(output),
    }
    return _checked(UnrollReport, payload)


def _graph_dict(graph):
    return {
        "variables": sorted(graph.variables),
        "edges": [[a, b] for a, b in graph.edge_list()],
        "cycles": [list(c) for c in graph.cycles()],
        "is_dag": graph.is_dag(),
    }


def render_unroll(before, after, proposals, output, color=False):
    lines = [_header("Split", color)]
    for name, partition in proposals:
        blocks = " | ".join("{" + ",".join(str(t) for t in sorted(block)) + "}" for block in partition)
        lines.append(f"  {name}: {blocks}")
    lines += ["", _header("Before", color), *graph_lines(before, color)]
    lines += ["", _header("After", color), *graph_lines(after, color)]
    lines += ["", f"written to {output}"]
    return "\n".join(lines) + "\n"


def faithfulness_document(violations):
    payload = {
        "version": FORMAT_VERSION,
        "faithful": not violations,
        "violations": [v.to_dict() for v in violations],
    }
    return _checked(FaithfulnessReport, payload)


def render_faithfulness(violations, color=False):
    if not violations:
        return _paint("faithful: no violations", GREEN, color) + "\n"
    rows = [
        [v.a, v.b, "{" + ", ".join(v.conditioning) + "}", f"{v.partial_correlation:.3g}"]
        for v in violations
    ]
    table = tabulate(rows, headers=["a", "b", "given", "partial corr."], tablefmt="simple")
    return _paint(f"{len(violations)} faithfulness violation(s)", RED, color) + "\n" + table + "\n"


def discovery_document(result):
    return _checked(DiscoveryReport, {"version": FORMAT_VERSION, **result.to_dict()})


def render_discovery(result, color=False):
    lines = [_header(f"Skeleton ({result.mode})", color)]
    lines += [f"  {a} - {b}" for a, b in result.skeleton.skeleton_edges()] or ["  (no edges)"]
    lines += ["", _header("Separating sets", color)]
    for pair, members in sorted(result.separating_sets.items(), key=lambda kv: sorted(kv[0])):
        a, b = sorted(pair)
        lines.append(f"  {a}, {b}: {{{', '.join(sorted(members))}}}")
    lines += ["", _header("V-structures", color)]
    lines += [f"  {a} -> {c} <- {b}" for a, c, b in result.v_structures] or ["  (none)"]
    lines += ["", _header("Pdag", color)]
    lines += [f"  {a} -> {b}" for a, b in result.pdag.directed_edges()]
    lines += [f"  {a} - {b}" for a, b in result.pdag.undirected_edges()]
    if not result.pdag.directed and not result.pdag.undirected:
        lines.append("  (empty)")
    lines += ["", _header("Temporal consistency", color)]
    if not result.temporal_violations:
        lines.append(_paint("  every directed edge respects time order", GREEN, color))
    for violation in result.temporal_violations:
        a, b = violation.edge
        pairs = ", ".join(f"{list(s_a)} vs {list(s_b)}" for s_a, s_b in violation.offending_pairs)
        lines.append(_paint(f"  {a} -> {b} points backward in time: {pairs}", RED, color))
    return "\n".join(lines) + "\n"


def render_simulation(path, count, summary=None):
    lines = [f"wrote {count} realization(s) to {path}"]
    if summary:
        rows = [[name, f"{s['mean']:.4g}", f"{s['variance']:.4g}"] for name, s in summary["variables"].items()]
        lines.append(tabulate(rows, headers=["variable", "mean", "variance"], tablefmt="simple"))
    return "\n".join(lines) + "\n"
