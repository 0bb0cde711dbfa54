"""
tempodag/1 system spec files
Pydantic models for the JSON document, loading with line/column
diagnostics, conversion to a VariableSystem and LinearScm, and
serialization back to canonical JSON
"""

import json
from contextlib import contextmanager
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Tuple, Union

from loguru import logger
from pydantic import AfterValidator, BaseModel, ConfigDict, Field, ValidationError

from .atomic_graph import AtomicDag, AtomicNode, time_order_key, validate_edge
from .composite import (
    AggregationKind,
    AggregationSpec,
    CompositeVariable,
    build_system,
    make_mixture,
    make_selection,
)
from .config import FORMAT_VERSION
from .errors import (
    ArityMismatch,
    DuplicateNode,
    DuplicateVariable,
    InvalidProcessName,
    InvalidScm,
    MissingScm,
    ParseError,
    ProcessTimeCollision,
    TempoDagError,
    UnknownAtomicNode,
)
from .scm_oracle import LinearScm

BLOCK_KINDS = ("selection", "mixture", "aggregate")


def _decimal_string(value):
    try:
        number = Decimal(value)
    except InvalidOperation:
        raise ValueError(f"probability {value!r} is not a decimal string") from None
    if not number.is_finite():
        raise ValueError(f"probability {value!r} is not finite")
    return value


Probability = Annotated[str, AfterValidator(_decimal_string)]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ProcessSpec(_Model):
    name: str
    unit: Optional[str] = None


class AtomicSpec(_Model):
    nodes: List[str]
    edges: List[Tuple[str, str]] = []


class CoefficientSpec(_Model):
    source: str = Field(alias="from")
    target: str = Field(alias="to")
    value: float


class ScmSpec(_Model):
    coefficients: List[CoefficientSpec] = []
    noise_variances: dict[str, float]


class SelectionBlock(_Model):
    kind: Literal["selection"]
    name: str
    process: Optional[str] = None
    possible_times: Optional[List[int]] = None
    times: List[int]


class SupportEntry(_Model):
    times: List[int]
    probability: Probability


class MixtureBlock(_Model):
    kind: Literal["mixture"]
    name: str
    process: Optional[str] = None
    possible_times: Optional[List[int]] = None
    support: List[SupportEntry]


class AggregateBlock(_Model):
    kind: Literal["aggregate"]
    name: str
    process: Optional[str] = None
    possible_times: Optional[List[int]] = None
    times: List[int]
    aggregation: Literal["identity", "mean", "weighted_sum"] = "mean"
    weights: Optional[List[float]] = None


VariableBlock = Annotated[
    Union[SelectionBlock, MixtureBlock, AggregateBlock], Field(discriminator="kind")
]


class JointEntrySpec(_Model):
    assignment: dict[str, List[int]]
    probability: Probability


class SystemSpec(_Model):
    version: Literal["tempodag/1"]
    time_unit: Optional[str] = None
    processes: List[ProcessSpec] = []
    atomic: AtomicSpec
    scm: Optional[ScmSpec] = None
    variables: List[VariableBlock]
    joint: Optional[List[JointEntrySpec]] = None


def json_schema():
    """JSON schema of the tempodag/1 format."""
    return SystemSpec.model_json_schema(by_alias=True)


def _position_index(text):
    """Map every JSON path (tuple of keys/indices) to the offset where its value starts."""
    decoder = json.JSONDecoder()
    positions = {}

    def skip(i):
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def value(i, path):
        i = skip(i)
        positions[path] = i
        if text[i] == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = json.decoder.scanstring(text, skip(i) + 1)
                i = skip(i) + 1  # ':'
                i = skip(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if text[i] == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            index = 0
            while True:
                i = skip(value(i, path + (index,)))
                index += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return positions


def _line_col(text, offset):
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _clean_loc(loc):
    # drop discriminator tags pydantic inserts after a list index
    cleaned = []
    for item in loc:
        if item in BLOCK_KINDS and cleaned and isinstance(cleaned[-1], int):
            continue
        cleaned.append(item)
    return tuple(cleaned)


@contextmanager
def _located(*path):
    try:
        yield
    except TempoDagError as error:
        raise error.at(path)


@dataclass
class SpecDocument:
    """A parsed spec file together with its raw text, for anchored diagnostics."""

    spec: SystemSpec
    text: str = ""
    source: str = "<string>"
    _positions: dict = field(default=None, repr=False)

    def locate(self, path):
        """
        Line and column of the deepest known prefix of a JSON path

        Returns:
            tuple: (line, column), both 1-based
        """
        if not self.text:
            return 1, 1
        if self._positions is None:
            self._positions = _position_index(self.text)
        path = tuple(path)
        while path not in self._positions:
            path = path[:-1]
        return _line_col(self.text, self._positions[path])

    def build(self):
        """
        Returns:
            tuple: (VariableSystem, LinearScm or None)
        """
        return spec_to_system(self.spec)

    def require_scm(self):
        system, scm = self.build()
        if scm is None:
            raise MissingScm("this command needs an 'scm' block in the spec")
        return system, scm


def parse_spec(text, source="<string>"):
    """
    Parse and schema-check a spec document

    Raises:
        ParseError: malformed JSON or schema violation, with line/column
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as error:
        raise ParseError(error.msg, line=error.lineno, column=error.colno) from None
    document = SpecDocument(None, text, source)
    try:
        document.spec = SystemSpec.model_validate(raw)
    except ValidationError as error:
        first = error.errors()[0]
        path = _clean_loc(first["loc"])
        line, col = document.locate(path)
        raise ParseError(first["msg"], path=path, line=line, column=col) from None
    return document


def load_spec(path):
    """Read a spec file from disk."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ParseError(f"cannot read {path}: {error.strerror}") from None
    document = parse_spec(text, source=str(path))
    logger.info(f"loaded spec {path}")
    return document


def dump_spec(spec):
    """Canonical JSON text: model field order, two-space indent, trailing newline."""
    payload = spec.model_dump(mode="json", by_alias=True, exclude_none=True)
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


def _aggregation(block):
    kind = AggregationKind(block.aggregation)
    return AggregationSpec(kind, tuple(float(w) for w in block.weights or ()))


def _variable(block):
    process = block.process or block.name
    if isinstance(block, SelectionBlock):
        if len(block.times) != 1:
            raise ArityMismatch(f"{block.name}: a selection picks exactly one time point")
        possible = block.possible_times or block.times
        return make_selection(process, possible, block.times[0], name=block.name)
    if isinstance(block, MixtureBlock):
        weighted = [(set(entry.times), float(Decimal(entry.probability))) for entry in block.support]
        possible = block.possible_times or sorted({t for entry in block.support for t in entry.times})
        return make_mixture(process, possible, weighted, name=block.name)
    return CompositeVariable(
        name=block.name,
        process=process,
        possible_times=tuple(block.possible_times or block.times),
        arity=len(block.times),
        marginal_support=((frozenset(block.times), 1.0),),
        aggregation=_aggregation(block),
        kind="aggregate",
    )


def _atomic(spec):
    processes = {p.name for p in spec.processes}
    nodes = []
    seen = set()
    for index, label in enumerate(spec.atomic.nodes):
        with _located("atomic", "nodes", index):
            node = AtomicNode.parse(label)
            if processes and node.process not in processes:
                raise InvalidProcessName(f"process {node.process!r} is not declared")
            if node in seen:
                raise DuplicateNode(f"node {node} listed twice")
        seen.add(node)
        nodes.append(node)
    edges = []
    for index, (source, target) in enumerate(spec.atomic.edges):
        with _located("atomic", "edges", index):
            edge = (AtomicNode.parse(source), AtomicNode.parse(target))
            validate_edge(seen, *edge)
        edges.append(edge)
    return AtomicDag(nodes, edges)


def _scm(spec, dag):
    coefficients = {}
    for index, entry in enumerate(spec.scm.coefficients):
        with _located("scm", "coefficients", index):
            edge = (AtomicNode.parse(entry.source), AtomicNode.parse(entry.target))
            if edge in coefficients:
                raise InvalidScm(f"coefficient for {entry.source}->{entry.target} given twice")
        coefficients[edge] = entry.value
    variances = {}
    for label, variance in spec.scm.noise_variances.items():
        with _located("scm", "noise_variances", label):
            variances[AtomicNode.parse(label)] = variance
    with _located("scm"):
        return LinearScm(dag, coefficients, variances)


def spec_to_system(spec):
    """
    Build the validated system (and model, if present) described by a spec

    Every constructor error carries the JSON path of the offending element.

    Returns:
        tuple: (VariableSystem, LinearScm or None)
    """
    dag = _atomic(spec)
    variables = []
    for index, block in enumerate(spec.variables):
        with _located("variables", index):
            variables.append(_variable(block))

    joint = None
    if spec.joint is not None:
        joint = [
            ({name: frozenset(times) for name, times in entry.assignment.items()}, float(Decimal(entry.probability)))
            for entry in spec.joint
        ]
    try:
        system = build_system(dag, variables, joint)
    except (DuplicateVariable, UnknownAtomicNode, ProcessTimeCollision) as error:
        raise error.at(("variables",))
    except TempoDagError as error:
        raise error.at(("joint",))

    scm = _scm(spec, dag) if spec.scm is not None else None
    return system, scm


def _probability(value):
    return repr(float(value))


def _block(variable):
    times = sorted(variable.referenced_times)
    possible = list(variable.possible_times)
    possible = None if possible == times else possible
    if variable.kind == "mixture":
        return MixtureBlock(
            kind="mixture",
            name=variable.name,
            process=variable.process,
            possible_times=possible,
            support=[
                SupportEntry(times=sorted(subset), probability=_probability(p))
                for subset, p in sorted(variable.marginal_support, key=lambda sp: sorted(sp[0]))
            ],
        )
    if variable.kind == "selection":
        return SelectionBlock(
            kind="selection", name=variable.name, process=variable.process, possible_times=possible, times=times
        )
    aggregation = variable.aggregation
    return AggregateBlock(
        kind="aggregate",
        name=variable.name,
        process=variable.process,
        possible_times=possible,
        times=times,
        aggregation=aggregation.kind.value,
        weights=list(aggregation.weights) if aggregation.kind is AggregationKind.WEIGHTED_SUM else None,
    )


def system_to_spec(system, scm=None, include_joint=True, time_unit=None, processes=()):
    """
    Serialize a system (e.g. an unrolled one) back into a SystemSpec

    Args:
        system (VariableSystem): The system
        scm (LinearScm, optional): Structural model to embed
        include_joint (bool): Write the joint table explicitly
        time_unit (str, optional): Tick label
        processes (iterable): ProcessSpec entries to carry over

    Returns:
        SystemSpec: Canonical spec
    """
    nodes = sorted(system.atomic.nodes, key=time_order_key)
    edges = sorted(system.atomic.edges, key=lambda e: (time_order_key(e[0]), time_order_key(e[1])))
    scm_spec = None
    if scm is not None:
        scm_spec = ScmSpec(
            coefficients=[
                CoefficientSpec(source=str(s), target=str(t), value=scm.coefficients[(s, t)]) for s, t in edges
            ],
            noise_variances={str(node): scm.noise_variances[node] for node in nodes},
        )
    joint = None
    if include_joint:
        joint = [
            JointEntrySpec(
                assignment={name: sorted(subset) for name, subset in entry.assignment},
                probability=_probability(entry.probability),
            )
            for entry in system.joint
        ]
    return SystemSpec(
        version=FORMAT_VERSION,
        time_unit=time_unit,
        processes=list(processes),
        atomic=AtomicSpec(nodes=[str(n) for n in nodes], edges=[(str(s), str(t)) for s, t in edges]),
        scm=scm_spec,
        variables=[_block(v) for v in system.variables],
        joint=joint,
    )

