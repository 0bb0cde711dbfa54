"""
Constraint-based discovery over composite variables
d-separation on the derived composite DAG, faithfulness auditing against
the exact oracle, and a PC skeleton with v-structure and Meek orientation
"""

import itertools
from dataclasses import dataclass, field

import networkx as nx
from loguru import logger

from .acyclicity import CompositeGraph, derive_composite_graph
from .composite import pairwise_support
from .config import AUDIT_VARIABLE_CAP
from .errors import (
    AuditTooLarge,
    ConflictingOrientations,
    InvalidArgument,
    InvalidQuery,
    NotADag,
    SameVariable,
    UnknownVariable,
)
from .scm_oracle import ExactOracle

# networkx < 3.3 only ships the deprecated name
_is_d_separator = getattr(nx, "is_d_separator", None) or nx.d_separated


def _edge(a, b):
    return frozenset((a, b))


@dataclass(frozen=True)
class Pdag:
    """
    Partially directed acyclic graph

    ``directed`` holds (tail, head) pairs, ``undirected`` holds two-element
    frozensets. A pair is never both directed and undirected.
    """

    nodes: tuple
    directed: frozenset = frozenset()
    undirected: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes)))
        object.__setattr__(self, "directed", frozenset(tuple(e) for e in self.directed))
        object.__setattr__(self, "undirected", frozenset(_edge(*e) for e in self.undirected))
        known = set(self.nodes)
        for a, b in self.directed:
            if a not in known or b not in known:
                raise UnknownVariable(f"edge {a}->{b} joins unknown nodes")
            if _edge(a, b) in self.undirected:
                raise InvalidArgument(f"{a} and {b} are joined both directed and undirected")
        for pair in self.undirected:
            if len(pair) != 2 or not pair <= known:
                raise InvalidArgument(f"undirected edge {sorted(pair)} is not a pair of known nodes")
        graph = nx.DiGraph(list(self.directed))
        if not nx.is_directed_acyclic_graph(graph):
            raise NotADag("directed part of the pdag has a directed cycle")

    def adjacent(self, a, b):
        return (a, b) in self.directed or (b, a) in self.directed or _edge(a, b) in self.undirected

    def neighbors(self, node):
        """Every node joined to ``node`` by any edge."""
        return sorted(n for n in self.nodes if n != node and self.adjacent(node, n))

    def undirected_edges(self):
        return sorted(tuple(sorted(pair)) for pair in self.undirected)

    def directed_edges(self):
        return sorted(self.directed)

    def skeleton_edges(self):
        return sorted({tuple(sorted(e)) for e in self.directed} | set(self.undirected_edges()))

    def to_dict(self):
        return {
            "nodes": list(self.nodes),
            "directed": [list(e) for e in self.directed_edges()],
            "undirected": [list(e) for e in self.undirected_edges()],
        }


def _as_digraph(graph):
    if isinstance(graph, CompositeGraph):
        return graph.to_networkx()
    return graph


def d_separated(graph, a, b, conditioning=()):
    """
    d-separation of two composite variables in a composite DAG

    Args:
        graph (CompositeGraph or nx.DiGraph): Must be acyclic
        a (str): First variable
        b (str): Second variable
        conditioning (iterable): Conditioning variables

    Returns:
        bool: True iff every path between a and b is blocked
    """
    digraph = _as_digraph(graph)
    if not nx.is_directed_acyclic_graph(digraph):
        raise NotADag("d-separation needs an acyclic composite graph")
    conditioning = set(conditioning)
    if a == b:
        raise SameVariable(f"d-separation of {a} from itself is not a query")
    for name in (a, b, *conditioning):
        if name not in digraph:
            raise UnknownVariable(f"no composite variable named {name!r}")
    if a in conditioning or b in conditioning:
        raise InvalidQuery(f"conditioning set may not contain {a} or {b}")
    return _is_d_separator(digraph, {a}, {b}, conditioning)


@dataclass(frozen=True)
class FaithfulnessViolation:
    a: str
    b: str
    conditioning: tuple
    partial_correlation: float

    def to_dict(self):
        return {
            "pair": [self.a, self.b],
            "conditioning": list(self.conditioning),
            "partial_correlation": self.partial_correlation,
        }


def audit_faithfulness(system, scm, max_conditioning=None):
    """
    Find independencies the composite DAG does not explain

    Every pair is checked against every conditioning set drawn from the
    remaining variables (up to ``max_conditioning`` members). A violation is
    a pair that is d-connected in the derived composite DAG yet exactly
    independent under the structural model.

    Returns:
        list: FaithfulnessViolation objects, sorted; empty if faithful
    """
    graph = derive_composite_graph(system)
    if not graph.is_dag():
        raise NotADag("the derived composite graph is cyclic; unroll it first")
    names = sorted(system.names)
    if len(names) > AUDIT_VARIABLE_CAP and max_conditioning is None:
        raise AuditTooLarge(
            f"{len(names)} variables exceed the exhaustive audit cap of {AUDIT_VARIABLE_CAP}; "
            "pass a maximum conditioning size"
        )
    oracle = ExactOracle(system, scm)
    digraph = graph.to_networkx()

    violations = []
    for a, b in itertools.combinations(names, 2):
        rest = [n for n in names if n not in (a, b)]
        limit = len(rest) if max_conditioning is None else min(max_conditioning, len(rest))
        for size in range(limit + 1):
            for conditioning in itertools.combinations(rest, size):
                if d_separated(digraph, a, b, conditioning):
                    continue
                result = oracle.test(a, b, conditioning)
                if result.independent:
                    violations.append(FaithfulnessViolation(a, b, conditioning, result.statistic))
    logger.info(f"faithfulness audit found {len(violations)} violation(s)")
    return violations


def pc_skeleton(ci, names):
    """
    Classical PC adjacency search

    Starts from the complete graph and, for conditioning sizes 0, 1, ...,
    removes x - y as soon as some subset of the current neighbours of x
    (ascending size, then lexicographic) makes them independent.

    Args:
        ci (callable): ci(a, b, conditioning_tuple) -> bool (True = independent)
        names (iterable): Variable names

    Returns:
        tuple: (undirected Pdag, dict frozenset pair -> separating set)
    """
    names = sorted(names)
    adjacency = {name: set(names) - {name} for name in names}
    separating = {}
    size = 0
    while any(len(adjacency[x]) - 1 >= size for x in names):
        for x in names:
            for y in sorted(adjacency[x]):
                if y not in adjacency[x]:
                    continue
                candidates = sorted(adjacency[x] - {y})
                if len(candidates) < size:
                    continue
                for conditioning in itertools.combinations(candidates, size):
                    if ci(x, y, conditioning):
                        adjacency[x].discard(y)
                        adjacency[y].discard(x)
                        separating[_edge(x, y)] = frozenset(conditioning)
                        logger.debug(f"removed {x} - {y} given {list(conditioning)}")
                        break
        size += 1

    edges = {_edge(x, y) for x in names for y in adjacency[x]}
    return Pdag(tuple(names), undirected=frozenset(edges)), separating


def find_v_structures(skeleton, separating):
    """Unshielded triples a - c - b with c outside sep(a, b), as sorted (a, c, b)."""
    found = []
    for c in skeleton.nodes:
        for a, b in itertools.combinations(skeleton.neighbors(c), 2):
            if skeleton.adjacent(a, b):
                continue
            if c not in separating.get(_edge(a, b), frozenset()):
                found.append((a, c, b))
    return sorted(found)


class _Orientation:
    def __init__(self, pdag):
        self.nodes = pdag.nodes
        self.directed = set(pdag.directed)
        self.undirected = set(pdag.undirected)

    def adjacent(self, a, b):
        return (a, b) in self.directed or (b, a) in self.directed or _edge(a, b) in self.undirected

    def undirected_with(self, a, b):
        return _edge(a, b) in self.undirected

    def point(self, a, b):
        self.undirected.discard(_edge(a, b))
        self.directed.add((a, b))

    def freeze(self):
        return Pdag(self.nodes, frozenset(self.directed), frozenset(self.undirected))


def _meek_fires(state, a, b):
    """True if one of Meek's four rules orients the undirected edge a - b as a -> b."""
    others = [n for n in state.nodes if n not in (a, b)]
    # R1: c -> a - b, c and b not adjacent
    for c in others:
        if (c, a) in state.directed and not state.adjacent(c, b):
            return True
    # R2: a -> c -> b
    for c in others:
        if (a, c) in state.directed and (c, b) in state.directed:
            return True
    # R3: a - c -> b, a - d -> b, c and d not adjacent
    for c, d in itertools.combinations(others, 2):
        if (
            state.undirected_with(a, c)
            and state.undirected_with(a, d)
            and (c, b) in state.directed
            and (d, b) in state.directed
            and not state.adjacent(c, d)
        ):
            return True
    # R4: a - d -> c -> b, a adjacent to c, b and d not adjacent
    for c, d in itertools.permutations(others, 2):
        if (
            state.undirected_with(a, d)
            and (d, c) in state.directed
            and (c, b) in state.directed
            and state.adjacent(a, c)
            and not state.adjacent(b, d)
        ):
            return True
    return False


def meek_closure(pdag):
    """Apply Meek's rules R1-R4 until no undirected edge can be oriented."""
    state = _Orientation(pdag)
    changed = True
    while changed:
        changed = False
        for a, b in sorted(tuple(sorted(e)) for e in state.undirected):
            for tail, head in ((a, b), (b, a)):
                if _meek_fires(state, tail, head):
                    state.point(tail, head)
                    logger.debug(f"meek rule oriented {tail} -> {head}")
                    changed = True
                    break
            if changed:
                break
    return state.freeze()


def orient(skeleton, separating):
    """
    Orient a PC skeleton: v-structures first, then Meek closure

    Raises:
        ConflictingOrientations: two v-structures demand opposite directions
    """
    proposals = set()
    for a, c, b in find_v_structures(skeleton, separating):
        proposals.update({(a, c), (b, c)})
    for tail, head in sorted(proposals):
        if (head, tail) in proposals or (head, tail) in skeleton.directed:
            raise ConflictingOrientations(
                f"edge {tail} - {head} is oriented both ways by unshielded colliders",
                candidates=[f"{tail}->{head}", f"{head}->{tail}"],
            )

    state = _Orientation(skeleton)
    for tail, head in sorted(proposals):
        state.point(tail, head)
    return meek_closure(state.freeze())


@dataclass(frozen=True)
class TemporalViolation:
    edge: tuple
    offending_pairs: tuple

    def to_dict(self):
        return {
            "edge": list(self.edge),
            "offending_pairs": [[list(s_a), list(s_b)] for s_a, s_b in self.offending_pairs],
        }


def temporal_consistency_report(pdag, system):
    """
    Directed edges A -> B whose cause does not precede its effect

    Returns:
        list: TemporalViolation per edge, carrying every jointly supported
        (s_A, s_B) with max(s_A) >= min(s_B)
    """
    report = []
    for name in pdag.nodes:
        system.variable(name)
    for a, b in pdag.directed_edges():
        offending = sorted(
            (tuple(sorted(s_a)), tuple(sorted(s_b)))
            for s_a, s_b in pairwise_support(system, a, b)
            if not max(s_a) < min(s_b)
        )
        if offending:
            report.append(TemporalViolation((a, b), tuple(offending)))
    return report


@dataclass(frozen=True)
class DiscoveryResult:
    mode: str
    skeleton: Pdag
    separating_sets: dict = field(repr=False)
    v_structures: tuple
    pdag: Pdag
    temporal_violations: tuple

    def to_dict(self):
        return {
            "mode": self.mode,
            "skeleton": [list(e) for e in self.skeleton.skeleton_edges()],
            "separating_sets": [
                {"pair": sorted(pair), "set": sorted(members)}
                for pair, members in sorted(self.separating_sets.items(), key=lambda kv: sorted(kv[0]))
            ],
            "v_structures": [list(v) for v in self.v_structures],
            "pdag": self.pdag.to_dict(),
            "temporal_violations": [v.to_dict() for v in self.temporal_violations],
        }


def discover(oracle, system, mode="exact"):
    """
    Run PC with the given independence oracle and check the result against time

    Args:
        oracle (callable): ExactOracle, EmpiricalOracle or any ci(a, b, cond) -> bool
        system (VariableSystem): Supplies names and time-point supports
        mode (str): Label recorded in the result

    Returns:
        DiscoveryResult: Skeleton, separating sets, v-structures, pdag, temporal flags
    """
    skeleton, separating = pc_skeleton(oracle, system.names)
    v_structures = tuple(find_v_structures(skeleton, separating))
    pdag = orient(skeleton, separating)
    violations = tuple(temporal_consistency_report(pdag, system))
    logger.info(
        f"discovered {len(pdag.directed)} directed and {len(pdag.undirected)} undirected edges; "
        f"{len(violations)} against time order"
    )
    return DiscoveryResult(mode, skeleton, separating, v_structures, pdag, violations)
