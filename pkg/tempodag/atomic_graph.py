"""
Atomic causal DAG
Time-point-specific nodes (process, tick) whose edges always point strictly
forward in time
"""

from dataclasses import dataclass

import networkx as nx
from loguru import logger

from .errors import (
    BackwardInTimeEdge,
    DuplicateNode,
    InvalidProcessName,
    InvalidTimePoint,
    ParseError,
    UnknownNode,
)

TimePoint = int
ProcessId = str


def make_time_point(tick):
    """
    Validate a tick on the within-realization timeline

    Args:
        tick (int): Non-negative integer tick

    Returns:
        int: The tick
    """
    if isinstance(tick, bool) or not isinstance(tick, int):
        raise InvalidTimePoint(f"time point must be an integer tick, got {tick!r}")
    if tick < 0:
        raise InvalidTimePoint(f"time point must be >= 0, got {tick}")
    return tick


@dataclass(frozen=True, order=True)
class AtomicNode:
    process: ProcessId
    time: TimePoint

    def __post_init__(self):
        if not isinstance(self.process, str) or not self.process:
            raise InvalidProcessName(f"process name must be a non-empty string, got {self.process!r}")
        if "@" in self.process:
            raise InvalidProcessName(f"process name may not contain '@': {self.process!r}")
        make_time_point(self.time)

    def __str__(self):
        return f"{self.process}@{self.time}"

    @classmethod
    def parse(cls, label):
        """Parse a ``process@tick`` label such as ``X@0``."""
        process, sep, tick = str(label).rpartition("@")
        if not sep or not tick.isdigit():
            raise ParseError(f"node label must look like 'X@0', got {label!r}")
        return cls(process, int(tick))


def time_order_key(node):
    return (node.time, node.process)


class AtomicDag:
    """
    Immutable DAG over atomic nodes

    Construction validates that every edge joins registered nodes and goes
    strictly forward in time. Derived graphs (``add_node``/``add_edge``)
    are new objects.
    """

    __slots__ = ("_nodes", "_edges", "_graph")

    def __init__(self, nodes=(), edges=()):
        seen = set()
        for node in nodes:
            if not isinstance(node, AtomicNode):
                raise UnknownNode(f"not an atomic node: {node!r}")
            if node in seen:
                raise DuplicateNode(f"node {node} registered twice")
            seen.add(node)
        edge_set = set()
        for source, target in edges:
            validate_edge(seen, source, target)
            edge_set.add((source, target))

        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(seen))
        graph.add_edges_from(sorted(edge_set))
        self._nodes = frozenset(seen)
        self._edges = frozenset(edge_set)
        self._graph = nx.freeze(graph)

    @property
    def nodes(self):
        return self._nodes

    @property
    def edges(self):
        return self._edges

    @property
    def graph(self):
        """Frozen networkx view; nodes and edges were inserted in sorted order."""
        return self._graph

    def __contains__(self, node):
        return node in self._nodes

    def __eq__(self, other):
        if not isinstance(other, AtomicDag):
            return NotImplemented
        return self._nodes == other._nodes and self._edges == other._edges

    def __hash__(self):
        return hash((self._nodes, self._edges))

    def __repr__(self):
        return f"AtomicDag(nodes={len(self._nodes)}, edges={len(self._edges)})"

    def topological_order(self):
        """Nodes sorted by (tick, process); a valid topological order."""
        return sorted(self._nodes, key=time_order_key)

    def is_acyclic(self):
        return nx.is_directed_acyclic_graph(self._graph)

    def add_node(self, node):
        if node in self._nodes:
            raise DuplicateNode(f"node {node} registered twice")
        return AtomicDag(self._nodes | {node}, self._edges)

    def add_edge(self, source, target):
        validate_edge(self._nodes, source, target)
        return AtomicDag(self._nodes, self._edges | {(source, target)})

    def require(self, node):
        if node not in self._nodes:
            raise UnknownNode(f"node {node} is not registered")
        return node

    def path_avoiding(self, source, target, avoid=frozenset()):
        """
        True iff a directed path of >= 1 edge from source to target exists
        whose intermediate nodes avoid ``avoid``
        """
        if source == target or source in avoid or target in avoid:
            return False
        graph = nx.restricted_view(self._graph, avoid, []) if avoid else self._graph
        return nx.has_path(graph, source, target)


def validate_edge(nodes, source, target):
    for endpoint in (source, target):
        if endpoint not in nodes:
            raise UnknownNode(f"edge endpoint {endpoint} is not a registered node")
    if source.time >= target.time:
        raise BackwardInTimeEdge(
            f"edge {source} -> {target} does not go strictly forward in time",
            source=str(source),
            target=str(target),
        )


def add_edge(dag, source, target):
    """
    Return a new DAG with the edge ``source -> target`` added

    Raises:
        BackwardInTimeEdge: if source.time >= target.time
        UnknownNode: if an endpoint is not registered
    """
    return dag.add_edge(source, target)


def has_causal_path(dag, source, target):
    """True iff a directed path of at least one edge leads from source to target."""
    dag.require(source)
    dag.require(target)
    if source == target:
        return False
    return nx.has_path(dag.graph, source, target)


def reachability_closure(dag):
    """
    Map every node to the set of nodes reachable from it by paths of >= 1 edge

    Returns:
        dict: AtomicNode -> frozenset of AtomicNode
    """
    closure = {node: frozenset(nx.descendants(dag.graph, node)) for node in dag.nodes}
    logger.debug(f"reachability closure computed for {len(closure)} nodes")
    return closure
