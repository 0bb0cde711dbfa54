"""
Acyclicity of composite variables
Derives the directed graph between composite variables from the atomic DAG
and classifies every pair as time-, effect- or totally effect-acyclic
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import networkx as nx
from loguru import logger

from .atomic_graph import AtomicNode, reachability_closure
from .composite import pairwise_support
from .config import WITNESS_CAP
from .errors import EmptyJointSupport, SameVariable, TooFewVariables

NEITHER = "neither"


def _path_key(path):
    return tuple((node.process, node.time) for node in path)


@dataclass(frozen=True)
class Causation:
    """Outcome of a composite causation query with its atomic witness paths."""

    holds: bool
    witnesses: tuple = ()

    def __bool__(self):
        return self.holds


@dataclass(frozen=True)
class CompositeGraph:
    variables: tuple
    edges: dict = field(default_factory=dict)

    def has_edge(self, a, b):
        return (a, b) in self.edges

    def edge_list(self):
        return sorted(self.edges)

    def to_networkx(self):
        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(self.variables))
        graph.add_edges_from(self.edge_list())
        return graph

    def is_dag(self):
        return nx.is_directed_acyclic_graph(self.to_networkx())

    def cycles(self):
        """Simple directed cycles, each rotated to start at its smallest name."""
        found = []
        for cycle in nx.simple_cycles(self.to_networkx()):
            start = cycle.index(min(cycle))
            found.append(tuple(cycle[start:] + cycle[:start]))
        return sorted(found)

    def two_cycles(self):
        return sorted((a, b) for a, b in self.edges if a < b and (b, a) in self.edges)


def causes(system, a, b, allow_mediation=False):
    """
    Whether composite variable ``a`` causes ``b``

    There must be a jointly supported pair of subsets (s_a, s_b) and atomic
    nodes t_a in s_a, t_b in s_b joined by a directed atomic path. Unless
    ``allow_mediation`` is set, the path may not pass through atomic nodes
    referenced by any third composite variable.

    Returns:
        Causation: holds flag and up to WITNESS_CAP sorted witness paths
    """
    if a == b:
        raise SameVariable(f"causation between {a} and itself is not defined")
    var_a, var_b = system.variable(a), system.variable(b)
    avoid = frozenset() if allow_mediation else system.referenced_nodes(exclude=(a, b))
    graph = system.atomic.graph
    if avoid:
        graph = nx.restricted_view(graph, avoid, [])

    witnesses = set()
    holds = False
    for s_a, s_b in sorted(pairwise_support(system, a, b), key=lambda p: (sorted(p[0]), sorted(p[1]))):
        for t_a, t_b in itertools.product(sorted(s_a), sorted(s_b)):
            source, target = AtomicNode(var_a.process, t_a), AtomicNode(var_b.process, t_b)
            if source.time >= target.time or not system.atomic.path_avoiding(source, target, avoid):
                continue
            holds = True
            for path in itertools.islice(nx.all_simple_paths(graph, source, target), WITNESS_CAP):
                witnesses.add(tuple(path))
    ordered = tuple(sorted(witnesses, key=_path_key)[:WITNESS_CAP])
    return Causation(holds, ordered)


def derive_composite_graph(system, allow_mediation=False):
    """
    Directed graph between composite variables (may contain cycles)

    Returns:
        CompositeGraph: Edges annotated with atomic witness paths
    """
    edges = {}
    for a, b in itertools.permutations(system.names, 2):
        result = causes(system, a, b, allow_mediation=allow_mediation)
        if result:
            edges[(a, b)] = result.witnesses
    logger.debug(f"derived composite graph with {len(edges)} edges")
    return CompositeGraph(tuple(system.names), edges)


def precedes(system, a, b):
    """
    Whether a strictly precedes b: max(s_a) < min(s_b) for every jointly
    supported pair; ties fail
    """
    support = pairwise_support(system, a, b)
    if not support:
        raise EmptyJointSupport(f"{a} and {b} have no jointly supported subsets")
    return all(max(s_a) < min(s_b) for s_a, s_b in support)


@dataclass(frozen=True)
class PairClassification:
    a: str
    b: str
    time_acyclic: bool
    acyclic: bool
    acyclic_joint: bool
    effect_acyclic: bool
    total_effect_acyclic: bool
    precedence: str

    @property
    def pair(self):
        return (self.a, self.b)

    @property
    def cycle_possible(self):
        return not self.time_acyclic

    def to_dict(self):
        return {
            "a": self.a,
            "b": self.b,
            "time_acyclic": self.time_acyclic,
            "acyclic": self.acyclic,
            "acyclic_joint": self.acyclic_joint,
            "effect_acyclic": self.effect_acyclic,
            "total_effect_acyclic": self.total_effect_acyclic,
            "cycle_possible": self.cycle_possible,
            "precedence": self.precedence,
        }


def _nodes(variable, times):
    return [AtomicNode(variable.process, t) for t in sorted(times)]


def _reaches(closure, sources, targets):
    return any(target in closure[source] for source in sources for target in targets)


def classify_pair(system, a, b, closure=None):
    """
    Classify the acyclicity of a pair of composite variables

    Args:
        system (VariableSystem): The system
        a (str): First variable
        b (str): Second variable
        closure (dict, optional): Precomputed reachability closure

    Returns:
        PairClassification: time-, effect-, total-effect-acyclicity flags
    """
    if a == b:
        raise SameVariable(f"cannot classify {a} against itself")
    var_a, var_b = system.variable(a), system.variable(b)
    closure = closure if closure is not None else reachability_closure(system.atomic)

    a_before_b = precedes(system, a, b)
    b_before_a = precedes(system, b, a)
    time_acyclic = a_before_b or b_before_a
    precedence = f"{a}<{b}" if a_before_b else f"{b}<{a}" if b_before_a else NEITHER

    # product of marginal supports
    nodes_a = _nodes(var_a, var_a.referenced_times)
    nodes_b = _nodes(var_b, var_b.referenced_times)
    acyclic = not (_reaches(closure, nodes_a, nodes_b) and _reaches(closure, nodes_b, nodes_a))

    support = pairwise_support(system, a, b)
    forward = any(_reaches(closure, _nodes(var_a, s_a), _nodes(var_b, s_b)) for s_a, s_b in support)
    backward = any(_reaches(closure, _nodes(var_b, s_b), _nodes(var_a, s_a)) for s_a, s_b in support)
    acyclic_joint = not (forward and backward)

    possible_a = _nodes(var_a, var_a.possible_times)
    possible_b = _nodes(var_b, var_b.possible_times)
    total = not (_reaches(closure, possible_a, possible_b) and _reaches(closure, possible_b, possible_a))

    result = PairClassification(
        a=a,
        b=b,
        time_acyclic=time_acyclic,
        acyclic=acyclic,
        acyclic_joint=acyclic_joint,
        effect_acyclic=(not time_acyclic) and acyclic,
        total_effect_acyclic=total,
        precedence=precedence,
    )
    logger.debug(f"classified pair {a},{b}: {result}")
    return result


def cycle_requires_multiple_time_points(system, a, b):
    """
    Necessary condition for a 2-cycle between a and b: at least one of them
    refers to more than one time point across its support
    """
    return any(len(system.variable(name).referenced_times) > 1 for name in (a, b))


@dataclass(frozen=True)
class SystemReport:
    graph: CompositeGraph
    pairs: tuple
    verdicts: dict

    @property
    def composite_dag(self):
        return self.verdicts["composite_dag"]

    def to_dict(self):
        return {
            "graph": {
                "variables": sorted(self.graph.variables),
                "edges": [
                    {
                        "from": a,
                        "to": b,
                        "witnesses": [[str(n) for n in path] for path in self.graph.edges[(a, b)]],
                    }
                    for a, b in self.graph.edge_list()
                ],
                "cycles": [list(cycle) for cycle in self.graph.cycles()],
            },
            "pairs": [pair.to_dict() for pair in self.pairs],
            "verdicts": dict(self.verdicts),
        }


def classify_system(system, workers=None, allow_mediation=False):
    """
    Classify every pair of variables and the system as a whole

    Args:
        system (VariableSystem): System with at least two variables
        workers (int, optional): Thread count for per-pair classification
        allow_mediation (bool): Derive the graph without blocking on third variables

    Returns:
        SystemReport: Pair table (sorted by name), derived graph and verdicts
    """
    if len(system.variables) < 2:
        raise TooFewVariables("classification needs at least two composite variables")
    closure = reachability_closure(system.atomic)
    pairs = list(itertools.combinations(sorted(system.names), 2))

    def _one(pair):
        return classify_pair(system, pair[0], pair[1], closure=closure)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            table = tuple(pool.map(_one, pairs))
    else:
        table = tuple(_one(pair) for pair in pairs)

    graph = derive_composite_graph(system, allow_mediation=allow_mediation)
    verdicts = {
        "time_acyclic": all(p.time_acyclic for p in table),
        "acyclic": all(p.acyclic for p in table),
        "acyclic_joint": all(p.acyclic_joint for p in table),
        "effect_acyclic": all(p.effect_acyclic for p in table),
        "total_effect_acyclic": all(p.total_effect_acyclic for p in table),
        "composite_dag": graph.is_dag(),
    }
    logger.info(f"classified {len(table)} pairs; composite DAG: {verdicts['composite_dag']}")
    return SystemReport(graph, table, verdicts)
