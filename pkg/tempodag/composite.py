"""
Composite causal variables
Selection, mixing and aggregation variables over an atomic DAG, and the
joint distribution of their time-point subsets
"""

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from loguru import logger

from .atomic_graph import AtomicNode, make_time_point
from .config import MARGINAL_TOLERANCE, PROBABILITY_TOLERANCE
from .errors import (
    ArityMismatch,
    BadDistribution,
    DuplicateVariable,
    InvalidAggregation,
    InvalidArgument,
    MarginalMismatch,
    MissingAtomicValue,
    NonDeterministicSupport,
    ProcessTimeCollision,
    SubsetNotInSupport,
    TimePointNotPossible,
    UnknownAtomicNode,
    UnknownVariable,
)


class AggregationKind(str, Enum):
    IDENTITY = "identity"
    MEAN = "mean"
    WEIGHTED_SUM = "weighted_sum"


@dataclass(frozen=True)
class AggregationSpec:
    """
    Aggregation function f over the time-sorted values of a realized subset

    The catalog is closed so that sensitivity to every single component
    holds analytically: identity (k = 1), mean, and weighted sums with
    nonzero weights.
    """

    kind: AggregationKind
    weights: tuple = ()

    @classmethod
    def identity(cls):
        return cls(AggregationKind.IDENTITY)

    @classmethod
    def mean(cls):
        return cls(AggregationKind.MEAN)

    @classmethod
    def weighted_sum(cls, weights):
        return cls(AggregationKind.WEIGHTED_SUM, tuple(float(w) for w in weights))

    def validate(self, arity):
        if self.kind is AggregationKind.IDENTITY:
            if arity != 1:
                raise ArityMismatch(f"identity aggregation requires arity 1, got {arity}")
        elif self.kind is AggregationKind.WEIGHTED_SUM:
            if len(self.weights) != arity:
                raise ArityMismatch(
                    f"weighted sum has {len(self.weights)} weights for arity {arity}"
                )
            if any(w == 0 or not math.isfinite(w) for w in self.weights):
                raise InvalidAggregation("weighted sum weights must be finite and nonzero")
        if self.kind is not AggregationKind.WEIGHTED_SUM and self.weights:
            raise InvalidAggregation(f"{self.kind.value} aggregation takes no weights")
        return self

    def coefficients(self, arity):
        """Linear functional over the time-sorted inputs."""
        if self.kind is AggregationKind.WEIGHTED_SUM:
            return np.asarray(self.weights, dtype=float)
        if self.kind is AggregationKind.MEAN:
            return np.full(arity, 1.0 / arity)
        return np.ones(1)

    def apply(self, values):
        """
        Aggregate values ordered by ascending time

        Args:
            values (array-like): Shape (k,) or (n, k)

        Returns:
            float or np.ndarray: Aggregated value(s)
        """
        values = np.asarray(values, dtype=float)
        arity = values.shape[-1]
        if self.kind is AggregationKind.MEAN:
            return values.mean(axis=-1)
        return values @ self.coefficients(arity)

    def restrict(self, positions):
        """Aggregation over a sub-block; weighted-sum weights are carried verbatim."""
        if self.kind is AggregationKind.WEIGHTED_SUM:
            return AggregationSpec.weighted_sum(self.weights[i] for i in positions)
        return AggregationSpec(self.kind)


def _as_subset(subset):
    if isinstance(subset, int) and not isinstance(subset, bool):
        return frozenset({make_time_point(subset)})
    return frozenset(make_time_point(t) for t in subset)


def _fmt_subset(subset):
    return "{" + ",".join(str(t) for t in sorted(subset)) + "}"


@dataclass(frozen=True)
class CompositeVariable:
    name: str
    process: str
    possible_times: tuple
    arity: int
    marginal_support: tuple
    aggregation: AggregationSpec
    kind: str = "aggregate"

    def __post_init__(self):
        if not self.name:
            raise InvalidArgument("variable name must be non-empty")
        times = tuple(sorted({make_time_point(t) for t in self.possible_times}))
        object.__setattr__(self, "possible_times", times)
        if self.arity < 1:
            raise ArityMismatch(f"{self.name}: arity must be positive")

        support = tuple((_as_subset(s), float(p)) for s, p in self.marginal_support)
        object.__setattr__(self, "marginal_support", support)
        seen = set()
        for subset, probability in support:
            if len(subset) != self.arity:
                raise ArityMismatch(
                    f"{self.name}: subset {_fmt_subset(subset)} has {len(subset)} elements, arity is {self.arity}"
                )
            missing = subset - set(times)
            if missing:
                raise TimePointNotPossible(
                    f"{self.name}: time points {sorted(missing)} are not possible time points"
                )
            if subset in seen:
                raise BadDistribution(f"{self.name}: subset {_fmt_subset(subset)} listed twice")
            seen.add(subset)
            if not (0.0 < probability <= 1.0):
                raise BadDistribution(f"{self.name}: probability {probability} outside (0, 1]")
        if not support:
            raise BadDistribution(f"{self.name}: empty support")
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise BadDistribution(f"{self.name}: probabilities sum to {total!r}, not 1")
        self.aggregation.validate(self.arity)

    @property
    def subsets(self):
        return tuple(subset for subset, _ in self.marginal_support)

    @property
    def is_deterministic(self):
        return len(self.marginal_support) == 1

    @property
    def deterministic_times(self):
        if not self.is_deterministic:
            raise NonDeterministicSupport(
                f"{self.name} draws its time points at random; no fixed components"
            )
        return tuple(sorted(self.marginal_support[0][0]))

    @property
    def atomic_nodes(self):
        return tuple(AtomicNode(self.process, t) for t in self.possible_times)

    @property
    def referenced_times(self):
        return frozenset().union(*self.subsets)

    def probability(self, subset):
        subset = _as_subset(subset)
        for candidate, probability in self.marginal_support:
            if candidate == subset:
                return probability
        return 0.0


def make_selection(process, possible, chosen, name=None):
    """
    Variable that always refers to one fixed time point

    Args:
        process (str): Process name
        possible (iterable): Possible time points
        chosen (int): The selected time point

    Returns:
        CompositeVariable: Arity-1 identity variable with point-mass support
    """
    possible = {make_time_point(t) for t in possible}
    if chosen not in possible:
        raise TimePointNotPossible(f"{chosen} is not among the possible time points {sorted(possible)}")
    return CompositeVariable(
        name=name or process,
        process=process,
        possible_times=tuple(possible),
        arity=1,
        marginal_support=((frozenset({chosen}), 1.0),),
        aggregation=AggregationSpec.identity(),
        kind="selection",
    )


def make_mixture(process, possible, weighted_singletons, name=None):
    """
    Variable that refers to one time point drawn at random per realization

    Args:
        process (str): Process name
        possible (iterable): Possible time points
        weighted_singletons (list): (time point or singleton set, probability) pairs

    Returns:
        CompositeVariable: Arity-1 identity variable
    """
    possible = {make_time_point(t) for t in possible}
    support = []
    for point, probability in weighted_singletons:
        subset = _as_subset(point)
        if len(subset) != 1:
            raise ArityMismatch(f"mixture components must be single time points, got {_fmt_subset(subset)}")
        if probability <= 0:
            raise BadDistribution(f"mixture probability must be positive, got {probability}")
        support.append((subset, float(probability)))
    total = math.fsum(p for _, p in support)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise BadDistribution(f"mixture probabilities sum to {total!r}, not 1")
    for subset, _ in support:
        if not subset <= possible:
            raise TimePointNotPossible(f"{_fmt_subset(subset)} is not among the possible time points")
    return CompositeVariable(
        name=name or process,
        process=process,
        possible_times=tuple(possible),
        arity=1,
        marginal_support=tuple(support),
        aggregation=AggregationSpec.identity(),
        kind="mixture",
    )


def make_aggregate(process, times, aggregation, name=None):
    """
    Variable that aggregates a fixed set of time points

    Args:
        process (str): Process name
        times (iterable): The time points, all used in every realization
        aggregation (AggregationSpec): Aggregation over the time-sorted values

    Returns:
        CompositeVariable: Deterministic-support variable
    """
    times = frozenset(make_time_point(t) for t in times)
    aggregation.validate(len(times))
    return CompositeVariable(
        name=name or process,
        process=process,
        possible_times=tuple(times),
        arity=len(times),
        marginal_support=((times, 1.0),),
        aggregation=aggregation,
        kind="aggregate",
    )


@dataclass(frozen=True)
class JointEntry:
    assignment: tuple
    probability: float

    @classmethod
    def of(cls, mapping, probability):
        items = tuple(sorted((name, _as_subset(subset)) for name, subset in mapping.items()))
        return cls(items, float(probability))

    def subset(self, name):
        for key, subset in self.assignment:
            if key == name:
                return subset
        raise UnknownVariable(f"joint entry has no assignment for {name}")

    def as_dict(self):
        return dict(self.assignment)


@dataclass(frozen=True)
class VariableSystem:
    atomic: object
    variables: tuple
    joint: tuple
    _by_name: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {v.name: v for v in self.variables})

    @property
    def names(self):
        return tuple(v.name for v in self.variables)

    def variable(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownVariable(f"no composite variable named {name!r}") from None

    def referenced_nodes(self, exclude=()):
        """Atomic nodes some variable actually measures (support subsets, not merely possible times)."""
        return frozenset(
            AtomicNode(variable.process, t)
            for variable in self.variables
            if variable.name not in exclude
            for t in variable.referenced_times
        )

    def marginal(self, name):
        self.variable(name)
        totals = defaultdict(float)
        for entry in self.joint:
            totals[entry.subset(name)] += entry.probability
        return dict(totals)


def _product_joint(variables):
    entries = []
    for combo in itertools.product(*(v.marginal_support for v in variables)):
        probability = math.prod(p for _, p in combo)
        mapping = {v.name: subset for v, (subset, _) in zip(variables, combo)}
        entries.append(JointEntry.of(mapping, probability))
    return tuple(entries)


def _normalise_joint(variables, joint):
    names = {v.name for v in variables}
    entries = []
    seen = set()
    for index, entry in enumerate(joint):
        try:
            if not isinstance(entry, JointEntry):
                mapping, probability = entry
                entry = JointEntry.of(mapping, probability)
            keys = {name for name, _ in entry.assignment}
            if keys != names:
                raise MarginalMismatch(
                    f"joint entry assigns {sorted(keys)}, expected every variable {sorted(names)}"
                )
            if not (0.0 < entry.probability <= 1.0):
                raise BadDistribution(f"joint probability {entry.probability} outside (0, 1]")
            if entry.assignment in seen:
                raise BadDistribution("joint assignment listed twice")
        except (MarginalMismatch, BadDistribution) as error:
            raise error.at((index,))
        seen.add(entry.assignment)
        entries.append(entry)
    total = math.fsum(e.probability for e in entries)
    if abs(total - 1.0) > PROBABILITY_TOLERANCE:
        raise BadDistribution(f"joint probabilities sum to {total!r}, not 1")
    return tuple(entries)


def build_system(atomic, variables, joint=None):
    """
    Assemble composite variables over an atomic DAG into a system

    Args:
        atomic (AtomicDag): The atomic causal DAG
        variables (list): CompositeVariable objects with unique names
        joint (list, optional): (mapping name -> subset, probability) entries;
            defaults to the product of the marginals

    Returns:
        VariableSystem: Validated system
    """
    variables = tuple(variables)
    owners = {}
    names = set()
    for index, variable in enumerate(variables):
        if variable.name in names:
            raise DuplicateVariable(f"variable {variable.name!r} defined twice").at((index,))
        names.add(variable.name)
        for node in variable.atomic_nodes:
            if node not in atomic:
                raise UnknownAtomicNode(
                    f"{variable.name} refers to {node}, which is not a node of the atomic DAG"
                ).at((index,))
            if node in owners:
                raise ProcessTimeCollision(
                    f"{variable.name} and {owners[node]} both refer to {node}"
                ).at((index,))
            owners[node] = variable.name

    if joint is None:
        entries = _product_joint(variables)
    else:
        entries = _normalise_joint(variables, joint)
        for variable in variables:
            implied = defaultdict(float)
            for entry in entries:
                implied[entry.subset(variable.name)] += entry.probability
            declared = dict(variable.marginal_support)
            if set(implied) != set(declared) or any(
                abs(implied[s] - declared[s]) > MARGINAL_TOLERANCE for s in declared
            ):
                raise MarginalMismatch(
                    f"joint table does not reproduce the declared marginal of {variable.name}"
                )

    logger.debug(f"built system with {len(variables)} variables and {len(entries)} joint entries")
    return VariableSystem(atomic, variables, entries)


def pairwise_support(system, a, b):
    """
    Project the joint support onto two variables

    Returns:
        set: (subset of a, subset of b) pairs with positive probability
    """
    system.variable(a)
    system.variable(b)
    return {(entry.subset(a), entry.subset(b)) for entry in system.joint}


def evaluate(variable, atomic_values, realized_subset):
    """
    Value of a composite variable for one realization

    Args:
        variable (CompositeVariable): The variable
        atomic_values (dict): AtomicNode -> real value
        realized_subset (iterable): Time points drawn in this realization

    Returns:
        float: Aggregated value over the time-sorted inputs
    """
    subset = _as_subset(realized_subset)
    if subset not in variable.subsets:
        raise SubsetNotInSupport(f"{_fmt_subset(subset)} is not in the support of {variable.name}")
    values = []
    for tick in sorted(subset):
        node = AtomicNode(variable.process, tick)
        if node not in atomic_values:
            raise MissingAtomicValue(f"no value supplied for {node}")
        values.append(atomic_values[node])
    return float(variable.aggregation.apply(np.asarray(values, dtype=float)))
