"""
Unrolling composite variables in time
Splits deterministic-support variables into time-partitioned parts so that
cycles between composite variables turn into DAGs
"""

import itertools

import networkx as nx
from loguru import logger

from .acyclicity import derive_composite_graph
from .composite import AggregationKind, CompositeVariable, JointEntry, build_system
from .errors import AlreadyAcyclic, BadPartition, UnresolvableWithMixing

SEARCH_SLOT_WARNING = 20


def _blocks(times, partition):
    blocks = [frozenset(int(t) for t in block) for block in partition]
    if any(not block for block in blocks):
        raise BadPartition("partition blocks must be non-empty")
    covered = set()
    for block in blocks:
        if covered & block:
            raise BadPartition(f"time points {sorted(covered & block)} appear in more than one block")
        covered |= block
    if covered != set(times):
        raise BadPartition(
            f"partition covers {sorted(covered)}, expected exactly {sorted(times)}"
        )
    return sorted(blocks, key=min)


def _split(variable, blocks):
    times = variable.deterministic_times
    position = {t: i for i, t in enumerate(times)}
    # possible-but-unused time points stay with the block in effect at that tick
    possible = [set(block) for block in blocks]
    for tick in variable.possible_times:
        if tick in times:
            continue
        owner = 0
        for index, block in enumerate(blocks):
            if min(block) <= tick:
                owner = index
        possible[owner].add(tick)

    parts = []
    for index, block in enumerate(blocks, start=1):
        aggregation = variable.aggregation.restrict(sorted(position[t] for t in block))
        single = len(block) == 1 and aggregation.kind is AggregationKind.IDENTITY
        parts.append(
            CompositeVariable(
                name=f"{variable.name}#{index}",
                process=variable.process,
                possible_times=tuple(possible[index - 1]),
                arity=len(block),
                marginal_support=((block, 1.0),),
                aggregation=aggregation,
                kind="selection" if single else "aggregate",
            )
        )
    return parts


def unroll_variable(system, var, partition):
    """
    Replace a deterministic-support variable by one variable per time block

    Args:
        system (VariableSystem): Input system (left untouched)
        var (str): Variable to split
        partition (list): Disjoint non-empty blocks covering its time points

    Returns:
        VariableSystem: New system; parts are named var#1, var#2, ... in time order
    """
    variable = system.variable(var)
    times = variable.deterministic_times
    blocks = _blocks(times, partition)
    parts = _split(variable, blocks)

    variables = []
    for existing in system.variables:
        variables.extend(parts if existing.name == var else [existing])

    joint = []
    for entry in system.joint:
        mapping = {name: subset for name, subset in entry.assignment if name != var}
        mapping.update({part.name: part.subsets[0] for part in parts})
        joint.append(JointEntry.of(mapping, entry.probability))

    logger.info(f"unrolled {var} into {[part.name for part in parts]}")
    return build_system(system.atomic, variables, joint)


def unroll_at(system, var, tick):
    """Split a variable into the blocks strictly before ``tick`` and from ``tick`` on."""
    times = system.variable(var).deterministic_times
    before = [t for t in times if t < tick]
    after = [t for t in times if t >= tick]
    if not before or not after:
        raise BadPartition(f"splitting {var} at {tick} leaves an empty block")
    return unroll_variable(system, var, [before, after])


def recombination_weights(variable, partition):
    """
    Weights w_i such that the original aggregate equals sum_i w_i * part_i

    Mean parts recombine with |block|/k; weighted-sum and identity parts with 1.
    """
    blocks = _blocks(variable.deterministic_times, partition)
    if variable.aggregation.kind is AggregationKind.MEAN:
        return [len(block) / variable.arity for block in blocks]
    return [1.0 for _ in blocks]


def apply_unrolling(system, proposals):
    for var, partition in proposals:
        system = unroll_variable(system, var, partition)
    return system


def _proposal(times_by_var, cuts):
    proposals = []
    for name, group in itertools.groupby(sorted(cuts), key=lambda slot: slot[0]):
        times = times_by_var[name]
        gaps = [gap for _, gap in group]
        bounds = [0, *gaps, len(times)]
        proposals.append((name, [tuple(times[lo:hi]) for lo, hi in zip(bounds, bounds[1:])]))
    return proposals


def suggest_unrolling(system, allow_mediation=False):
    """
    Smallest set of contiguous-in-time splits that makes the derived graph acyclic

    Returns:
        list: (variable name, partition) proposals sorted by variable name
    """
    graph = derive_composite_graph(system, allow_mediation=allow_mediation).to_networkx()
    if nx.is_directed_acyclic_graph(graph):
        raise AlreadyAcyclic("the derived composite graph has no directed cycle")

    on_cycle = set()
    for component in nx.strongly_connected_components(graph):
        if len(component) > 1:
            on_cycle |= component
    mixing = sorted(name for name in on_cycle if not system.variable(name).is_deterministic)
    times_by_var = {
        name: system.variable(name).deterministic_times
        for name in sorted(on_cycle)
        if name not in mixing
    }
    slots = [
        (name, gap)
        for name, times in times_by_var.items()
        for gap in range(1, len(times))
    ]
    if len(slots) > SEARCH_SLOT_WARNING:
        logger.warning(f"unrolling search over {len(slots)} cut positions may be slow")

    for count in range(1, len(slots) + 1):
        for cuts in itertools.combinations(slots, count):
            proposals = _proposal(times_by_var, cuts)
            candidate = apply_unrolling(system, proposals)
            if derive_composite_graph(candidate, allow_mediation=allow_mediation).is_dag():
                logger.info(f"unrolling with {count} split(s): {proposals}")
                return proposals

    if mixing:
        raise UnresolvableWithMixing(
            f"cycle through mixing variable(s) {mixing} cannot be unrolled",
            variables=mixing,
        )
    raise UnresolvableWithMixing("no contiguous unrolling removes the cycle")
