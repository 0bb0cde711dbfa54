import pytest

from tempodag.atomic_graph import AtomicDag
from tempodag.composite import (
    AggregationSpec,
    JointEntry,
    build_system,
    evaluate,
    make_aggregate,
    make_mixture,
    make_selection,
    pairwise_support,
)
from tempodag.errors import (
    ArityMismatch,
    BadDistribution,
    DuplicateVariable,
    InvalidAggregation,
    MarginalMismatch,
    MissingAtomicValue,
    ProcessTimeCollision,
    SubsetNotInSupport,
    TimePointNotPossible,
    UnknownAtomicNode,
    UnknownVariable,
)

from conftest import node


@pytest.fixture
def atomic():
    return AtomicDag([node(n) for n in ("X@0", "X@6", "Y@4", "Y@10")])


class TestConstructors:
    def test_selection(self):
        x = make_selection("X", [0, 6], 0)
        assert x.kind == "selection"
        assert x.is_deterministic
        assert x.deterministic_times == (0,)
        assert x.possible_times == (0, 6)

    def test_selection_outside_possible(self):
        with pytest.raises(TimePointNotPossible):
            make_selection("X", [0, 6], 3)

    def test_mixture(self):
        x = make_mixture("X", [0, 6], [(0, 0.6), ({6}, 0.4)])
        assert not x.is_deterministic
        assert x.probability({6}) == pytest.approx(0.4)
        assert x.referenced_times == {0, 6}

    def test_mixture_mass_above_one(self):
        with pytest.raises(BadDistribution):
            make_mixture("X", [0], [(0, 1.4)])

    def test_mixture_mass_not_summing(self):
        with pytest.raises(BadDistribution):
            make_mixture("X", [0, 6], [(0, 0.5), (6, 0.4)])

    def test_mixture_needs_singletons(self):
        with pytest.raises(ArityMismatch):
            make_mixture("X", [0, 6], [({0, 6}, 1.0)])

    def test_mixture_point_outside_possible(self):
        with pytest.raises(TimePointNotPossible):
            make_mixture("X", [0], [(0, 0.5), (6, 0.5)])

    def test_aggregate(self):
        y = make_aggregate("Y", [10, 4], AggregationSpec.mean())
        assert y.arity == 2
        assert y.deterministic_times == (4, 10)

    def test_identity_needs_arity_one(self):
        with pytest.raises(ArityMismatch):
            make_aggregate("Y", [4, 10], AggregationSpec.identity())

    def test_zero_weight_rejected(self):
        with pytest.raises(InvalidAggregation):
            make_aggregate("Y", [4, 10], AggregationSpec.weighted_sum([1.0, 0.0]))

    def test_weight_count_must_match(self):
        with pytest.raises(ArityMismatch):
            make_aggregate("Y", [4, 10], AggregationSpec.weighted_sum([1.0]))


class TestEvaluate:
    def test_mean(self):
        y = make_aggregate("Y", [4, 10], AggregationSpec.mean())
        assert evaluate(y, {node("Y@4"): 1.0, node("Y@10"): 3.0}, {4, 10}) == pytest.approx(2.0)

    def test_weighted_sum_uses_time_order(self):
        y = make_aggregate("Y", [4, 10], AggregationSpec.weighted_sum([2.0, -1.0]))
        assert evaluate(y, {node("Y@10"): 3.0, node("Y@4"): 1.0}, [10, 4]) == pytest.approx(-1.0)

    def test_mixture_uses_realized_point(self):
        x = make_mixture("X", [0, 6], [(0, 0.5), (6, 0.5)])
        values = {node("X@0"): 1.5, node("X@6"): -2.0}
        assert evaluate(x, values, {6}) == pytest.approx(-2.0)

    def test_subset_not_in_support(self):
        x = make_selection("X", [0, 6], 0)
        with pytest.raises(SubsetNotInSupport):
            evaluate(x, {node("X@6"): 1.0}, {6})

    def test_missing_value(self):
        y = make_aggregate("Y", [4, 10], AggregationSpec.mean())
        with pytest.raises(MissingAtomicValue):
            evaluate(y, {node("Y@4"): 1.0}, {4, 10})


class TestSystem:
    def test_product_joint(self, atomic):
        x = make_mixture("X", [0, 6], [(0, 0.6), (6, 0.4)])
        y = make_mixture("Y", [4, 10], [(4, 0.5), (10, 0.5)])
        system = build_system(atomic, [x, y])
        assert len(system.joint) == 4
        assert sum(e.probability for e in system.joint) == pytest.approx(1.0)
        assert system.marginal("X")[frozenset({0})] == pytest.approx(0.6)

    def test_restricted_joint(self, atomic):
        x = make_mixture("X", [0, 6], [(0, 0.6), (6, 0.4)])
        y = make_mixture("Y", [4, 10], [(4, 0.5), (10, 0.5)])
        joint = [
            ({"X": {0}, "Y": {4}}, 0.5),
            ({"X": {0}, "Y": {10}}, 0.1),
            ({"X": {6}, "Y": {10}}, 0.4),
        ]
        system = build_system(atomic, [x, y], joint)
        support = pairwise_support(system, "X", "Y")
        assert (frozenset({6}), frozenset({4})) not in support
        assert len(support) == 3

    def test_joint_must_reproduce_marginals(self, atomic):
        x = make_mixture("X", [0, 6], [(0, 0.6), (6, 0.4)])
        y = make_mixture("Y", [4, 10], [(4, 0.5), (10, 0.5)])
        joint = [({"X": {0}, "Y": {4}}, 0.6), ({"X": {6}, "Y": {10}}, 0.4)]
        with pytest.raises(MarginalMismatch):
            build_system(atomic, [x, y], joint)

    def test_joint_must_assign_every_variable(self, atomic):
        x = make_selection("X", [0, 6], 0)
        y = make_selection("Y", [4, 10], 4)
        with pytest.raises(MarginalMismatch) as error:
            build_system(atomic, [x, y], [JointEntry.of({"X": {0}}, 1.0)])
        assert error.value.path == (0,)

    def test_joint_must_sum_to_one(self, atomic):
        x = make_selection("X", [0, 6], 0)
        y = make_selection("Y", [4, 10], 4)
        with pytest.raises(BadDistribution):
            build_system(atomic, [x, y], [({"X": {0}, "Y": {4}}, 0.9)])

    def test_process_time_collision(self, atomic):
        x = make_selection("X", [0, 6], 0)
        x2 = make_selection("X", [6], 6, name="X late")
        with pytest.raises(ProcessTimeCollision) as error:
            build_system(atomic, [x, x2])
        assert error.value.path == (1,)

    def test_duplicate_variable(self, atomic):
        x = make_selection("X", [0], 0)
        y = make_selection("Y", [4], 4, name="X")
        with pytest.raises(DuplicateVariable):
            build_system(atomic, [x, y])

    def test_unknown_atomic_node(self, atomic):
        z = make_selection("Z", [1], 1)
        with pytest.raises(UnknownAtomicNode):
            build_system(atomic, [z])

    def test_unknown_variable(self, atomic):
        system = build_system(atomic, [make_selection("X", [0], 0)])
        with pytest.raises(UnknownVariable):
            system.variable("Q")
        with pytest.raises(UnknownVariable):
            pairwise_support(system, "X", "Q")

    def test_referenced_nodes_follow_support(self, atomic):
        system = build_system(atomic, [make_selection("X", [0, 6], 0), make_selection("Y", [4, 10], 10)])
        assert system.referenced_nodes() == {node("X@0"), node("Y@10")}
        assert system.referenced_nodes(exclude=("X",)) == {node("Y@10")}
