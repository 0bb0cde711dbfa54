import pytest

from tempodag.acyclicity import (
    causes,
    classify_pair,
    classify_system,
    cycle_requires_multiple_time_points,
    derive_composite_graph,
    precedes,
)
from tempodag.atomic_graph import AtomicDag
from tempodag.composite import build_system, make_selection
from tempodag.discovery import audit_faithfulness
from tempodag.errors import SameVariable, TooFewVariables
from tempodag.scm_oracle import ExactOracle, LinearScm

from conftest import node


def labels(paths):
    return [[str(n) for n in path] for path in paths]


class TestSelectionTimeline:
    def test_derived_graph(self, load_fixture):
        system, _ = load_fixture("selection_timeline.json")
        graph = derive_composite_graph(system)
        assert graph.edge_list() == [("X", "Y")]
        assert graph.is_dag()

    def test_witnesses_sorted(self, load_fixture):
        system, _ = load_fixture("selection_timeline.json")
        result = causes(system, "X", "Y")
        assert result
        assert labels(result.witnesses) == [
            ["X@0", "Y@4", "X@6", "Y@10"],
            ["X@0", "Y@4", "Y@10"],
        ]
        assert not causes(system, "Y", "X")

    def test_classification(self, load_fixture):
        system, _ = load_fixture("selection_timeline.json")
        pair = classify_pair(system, "X", "Y")
        assert pair.time_acyclic
        assert pair.acyclic
        assert pair.acyclic_joint
        assert not pair.effect_acyclic
        assert not pair.total_effect_acyclic
        assert pair.precedence == "X<Y"
        assert not pair.cycle_possible


class TestMixing:
    def test_product_joint_is_cyclic(self, load_fixture):
        system, _ = load_fixture("mixing_product.json")
        report = classify_system(system)
        assert not report.verdicts["time_acyclic"]
        assert report.graph.two_cycles() == [("X", "Y")]
        assert not report.composite_dag

    def test_restricted_joint_is_time_acyclic(self, load_fixture):
        system, _ = load_fixture("mixing_restricted.json")
        report = classify_system(system)
        (pair,) = report.pairs
        assert pair.time_acyclic
        assert pair.precedence == "X<Y"
        assert report.graph.edge_list() == [("X", "Y")]
        assert report.composite_dag

    def test_restricted_joint_variant_of_acyclicity(self, load_fixture):
        system, _ = load_fixture("mixing_restricted.json")
        pair = classify_pair(system, "X", "Y")
        # over the product of marginals X@6 is reachable from Y@4
        assert not pair.acyclic
        assert pair.acyclic_joint


class TestAggregation:
    def test_interleaved_means_effect_acyclic(self, load_fixture):
        system, _ = load_fixture("interleaved_means.json")
        report = classify_system(system)
        (pair,) = report.pairs
        assert not pair.time_acyclic
        assert pair.acyclic
        assert pair.effect_acyclic
        assert pair.total_effect_acyclic
        assert pair.precedence == "neither"
        assert report.graph.edge_list() == [("X", "Y")]

    def test_feedback_edge_makes_two_cycle(self, load_fixture):
        system, _ = load_fixture("interleaved_means_feedback.json")
        report = classify_system(system)
        assert report.graph.two_cycles() == [("X", "Y")]
        assert report.graph.cycles() == [("X", "Y")]
        assert not report.verdicts["effect_acyclic"]

    def test_two_cycle_needs_multiple_time_points(self, load_fixture):
        system, _ = load_fixture("interleaved_means_feedback.json")
        assert cycle_requires_multiple_time_points(system, "X", "Y")
        system, _ = load_fixture("chain_faithful.json")
        assert not cycle_requires_multiple_time_points(system, "X", "Z")


class TestMediation:
    def test_measured_mediator_blocks_direct_edge(self, load_fixture):
        system, _ = load_fixture("chain_faithful.json")
        graph = derive_composite_graph(system)
        assert graph.edge_list() == [("X", "Y"), ("Y", "Z")]

    def test_literal_mode_keeps_mediated_edge(self, load_fixture):
        system, _ = load_fixture("chain_faithful.json")
        graph = derive_composite_graph(system, allow_mediation=True)
        assert graph.edge_list() == [("X", "Y"), ("X", "Z"), ("Y", "Z")]

    def test_classify_system_literal_mode(self, load_fixture):
        system, _ = load_fixture("chain_faithful.json")
        assert classify_system(system).graph.edge_list() == [("X", "Y"), ("Y", "Z")]
        report = classify_system(system, allow_mediation=True)
        assert report.graph.edge_list() == [("X", "Y"), ("X", "Z"), ("Y", "Z")]
        assert report.composite_dag

    def test_averaged_mediator(self, load_fixture):
        system, _ = load_fixture("averaged_mediator.json")
        graph = derive_composite_graph(system)
        assert graph.edge_list() == [("X", "Y"), ("Y", "Z")]

    def test_unselected_time_point_of_third_variable_is_traversable(self):
        x, w3, w5, y = node("X@0"), node("W@3"), node("W@5"), node("Y@10")
        atomic = AtomicDag([x, w3, w5, y], [(x, w3), (w3, y)])
        system = build_system(
            atomic,
            [make_selection("X", [0], 0), make_selection("W", [3, 5], 5), make_selection("Y", [10], 10)],
        )
        result = causes(system, "X", "Y")
        assert result
        assert labels(result.witnesses) == [["X@0", "W@3", "Y@10"]]
        assert derive_composite_graph(system).edge_list() == [("X", "Y")]

        scm = LinearScm.unit(atomic)
        assert not ExactOracle(system, scm)("X", "Y")
        assert audit_faithfulness(system, scm) == []

    def test_measured_time_point_of_third_variable_blocks(self):
        x, w3, y = node("X@0"), node("W@3"), node("Y@10")
        atomic = AtomicDag([x, w3, y], [(x, w3), (w3, y)])
        system = build_system(
            atomic,
            [make_selection("X", [0], 0), make_selection("W", [3], 3), make_selection("Y", [10], 10)],
        )
        assert not causes(system, "X", "Y")
        assert causes(system, "X", "Y", allow_mediation=True)


class TestPrecedence:
    @pytest.fixture
    def ties(self):
        atomic = AtomicDag([node("X@5"), node("Y@5")])
        return build_system(atomic, [make_selection("X", [5], 5), make_selection("Y", [5], 5)])

    def test_ties_fail_both_ways(self, ties):
        assert not precedes(ties, "X", "Y")
        assert not precedes(ties, "Y", "X")
        assert classify_pair(ties, "X", "Y").precedence == "neither"

    def test_same_variable(self, ties):
        with pytest.raises(SameVariable):
            classify_pair(ties, "X", "X")
        with pytest.raises(SameVariable):
            causes(ties, "X", "X")


class TestClassifySystem:
    def test_needs_two_variables(self):
        atomic = AtomicDag([node("X@0")])
        system = build_system(atomic, [make_selection("X", [0], 0)])
        with pytest.raises(TooFewVariables):
            classify_system(system)

    def test_pairs_sorted_by_name(self, load_fixture):
        system, _ = load_fixture("averaged_mediator.json")
        report = classify_system(system)
        assert [p.pair for p in report.pairs] == [("X", "Y"), ("X", "Z"), ("Y", "Z")]

    def test_workers_do_not_change_result(self, load_fixture):
        system, _ = load_fixture("averaged_mediator.json")
        assert classify_system(system, workers=3).to_dict() == classify_system(system).to_dict()

    def test_report_document(self, load_fixture):
        system, _ = load_fixture("mean_cycle.json")
        document = classify_system(system).to_dict()
        assert document["graph"]["cycles"] == [["X", "Y"]]
        assert document["verdicts"]["composite_dag"] is False
        assert {e["from"] for e in document["graph"]["edges"]} == {"X", "Y"}
