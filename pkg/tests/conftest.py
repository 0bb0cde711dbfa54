from pathlib import Path

import numpy as np
import pytest

from tempodag.atomic_graph import AtomicDag, AtomicNode
from tempodag.composite import build_system, make_selection
from tempodag.scm_oracle import LinearScm
from tempodag.spec_format import load_spec

FIXTURES = Path(__file__).resolve().parent.parent / "docs" / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


def node(label):
    return AtomicNode.parse(label)


def random_coefficient(rng):
    return float(rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0]))


def random_selection_system(rng, n_vars, edge_probability=0.4):
    """One selection variable per process, each on its own node at a distinct tick."""
    ticks = sorted(int(t) for t in rng.choice(np.arange(3 * n_vars), size=n_vars, replace=False))
    nodes = [AtomicNode(f"P{i}", tick) for i, tick in enumerate(ticks)]
    edges = [
        (nodes[i], nodes[j])
        for i in range(n_vars)
        for j in range(i + 1, n_vars)
        if rng.random() < edge_probability
    ]
    dag = AtomicDag(nodes, edges)
    variables = [make_selection(n.process, [n.time], n.time) for n in nodes]
    scm = LinearScm(dag, {e: random_coefficient(rng) for e in edges}, {n: 1.0 for n in nodes})
    return build_system(dag, variables), scm


@pytest.fixture
def fixture_path():
    return lambda name: FIXTURES / name


@pytest.fixture
def load_fixture():
    def _load(name):
        return load_spec(FIXTURES / name).build()

    return _load


@pytest.fixture
def golden():
    return lambda name: (GOLDEN / name).read_text(encoding="utf-8")
