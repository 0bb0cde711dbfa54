"""
tempodag
Acyclicity of composite causal variables built from time-point-specific
processes: classification, unrolling, a linear-Gaussian oracle and
constraint-based discovery
"""

from .acyclicity import (
    Causation,
    CompositeGraph,
    PairClassification,
    SystemReport,
    causes,
    classify_pair,
    classify_system,
    cycle_requires_multiple_time_points,
    derive_composite_graph,
    precedes,
)
from .atomic_graph import AtomicDag, AtomicNode, add_edge, has_causal_path, make_time_point, reachability_closure
from .composite import (
    AggregationKind,
    AggregationSpec,
    CompositeVariable,
    JointEntry,
    VariableSystem,
    build_system,
    evaluate,
    make_aggregate,
    make_mixture,
    make_selection,
    pairwise_support,
)
from .discovery import (
    DiscoveryResult,
    FaithfulnessViolation,
    Pdag,
    TemporalViolation,
    audit_faithfulness,
    d_separated,
    discover,
    find_v_structures,
    meek_closure,
    orient,
    pc_skeleton,
    temporal_consistency_report,
)
from .errors import TempoDagError
from .scm_oracle import (
    CiResult,
    EmpiricalOracle,
    ExactOracle,
    LinearScm,
    RealizationBatch,
    atomic_covariance,
    ci_test_empirical,
    ci_test_exact,
    composite_covariance,
    fisher_z_test,
    sample,
)
from .spec_format import SpecDocument, dump_spec, load_spec, parse_spec, spec_to_system, system_to_spec
from .unroll import apply_unrolling, recombination_weights, suggest_unrolling, unroll_at, unroll_variable

__version__ = "0.1.0"
