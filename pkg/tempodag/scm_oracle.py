"""
Linear-Gaussian independence oracle
Exact covariances of atomic nodes and composite variables under a linear
structural model, partial-correlation independence tests, and a seeded
Monte Carlo sampler of within-realization timelines
"""

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from loguru import logger
from scipy.linalg import solve_triangular
from scipy.stats import norm

from .config import INDEPENDENCE_TOLERANCE, SAMPLING_CHUNK, SINGULAR_TOLERANCE
from .errors import (
    InsufficientSamples,
    InvalidArgument,
    InvalidQuery,
    InvalidScm,
    MixingNotExact,
    SameVariable,
    SingularConditioning,
    UnknownVariable,
)


@dataclass(frozen=True)
class LinearScm:
    """
    x_v = sum over parents u of coefficient(u, v) * x_u + e_v, e_v ~ N(0, variance_v)
    """

    dag: object
    coefficients: dict
    noise_variances: dict

    def __post_init__(self):
        edges = set(self.dag.edges)
        keys = set(self.coefficients)
        if keys != edges:
            missing = sorted(f"{u}->{v}" for u, v in edges - keys)
            extra = sorted(f"{u}->{v}" for u, v in keys - edges)
            raise InvalidScm(f"coefficients must cover exactly the edges (missing {missing}, extra {extra})")
        for (u, v), value in self.coefficients.items():
            if value == 0 or not math.isfinite(value):
                raise InvalidScm(f"coefficient of {u}->{v} must be finite and nonzero")
        if set(self.noise_variances) != set(self.dag.nodes):
            raise InvalidScm("noise variances must be given for every atomic node")
        for node, variance in self.noise_variances.items():
            if not variance > 0 or not math.isfinite(variance):
                raise InvalidScm(f"noise variance of {node} must be positive")

    @classmethod
    def unit(cls, dag, coefficient=1.0):
        return cls(
            dag,
            {edge: coefficient for edge in dag.edges},
            {node: 1.0 for node in dag.nodes},
        )

    def scaled(self, factor):
        return LinearScm(
            self.dag,
            {edge: value * factor for edge, value in self.coefficients.items()},
            dict(self.noise_variances),
        )


def _structure(scm):
    nodes = scm.dag.topological_order()
    index = {node: i for i, node in enumerate(nodes)}
    weights = np.zeros((len(nodes), len(nodes)))
    for (source, target), value in scm.coefficients.items():
        weights[index[target], index[source]] = value
    return nodes, index, weights


def atomic_covariance(scm):
    """
    Exact covariance (I - B)^-1 D (I - B)^-T of the atomic nodes

    Returns:
        pd.DataFrame: Covariance labelled by ``process@tick`` in time order
    """
    nodes, _, weights = _structure(scm)
    size = len(nodes)
    labels = [str(node) for node in nodes]
    if size == 0:
        return pd.DataFrame(np.zeros((0, 0)), index=labels, columns=labels)
    # time order makes B strictly lower triangular
    mixing = solve_triangular(np.eye(size) - weights, np.eye(size), lower=True)
    noise = np.diag([scm.noise_variances[node] for node in nodes])
    sigma = mixing @ noise @ mixing.T
    sigma = (sigma + sigma.T) / 2
    return pd.DataFrame(sigma, index=labels, columns=labels)


def _loading_matrix(system, labels):
    position = {label: i for i, label in enumerate(labels)}
    loadings = np.zeros((len(system.variables), len(labels)))
    for row, variable in enumerate(system.variables):
        if not variable.is_deterministic:
            raise MixingNotExact(
                f"{variable.name} mixes time points; its distribution needs Monte Carlo"
            )
        times = variable.deterministic_times
        coefficients = variable.aggregation.coefficients(len(times))
        for tick, weight in zip(times, coefficients):
            loadings[row, position[f"{variable.process}@{tick}"]] = weight
    return loadings


def composite_covariance(system, scm):
    """
    Exact covariance A Sigma A^T of deterministic-support composite variables

    Returns:
        pd.DataFrame: Covariance labelled by variable name
    """
    sigma = atomic_covariance(scm)
    loadings = _loading_matrix(system, list(sigma.index))
    covariance = loadings @ sigma.to_numpy() @ loadings.T
    covariance = (covariance + covariance.T) / 2
    names = list(system.names)
    return pd.DataFrame(covariance, index=names, columns=names)


@dataclass(frozen=True)
class CiResult:
    independent: bool
    statistic: float
    p_value: float = None


def _partial_correlation(covariance, a, b, conditioning):
    pair = [a, b]
    block = covariance[np.ix_(pair, pair)]
    if conditioning:
        cond = list(conditioning)
        inner = covariance[np.ix_(cond, cond)]
        if np.linalg.eigvalsh(inner).min() <= SINGULAR_TOLERANCE:
            raise SingularConditioning("covariance of the conditioning set is not invertible")
        cross = covariance[np.ix_(pair, cond)]
        block = block - cross @ np.linalg.solve(inner, cross.T)
    if block[0, 0] <= SINGULAR_TOLERANCE or block[1, 1] <= SINGULAR_TOLERANCE:
        return 0.0
    return float(block[0, 1] / math.sqrt(block[0, 0] * block[1, 1]))


class ExactOracle:
    """
    Partial-correlation oracle over composite variables; the composite
    covariance is computed once and reused for every query
    """

    def __init__(self, system, scm):
        self.system = system
        self.covariance = composite_covariance(system, scm)
        self._matrix = self.covariance.to_numpy()
        self._index = {name: i for i, name in enumerate(self.covariance.index)}

    def _positions(self, a, b, conditioning):
        if a == b:
            raise SameVariable(f"independence of {a} with itself is not a query")
        for name in (a, b, *conditioning):
            if name not in self._index:
                raise UnknownVariable(f"no composite variable named {name!r}")
        if a in conditioning or b in conditioning:
            raise InvalidQuery(f"conditioning set may not contain {a} or {b}")
        return self._index[a], self._index[b], [self._index[c] for c in sorted(conditioning)]

    def partial_correlation(self, a, b, conditioning=()):
        i, j, cond = self._positions(a, b, tuple(conditioning))
        return _partial_correlation(self._matrix, i, j, cond)

    def test(self, a, b, conditioning=()):
        rho = self.partial_correlation(a, b, conditioning)
        return CiResult(abs(rho) <= INDEPENDENCE_TOLERANCE, rho)

    def __call__(self, a, b, conditioning=()):
        return self.test(a, b, conditioning).independent


def ci_test_exact(system, scm, a, b, conditioning=()):
    """
    Exact conditional independence of two composite variables

    Returns:
        CiResult: independent iff |partial correlation| <= 1e-9
    """
    return ExactOracle(system, scm).test(a, b, conditioning)


@dataclass(frozen=True)
class RealizationBatch:
    """
    Independent realizations of the atomic nodes and composite variables

    ``joint_rows`` holds, per realization, the index of the joint-table entry
    that fixed every variable's time-point subset.
    """

    seed: int
    count: int
    system: object = field(repr=False)
    atomic: pd.DataFrame = field(repr=False)
    composite: pd.DataFrame = field(repr=False)
    joint_rows: np.ndarray = field(repr=False)

    @property
    def values(self):
        return self.atomic

    @property
    def realized_subsets(self):
        """Per realization, the drawn subset of every mixing variable."""
        mixing = [v.name for v in self.system.variables if not v.is_deterministic]
        entries = self.system.joint
        return [
            {name: tuple(sorted(entries[row].subset(name))) for name in mixing}
            for row in self.joint_rows
        ]

    def composite_values(self):
        return self.composite

    def atomic_frame(self):
        return self.atomic


def _stream(seed, chunk, stream):
    sequence = np.random.SeedSequence(seed, spawn_key=(chunk, stream))
    return np.random.Generator(np.random.PCG64(sequence))


def _composite_values(system, values, index, rows):
    columns = {}
    for variable in system.variables:
        out = np.empty(len(rows))
        by_subset = {}
        for position, entry in enumerate(system.joint):
            by_subset.setdefault(entry.subset(variable.name), []).append(position)
        for subset, positions in by_subset.items():
            mask = np.isin(rows, positions)
            cols = [index[f"{variable.process}@{t}"] for t in sorted(subset)]
            out[mask] = variable.aggregation.apply(values[np.ix_(mask, cols)])
        columns[variable.name] = out
    return pd.DataFrame(columns, columns=list(system.names))


def sample(system, scm, seed, count):
    """
    Draw i.i.d. realizations

    Realizations are generated in chunks of SAMPLING_CHUNK. Chunk c uses one
    PCG64 stream per atomic node j (spawn key (c, j), nodes in time order)
    and stream n = number of nodes for the joint-table row, so any chunk can
    be produced independently of the others.

    Args:
        system (VariableSystem): Composite variables and their joint table
        scm (LinearScm): Structural model over the same atomic DAG
        seed (int): Root seed
        count (int): Number of realizations

    Returns:
        RealizationBatch: Bit-reproducible for a fixed seed
    """
    if count < 1:
        raise InvalidArgument(f"sample count must be at least 1, got {count}")
    if scm.dag != system.atomic:
        raise InvalidScm("the structural model is defined over a different atomic DAG")
    nodes, index, weights = _structure(scm)
    labels = [str(node) for node in nodes]
    label_index = {label: i for i, label in enumerate(labels)}
    parents = [np.flatnonzero(weights[j]) for j in range(len(nodes))]
    scales = np.sqrt([scm.noise_variances[node] for node in nodes])
    probabilities = np.array([entry.probability for entry in system.joint])
    probabilities = probabilities / probabilities.sum()

    values = np.empty((count, len(nodes)))
    rows = np.empty(count, dtype=np.int64)
    for chunk, start in enumerate(range(0, count, SAMPLING_CHUNK)):
        stop = min(start + SAMPLING_CHUNK, count)
        size = stop - start
        for j in range(len(nodes)):
            noise = _stream(seed, chunk, j).standard_normal(size) * scales[j]
            if len(parents[j]):
                noise = noise + values[start:stop, parents[j]] @ weights[j, parents[j]]
            values[start:stop, j] = noise
        rows[start:stop] = _stream(seed, chunk, len(nodes)).choice(
            len(probabilities), size=size, p=probabilities
        )

    atomic = pd.DataFrame(values, columns=labels)
    composite = _composite_values(system, values, label_index, rows)
    logger.debug(f"sampled {count} realizations with seed {seed}")
    return RealizationBatch(seed, count, system, atomic, composite, rows)


def fisher_z_test(data, a, b, conditioning=(), alpha=0.01):
    """
    Fisher-z test of zero partial correlation on sample data

    Args:
        data (pd.DataFrame): One column per variable
        a (str): First variable
        b (str): Second variable
        conditioning (iterable): Conditioning variables
        alpha (float): Significance level

    Returns:
        CiResult: independent iff p-value > alpha
    """
    conditioning = sorted(conditioning)
    samples = len(data)
    if samples < len(conditioning) + 4:
        raise InsufficientSamples(
            f"{samples} samples cannot test with {len(conditioning)} conditioning variables"
        )
    if a == b:
        raise SameVariable(f"independence of {a} with itself is not a query")
    if a in conditioning or b in conditioning:
        raise InvalidQuery(f"conditioning set may not contain {a} or {b}")
    for name in (a, b, *conditioning):
        if name not in data.columns:
            raise UnknownVariable(f"no column named {name!r}")

    correlation = np.corrcoef(data[[a, b, *conditioning]].to_numpy().T)
    if conditioning:
        inverse = np.linalg.pinv(correlation)
        r = -inverse[0, 1] / math.sqrt(inverse[0, 0] * inverse[1, 1])
    else:
        r = correlation[0, 1]
    r = float(np.clip(r, -1 + 1e-15, 1 - 1e-15))
    statistic = math.sqrt(samples - len(conditioning) - 3) * abs(math.atanh(r))
    p_value = float(2 * norm.sf(statistic))
    return CiResult(p_value > alpha, statistic, p_value)


def ci_test_empirical(batch, a, b, conditioning=(), alpha=0.01):
    """Fisher-z test on the composite values of a sampled batch."""
    return fisher_z_test(batch.composite_values(), a, b, conditioning, alpha)


class EmpiricalOracle:
    """Memoised Fisher-z oracle over one batch."""

    def __init__(self, batch, alpha=0.01):
        self.batch = batch
        self.alpha = alpha
        self._cache = {}

    def test(self, a, b, conditioning=()):
        key = (frozenset((a, b)), frozenset(conditioning))
        if key not in self._cache:
            self._cache[key] = ci_test_empirical(self.batch, a, b, conditioning, self.alpha)
        return self._cache[key]

    def __call__(self, a, b, conditioning=()):
        return self.test(a, b, conditioning).independent
