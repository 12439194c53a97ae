"""
Stochastic block model generation with planted ground truth.

Graphs are sampled with networkx and converted to dense Graph objects
over node labels "0".."N-1". sbm_series builds a sequence of layers
whose block memberships drift from one layer to the next.
"""
import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from services.errors import ConfigError
from services.graph_core import Graph

logger = logging.getLogger(__name__)

DEFAULT_P_OUT = 0.05


@dataclass(frozen=True)
class SbmSpec:
    """Block sizes, inter-block probability p_out and ratio nu = p_in / p_out."""
    block_sizes: tuple
    p_out: float = DEFAULT_P_OUT
    nu: float = 3.0
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, 'block_sizes', tuple(int(s) for s in self.block_sizes))
        if not self.block_sizes:
            raise ConfigError("SBM needs at least one block")
        if any(size < 1 for size in self.block_sizes):
            raise ConfigError(f"Block sizes must be >= 1, got {list(self.block_sizes)}")
        if not 0.0 < self.p_out <= 1.0:
            raise ConfigError(f"p_out must lie in (0, 1], got {self.p_out}")
        if self.nu < 1.0:
            raise ConfigError(f"nu must be >= 1, got {self.nu}")
        if self.p_in > 1.0:
            raise ConfigError(f"nu * p_out = {self.p_in:g} exceeds 1")

    @property
    def p_in(self):
        return self.nu * self.p_out

    @property
    def n(self):
        return sum(self.block_sizes)

    def probability_matrix(self):
        k = len(self.block_sizes)
        probs = np.full((k, k), self.p_out)
        np.fill_diagonal(probs, self.p_in)
        return probs

    def expected_edges(self):
        sizes = np.asarray(self.block_sizes, dtype=np.float64)
        within = float(np.sum(sizes * (sizes - 1) / 2.0)) * self.p_in
        cross_pairs = (sizes.sum() ** 2 - np.sum(sizes ** 2)) / 2.0
        return within + float(cross_pairs) * self.p_out

    def to_dict(self):
        return {
            'block_sizes': list(self.block_sizes),
            'p_out': self.p_out,
            'nu': self.nu,
            'seed': self.seed,
        }


@dataclass(frozen=True, eq=False)
class SbmSample:
    graph: Graph
    truth: np.ndarray
    seed: int = None
    metadata: dict = field(default_factory=dict)


def derive_seeds(seed, count):
    """Independent integer seeds for `count` samples derived from one seed."""
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


def _sample(sizes, probs, seed, nodelist, truth):
    n = int(sum(sizes))
    g = nx.stochastic_block_model(list(sizes), probs.tolist(), nodelist=nodelist, seed=seed)
    weights = nx.to_numpy_array(g, nodelist=range(n), weight=None)
    graph = Graph(weights, directed=False, node_labels=[str(i) for i in range(n)])
    return SbmSample(graph=graph, truth=np.asarray(truth, dtype=np.int64), seed=seed)


def sbm_generate(spec):
    """
    Sample an undirected simple SBM graph with unit weights.

    Returns:
        SbmSample whose truth[i] is the block of node i
    """
    truth = np.repeat(np.arange(len(spec.block_sizes)), spec.block_sizes)
    sample = _sample(spec.block_sizes, spec.probability_matrix(), spec.seed,
                     list(range(spec.n)), truth)
    logger.info(
        f"SBM blocks={list(spec.block_sizes)} nu={spec.nu} p_out={spec.p_out}: "
        f"{int(np.count_nonzero(np.triu(sample.graph.weights)))} edges"
    )
    return sample


def _drift(truth, k, drift, rng):
    """Move round(drift * n) nodes to another block without emptying any block."""
    truth = truth.copy()
    moves = int(round(drift * truth.size))
    if moves == 0 or k < 2:
        return truth
    sizes = np.bincount(truth, minlength=k)
    for node in rng.permutation(truth.size)[:moves]:
        own = truth[node]
        if sizes[own] <= 1:
            continue
        target = int(rng.choice([c for c in range(k) if c != own]))
        sizes[own] -= 1
        sizes[target] += 1
        truth[node] = target
    return truth


def sbm_series(spec, layers, drift=0.05, seed=None):
    """
    Generate `layers` SBM graphs over one node space with drifting blocks.

    Layer 0 uses the planted blocks of spec; each later layer first moves a
    `drift` fraction of nodes to a different block, then samples a fresh
    graph from the updated memberships.

    Returns:
        list of SbmSample
    """
    if layers < 1:
        raise ConfigError(f"layers must be >= 1, got {layers}")
    if not 0.0 <= drift <= 1.0:
        raise ConfigError(f"drift must lie in [0, 1], got {drift}")
    if seed is None:
        seed = spec.seed

    k = len(spec.block_sizes)
    probs = spec.probability_matrix()
    truth = np.repeat(np.arange(k), spec.block_sizes)
    samples = []
    for index, child in enumerate(np.random.default_rng(seed).spawn(layers)):
        if index > 0:
            truth = _drift(truth, k, drift, child)
        sizes = np.bincount(truth, minlength=k)
        nodelist = np.argsort(truth, kind='stable').tolist()
        layer_seed = int(child.integers(2 ** 32))
        samples.append(_sample(sizes.tolist(), probs, layer_seed, nodelist, truth))
        logger.debug(f"SBM layer {index}: block sizes {sizes.tolist()}")
    logger.info(f"SBM series: {layers} layers over {spec.n} nodes, drift={drift}")
    return samples
