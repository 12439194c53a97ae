"""
Temporal fine-tuning: warm up once on aggregated layers, then carry the
partition from layer to layer with a short run of GNNS updates.
"""
import logging
import time
from dataclasses import dataclass

import numpy as np

from services.errors import ConfigError, GraphFormatError, NodeSpaceMismatchError
from services.gnns_engine import Candidate, gnns_engine, gnns_step
from services.graph_core import aggregate_graphs
from services.modularity import (
    Partition, binarize, discrete_score, labels_to_attachment, modularity_matrix,
)

logger = logging.getLogger(__name__)

DEFAULT_FINE_TUNE_ITERS = 20


@dataclass(frozen=True)
class WarmupSpec:
    """Which layers feed the warm-up search: all of them, or the first k."""
    mode: str = 'aggregate'
    k: int = None

    def __post_init__(self):
        if self.mode not in ('aggregate', 'first_k'):
            raise ConfigError(f"Unknown warm-up mode '{self.mode}'")
        if self.mode == 'first_k' and (self.k is None or self.k < 1):
            raise ConfigError(f"first_k warm-up needs k >= 1, got {self.k}")

    @classmethod
    def parse(cls, text):
        """Parse 'aggregate' or 'first:K'."""
        text = (text or 'aggregate').strip().lower()
        if text == 'aggregate':
            return cls()
        if text.startswith('first:'):
            try:
                return cls(mode='first_k', k=int(text.split(':', 1)[1]))
            except ValueError:
                raise ConfigError(f"Invalid warm-up spec '{text}'") from None
        raise ConfigError(f"Invalid warm-up spec '{text}', expected 'aggregate' or 'first:K'")

    def select(self, layers):
        if self.mode == 'aggregate':
            return list(layers)
        if self.k > len(layers):
            raise ConfigError(f"Warm-up wants {self.k} layers but only {len(layers)} exist")
        return list(layers[:self.k])

    def __str__(self):
        return 'aggregate' if self.mode == 'aggregate' else f"first:{self.k}"


@dataclass(frozen=True, eq=False)
class LayerResult:
    index: int
    partition: Partition
    elapsed: float
    tuned_score: float

    @property
    def fine_tuned(self):
        """False when the carried partition outscored the tuned one and was kept."""
        return self.partition.score == self.tuned_score


@dataclass(frozen=True, eq=False)
class TemporalResult:
    warmup: object
    warmup_elapsed: float
    layers: tuple

    def as_pairs(self):
        """(layer index, Partition) pairs in layer order."""
        return [(layer.index, layer.partition) for layer in self.layers]


def fine_tune(mm, labels, params, m, iters):
    """
    Seed one candidate with a hard partition, run `iters` updates and
    binarize. The carried partition is kept when the tuned one scores lower.

    Returns:
        (kept Partition, tuned Partition)
    """
    mm = mm.zeroed()
    labels = np.asarray(labels)
    m = max(m, int(labels.max()) + 1)
    candidate = Candidate(attachment=labels_to_attachment(labels, m), params=params)
    for _ in range(iters):
        candidate = gnns_step(mm, candidate)
    tuned = binarize(candidate.attachment, mm)
    carried_score = discrete_score(mm, labels)
    if tuned.score >= carried_score:
        return tuned, tuned
    return Partition.from_labels(labels, carried_score), tuned


def temporal_search(layers, config, warmup='aggregate', fine_tune_iters=DEFAULT_FINE_TUNE_ITERS,
                    rng=None, clock=time.perf_counter):
    """
    Partition an ordered series of layers sharing one node space.

    Args:
        layers: ordered list of Graph
        config: ScheduleConfig for the warm-up search
        warmup: WarmupSpec or its text form
        fine_tune_iters: GNNS updates per layer
        rng: numpy Generator; defaults to one seeded with config.seed
        clock: time source for the per-layer elapsed times

    Returns:
        TemporalResult
    """
    layers = list(layers)
    if not layers:
        raise GraphFormatError("Temporal search needs at least one layer")
    if fine_tune_iters < 1:
        raise ConfigError(f"fine_tune_iters must be >= 1, got {fine_tune_iters}")
    first = layers[0]
    for index, layer in enumerate(layers):
        if not first.same_node_space(layer):
            raise NodeSpaceMismatchError(f"Layer {index} has a different node space than layer 0")
    if not isinstance(warmup, WarmupSpec):
        warmup = WarmupSpec.parse(warmup)
    if rng is None:
        rng = np.random.default_rng(config.seed)

    started = clock()
    warmup_graph = aggregate_graphs(warmup.select(layers))
    warm = gnns_engine.search(modularity_matrix(warmup_graph, zero_diagonal=True), config, rng)
    warmup_elapsed = clock() - started
    logger.info(
        f"Temporal warm-up ({warmup}) on {len(warmup.select(layers))} layers: "
        f"score={warm.partition.score:.6f} in {warmup_elapsed:.3f}s"
    )

    m = config.communities_for(first.n)
    labels = warm.partition.labels
    results = []
    for index, layer in enumerate(layers):
        started = clock()
        mm = modularity_matrix(layer, zero_diagonal=True)
        partition, tuned = fine_tune(mm, labels, warm.params, m, fine_tune_iters)
        elapsed = clock() - started
        results.append(LayerResult(index=index, partition=partition, elapsed=elapsed,
                                   tuned_score=tuned.score))
        labels = partition.labels
        logger.debug(f"Layer {index}: score={partition.score:.6f} m={partition.m} ({elapsed:.4f}s)")

    return TemporalResult(warmup=warm, warmup_elapsed=warmup_elapsed, layers=tuple(results))
