"""
Exhaustive modularity maximisation for very small graphs.

Enumerates every set partition as a restricted-growth string
(a_0 = 0, a_i <= 1 + max(a_0..a_{i-1})) and scores it incrementally.
"""
import logging

import numpy as np

from services.errors import ConfigError
from services.modularity import Partition, modularity_matrix

logger = logging.getLogger(__name__)

DEFAULT_MAX_NODES = 12


def brute_force_partition(graph, max_n=DEFAULT_MAX_NODES):
    """
    Return the modularity-optimal partition of a small graph.

    Ties keep the first partition in enumeration order, so the
    all-in-one partition wins any tie it takes part in.
    """
    n = graph.n
    if n > max_n:
        raise ConfigError(f"Exhaustive search is limited to {max_n} nodes, graph has {n}")

    q = modularity_matrix(graph).q
    q_sym = q + q.T
    diagonal = float(np.trace(q))
    labels = np.zeros(n, dtype=np.int64)
    best = {'score': float('-inf'), 'labels': None}

    def visit(i, blocks, score):
        if i == n:
            total = score + diagonal
            if total > best['score']:
                best['score'] = total
                best['labels'] = labels.copy()
            return
        for block in range(blocks + 1):
            labels[i] = block
            # Pairs (i, j) with j < i that land in the same block
            previous = labels[:i] == block
            gain = float(q_sym[i, :i][previous].sum())
            visit(i + 1, max(blocks, block + 1), score + gain)

    labels[0] = 0
    visit(1, 1, 0.0)
    logger.debug(f"Exhaustive search on {n} nodes: best score {best['score']:.6f}")
    return Partition.from_labels(best['labels'], best['score'])
