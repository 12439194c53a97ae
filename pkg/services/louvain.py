"""
Louvain modularity heuristic for undirected weighted graphs.

Local-move phase in a seeded random node order, then aggregation of
communities into super-nodes (intra-community weight becomes a
self-loop), repeated while aggregation still merges something. The
result is finished with a flat local-move pass on the original graph,
re-entering aggregation whenever that pass moves nodes, so every output
is stable under single-node moves.
"""
import logging

import numpy as np
from scipy import sparse

from services.errors import UnsupportedGraphError
from services.modularity import Partition, compact_labels, modularity_matrix, partition_modularity

logger = logging.getLogger(__name__)

MAX_ROUNDS = 100


def _local_moves(weights, labels, rng):
    """
    Move nodes between communities while some move increases modularity.

    Gains are measured relative to the node sitting alone:
        w_{i,c} - tot_c * k_i / T
    Moving into an empty community (gain 0) is always one of the options.

    Returns:
        (labels, number of moves)
    """
    n = weights.shape[0]
    degree = weights.sum(axis=1)
    total = float(degree.sum())
    tol = 1e-12 * max(1.0, total)
    labels = labels.copy()
    community_total = np.bincount(labels, weights=degree, minlength=n).astype(np.float64)
    community_size = np.bincount(labels, minlength=n)
    moves = 0

    while True:
        moved = 0
        for i in rng.permutation(n):
            own = labels[i]
            community_total[own] -= degree[i]
            community_size[own] -= 1

            links = np.bincount(labels, weights=weights[i], minlength=n)
            links[own] -= weights[i, i]
            gain = links - community_total * degree[i] / total

            best, best_gain = own, gain[own]
            neighbours = np.flatnonzero(links > 0)
            if neighbours.size:
                candidate = neighbours[np.argmax(gain[neighbours])]
                if gain[candidate] > best_gain + tol:
                    best, best_gain = candidate, gain[candidate]
            if best_gain < -tol:
                best = int(np.flatnonzero(community_size == 0)[0])

            labels[i] = best
            community_total[best] += degree[i]
            community_size[best] += 1
            if best != own:
                moved += 1
        moves += moved
        if not moved:
            break
    return labels, moves


def _aggregate(weights, labels):
    """Collapse communities into super-nodes: W' = H^T W H."""
    n = labels.size
    k = int(labels.max()) + 1
    membership = sparse.csr_matrix((np.ones(n), (np.arange(n), labels)), shape=(n, k))
    return np.asarray(membership.T @ (membership.T @ weights.T).T)


def louvain(graph, rng=None):
    """
    Partition an undirected graph with the Louvain method.

    Args:
        graph: undirected Graph
        rng: numpy Generator driving the node visiting order

    Returns:
        Partition scored with the full-diagonal modularity
    """
    if graph.directed:
        raise UnsupportedGraphError("Louvain only handles undirected graphs; symmetrize first")
    if rng is None:
        rng = np.random.default_rng()

    weights = np.array(graph.weights, dtype=np.float64)
    membership = np.arange(graph.n)

    for round_no in range(MAX_ROUNDS):
        membership, _ = _local_moves(weights, membership, rng)
        membership = compact_labels(membership)

        merged = False
        level_weights = _aggregate(weights, membership)
        level = 0
        while level_weights.shape[0] > 1:
            sub, moves = _local_moves(level_weights, np.arange(level_weights.shape[0]), rng)
            if not moves:
                break
            sub = compact_labels(sub)
            membership = sub[membership]
            level_weights = _aggregate(level_weights, sub)
            merged = True
            level += 1
            logger.debug(f"Louvain round {round_no} level {level}: {level_weights.shape[0]} communities")

        if not merged:
            break

    score = partition_modularity(modularity_matrix(graph), membership)
    logger.info(f"Louvain: {int(membership.max()) + 1} communities, modularity={score:.6f}")
    return Partition.from_labels(membership, score)
