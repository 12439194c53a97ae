"""
Modularity scoring and soft-to-hard partition rounding.

Q holds the edge scores q_{i,j} = e_{i,j}/T - w_out(i) w_in(j) / T^2.
Reported scores always include the diagonal; the optimiser works on a
zero-diagonal copy, which only shifts every partition's score by the same
constant (each node is always in its own community).
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from services.errors import DimensionMismatchError

logger = logging.getLogger(__name__)

# A single-node move must beat the current placement by more than this
IMPROVE_TOL = 1e-12
MAX_IMPROVEMENT_PASSES = 1000


class ModularityMatrix:
    """Dense n x n edge-score matrix, optionally with a zeroed diagonal."""

    def __init__(self, q, diagonal_zeroed=False, removed_diagonal=0.0):
        q = np.array(q, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise DimensionMismatchError(f"Modularity matrix must be square, got {q.shape}")
        q.setflags(write=False)
        self._q = q
        self.diagonal_zeroed = bool(diagonal_zeroed)
        # Sum of the q_{i,i} values that were zeroed out (0 for a full diagonal)
        self.removed_diagonal = float(removed_diagonal)

    @property
    def q(self):
        return self._q

    @property
    def n(self):
        return self._q.shape[0]

    @cached_property
    def symmetric(self):
        """(Q + Q^T) / 2; the soft score tr(C^T Q C) only sees this part."""
        sym = (self._q + self._q.T) / 2.0
        sym.setflags(write=False)
        return sym

    def zeroed(self):
        """Return a copy with q_{i,i} = 0, remembering what was removed."""
        if self.diagonal_zeroed:
            return self
        q = self._q.copy()
        removed = float(np.trace(q))
        np.fill_diagonal(q, 0.0)
        return ModularityMatrix(q, diagonal_zeroed=True, removed_diagonal=removed)

    def __repr__(self):
        return f"<ModularityMatrix n={self.n} diagonal_zeroed={self.diagonal_zeroed}>"


@dataclass(frozen=True, eq=False)
class Partition:
    """Hard community labels (compact, 0..m-1) and their modularity."""
    labels: np.ndarray
    score: float

    @property
    def m(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0

    @property
    def n(self):
        return int(self.labels.size)

    @classmethod
    def from_labels(cls, labels, score):
        compact = compact_labels(labels)
        compact.setflags(write=False)
        return cls(labels=compact, score=float(score))

    def to_dict(self):
        return {'score': self.score, 'm': self.m, 'n': self.n}

    def __repr__(self):
        return f"<Partition n={self.n} m={self.m} score={self.score:.6f}>"


def modularity_matrix(graph, zero_diagonal=False):
    """
    Build the modularity matrix of a graph.

    Args:
        graph: Graph
        zero_diagonal: If True, set q_{i,i} = 0 after computing it

    Returns:
        ModularityMatrix
    """
    # Normalising first keeps q bit-identical under integer rescaling of the weights
    share = graph.weights / graph.strengths.total
    q = share - np.outer(share.sum(axis=1), share.sum(axis=0))
    mm = ModularityMatrix(q)
    return mm.zeroed() if zero_diagonal else mm


def compact_labels(labels):
    """Relabel communities 0..m-1 in order of first appearance."""
    labels = np.asarray(labels)
    if labels.size == 0:
        return labels.astype(np.int64)
    _, first_index, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first_index.size, dtype=np.int64)
    rank[np.argsort(first_index)] = np.arange(first_index.size)
    return rank[inverse.reshape(-1)]


def labels_to_attachment(labels, m):
    """Expand hard labels into a binary n x m attachment matrix."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= m):
        raise DimensionMismatchError(f"Labels must lie in [0, {m}), got range "
                                     f"[{labels.min()}, {labels.max()}]")
    attachment = np.zeros((labels.size, m), dtype=np.float64)
    attachment[np.arange(labels.size), labels] = 1.0
    return attachment


def _check_labels(mm, labels):
    labels = np.asarray(labels)
    if labels.shape != (mm.n,):
        raise DimensionMismatchError(f"Expected {mm.n} labels, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise DimensionMismatchError("Community labels must be integers")
    if labels.size and (labels.min() < 0 or labels.max() >= mm.n):
        raise DimensionMismatchError(f"Community labels must lie in [0, {mm.n})")
    return labels


def _same_community_sum(q, labels):
    same = labels[:, None] == labels[None, :]
    return float(q[same].sum())


def partition_modularity(mm, labels):
    """Modularity M = sum of q_{i,j} over same-community pairs (full diagonal)."""
    if mm.diagonal_zeroed:
        raise DimensionMismatchError(
            "partition_modularity needs a full-diagonal matrix; use discrete_score"
        )
    labels = _check_labels(mm, labels)
    return _same_community_sum(mm.q, labels)


def discrete_score(mm, labels):
    """Full-diagonal modularity of a labeling, whichever diagonal mm carries."""
    labels = _check_labels(mm, labels)
    return _same_community_sum(mm.q, labels) + mm.removed_diagonal


def soft_modularity(mm, attachment):
    """Soft modularity tr(C^T Q C) of an n x m attachment matrix."""
    attachment = np.asarray(attachment, dtype=np.float64)
    if attachment.ndim != 2 or attachment.shape[0] != mm.n:
        raise DimensionMismatchError(
            f"Attachment of shape {attachment.shape} does not match {mm.n} nodes"
        )
    return float(np.sum(attachment * (mm.q @ attachment)))


def binarize(attachment, mm):
    """
    Round a soft attachment matrix to a hard partition.

    Row-wise argmax gives the reference labels. Rows are then replaced one
    by one with the one-hot vertex of highest linear coefficient (keeping
    the argmax label on ties), and single-node improvement passes run until
    no move increases the score. With a zero diagonal the soft score is
    linear in each row, so neither step can lower it.

    Returns:
        Partition scored with the full diagonal
    """
    attachment = np.asarray(attachment, dtype=np.float64)
    if attachment.ndim != 2 or attachment.shape[0] != mm.n:
        raise DimensionMismatchError(
            f"Attachment of shape {attachment.shape} does not match {mm.n} nodes"
        )
    mm = mm.zeroed()
    q_sym = mm.symmetric
    n, m = attachment.shape

    labels = np.argmax(attachment, axis=1)
    current = attachment.copy()
    gains = q_sym @ current

    for i in range(n):
        row_gain = gains[i]
        best = int(np.argmax(row_gain))
        choice = labels[i] if row_gain[labels[i]] >= row_gain[best] else best
        delta = -current[i]
        delta[choice] += 1.0
        changed = np.flatnonzero(delta)
        if changed.size:
            gains[:, changed] += np.outer(q_sym[:, i], delta[changed])
        current[i] = 0.0
        current[i, choice] = 1.0
        labels[i] = choice

    labels = compact_labels(_improve_labels(q_sym, labels, gains))
    return Partition.from_labels(labels, discrete_score(mm, labels))


def _improve_labels(q_sym, labels, gains):
    """Sequential single-node moves; gains[i, p] = (Q_s)_i H_p for the binary H."""
    labels = labels.copy()
    n = labels.size
    for sweep in range(MAX_IMPROVEMENT_PASSES):
        moved = 0
        for i in range(n):
            row_gain = gains[i]
            current = labels[i]
            best = int(np.argmax(row_gain))
            if row_gain[best] > row_gain[current] + IMPROVE_TOL:
                column = q_sym[:, i]
                gains[:, current] -= column
                gains[:, best] += column
                labels[i] = best
                moved += 1
        if not moved:
            break
        logger.debug(f"Improvement sweep {sweep}: moved {moved} nodes")
    return labels
