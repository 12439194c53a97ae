"""
Partition comparison metrics.
"""
import numpy as np
from sklearn.metrics import normalized_mutual_info_score

from services.errors import DimensionMismatchError


def _labels(partition):
    labels = getattr(partition, 'labels', partition)
    return np.asarray(labels)


def nmi(a, b):
    """
    Normalized mutual information with the arithmetic-mean normaliser.

    Two single-community labelings give 1.0; exactly one single-community
    side gives 0.0.

    Args:
        a, b: Partition objects or label sequences of equal length
    """
    labels_a = _labels(a)
    labels_b = _labels(b)
    if labels_a.shape != labels_b.shape:
        raise DimensionMismatchError(
            f"Partitions cover different node counts: {labels_a.size} vs {labels_b.size}"
        )
    score = normalized_mutual_info_score(labels_a, labels_b, average_method='arithmetic')
    return float(np.clip(score, 0.0, 1.0))
