"""
Best-of-N protocol for stochastic partitioners.
"""
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from services.errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BestOfResult:
    partition: object
    scores: tuple
    best_attempt: int

    @property
    def attempts(self):
        return len(self.scores)

    @property
    def running_best(self):
        """Cumulative maximum of the per-attempt scores."""
        return tuple(float(s) for s in np.maximum.accumulate(np.asarray(self.scores, dtype=np.float64)))

    def best_after(self, attempts):
        """Best score over the first `attempts` runs."""
        if not 1 <= attempts <= len(self.scores):
            raise ConfigError(f"attempts must lie in [1, {len(self.scores)}], got {attempts}")
        return max(self.scores[:attempts])


def best_of(runner, attempts, rng=None, n_jobs=1):
    """
    Run a partition procedure several times and keep the best result.

    Attempt k always receives the k-th child stream of rng, so the first
    k scores do not depend on how many attempts are requested in total.

    Args:
        runner: callable(rng) -> Partition
        attempts: number of runs (>= 1)
        rng: numpy Generator
        n_jobs: joblib worker count (thread backend)

    Returns:
        BestOfResult; ties go to the lowest attempt index
    """
    if attempts < 1:
        raise ConfigError(f"attempts must be >= 1, got {attempts}")
    if n_jobs == 0:
        raise ConfigError("n_jobs must be nonzero")
    if rng is None:
        rng = np.random.default_rng()

    children = rng.spawn(attempts)
    partitions = Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(runner)(child) for child in children
    )
    scores = tuple(float(p.score) for p in partitions)
    best_attempt = int(np.argmax(scores))
    logger.info(f"Best of {attempts}: attempt {best_attempt} scored {scores[best_attempt]:.6f}")
    return BestOfResult(partition=partitions[best_attempt], scores=scores, best_attempt=best_attempt)
