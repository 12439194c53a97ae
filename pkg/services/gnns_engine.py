"""
GNNS: recurrent community-attachment updates with a staged population search.

Each candidate carries a row-stochastic attachment matrix C (n x m) and two
free parameters (f0, f1); f2 follows from f0 + f1 + f2 = 1. One step is

    A = Q C,  t_i = max_p A_{i,p}
    c~_{i,p} = ReLU(f1 c_{i,p} + f2 A_{i,p} / t_i + f0)
    c_{i,p} = c~_{i,p} / sum_p c~_{i,p}

The search starts from S random candidates and narrows the population at
every stage boundary, recombining the survivors' attachments and
parameters.
"""
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from joblib import Parallel, delayed

from services.errors import ConfigError, DimensionMismatchError
from services.modularity import binarize

logger = logging.getLogger(__name__)

# Floor for the row normaliser t_i; keeps the update finite when max_p Q_i C_p <= 0
NORMALIZER_EPS = 1e-12
DEFAULT_MAX_COMMUNITIES = 32
DEFAULT_STAGE_ITERS = (10, 10, 30)
DEFAULT_SURVIVOR_FRACS = (Fraction(1, 3), Fraction(1, 9))


@dataclass(frozen=True)
class HyperParams:
    """Update coefficients; f2 is always derived from the balancing equation."""
    f0: float
    f1: float

    def __post_init__(self):
        if not -1.0 <= self.f0 <= 0.0:
            raise ConfigError(f"f0 must lie in [-1, 0], got {self.f0}")
        if not 0.0 <= self.f1 <= 1.0:
            raise ConfigError(f"f1 must lie in [0, 1], got {self.f1}")

    @property
    def f2(self):
        return 1.0 - self.f1 - self.f0

    def to_dict(self):
        return {'f0': self.f0, 'f1': self.f1, 'f2': self.f2}


@dataclass(frozen=True, eq=False)
class Candidate:
    """One population member: attachment matrix, parameters and last score."""
    attachment: np.ndarray
    params: HyperParams
    score: float = float('-inf')
    partition: object = None

    @property
    def n(self):
        return self.attachment.shape[0]

    @property
    def m(self):
        return self.attachment.shape[1]


@dataclass(frozen=True)
class ScheduleConfig:
    """
    Population schedule of the search.

    samples is the initial population size S. After stage k the best
    max(1, floor(S * survivor_fracs[k])) candidates survive and are
    recombined up to the previous survivor count (S after the first stage).
    """
    samples: int = 100
    stage_iters: tuple = DEFAULT_STAGE_ITERS
    survivor_fracs: tuple = DEFAULT_SURVIVOR_FRACS
    max_communities: int = None
    seed: int = None
    n_jobs: int = 1
    # Upper bound on m when max_communities is not given explicitly
    community_cap: int = DEFAULT_MAX_COMMUNITIES

    def __post_init__(self):
        object.__setattr__(self, 'stage_iters', tuple(int(i) for i in self.stage_iters))
        object.__setattr__(self, 'survivor_fracs',
                           tuple(Fraction(f).limit_denominator(10 ** 6) for f in self.survivor_fracs))
        self.validate()

    @property
    def S(self):
        return self.samples

    def validate(self):
        if self.samples < 3:
            raise ConfigError(f"Population size S must be at least 3, got {self.samples}")
        if not self.stage_iters:
            raise ConfigError("At least one stage is required")
        if any(iters < 1 for iters in self.stage_iters):
            raise ConfigError(f"Stage iteration counts must be >= 1, got {self.stage_iters}")
        if len(self.survivor_fracs) != len(self.stage_iters) - 1:
            raise ConfigError(
                f"{len(self.stage_iters)} stages need {len(self.stage_iters) - 1} survivor "
                f"fractions, got {len(self.survivor_fracs)}"
            )
        previous = Fraction(1)
        for frac in self.survivor_fracs:
            if not 0 < frac <= previous:
                raise ConfigError(f"Survivor fractions must be non-increasing in (0, 1], got "
                                  f"{[str(f) for f in self.survivor_fracs]}")
            previous = frac
        if self.max_communities is not None and self.max_communities < 2:
            raise ConfigError(f"Community cap m must be at least 2, got {self.max_communities}")
        if self.community_cap < 2:
            raise ConfigError(f"Community cap must be at least 2, got {self.community_cap}")
        if self.n_jobs == 0:
            raise ConfigError("n_jobs must be nonzero")

    def survivor_counts(self):
        return [max(1, int(self.samples * frac)) for frac in self.survivor_fracs]

    def population_sizes(self):
        """Population size at the start of each stage."""
        counts = self.survivor_counts()
        if not counts:
            return [self.samples]
        return [self.samples, self.samples] + counts[:-1]

    def communities_for(self, n):
        if self.max_communities is not None:
            return self.max_communities
        return max(2, min(n, self.community_cap))


@dataclass(frozen=True, eq=False)
class SearchResult:
    """Outcome of a population search."""
    partition: object
    params: HyperParams
    attachment: np.ndarray
    history: tuple = field(default=())


def init_candidate(n, m, rng):
    """Random row-stochastic attachment plus random (f0, f1)."""
    if n < 2 or m < 2:
        raise ConfigError(f"Need n >= 2 and m >= 2, got n={n}, m={m}")
    raw = rng.random((n, m))
    sums = raw.sum(axis=1, keepdims=True)
    attachment = np.where(sums > 0, raw / np.where(sums > 0, sums, 1.0), 1.0 / m)
    f0 = float(rng.uniform(-1.0, 0.0))
    f1 = float(rng.uniform(0.0, 1.0))
    return Candidate(attachment=attachment, params=HyperParams(f0=f0, f1=f1))


def gnns_step(mm, candidate):
    """
    Advance a candidate by one synchronous update.

    mm should carry a zeroed diagonal. Rows whose ReLU output is all zero
    (or not finite) restart from the uniform attachment 1/m.
    """
    attachment = candidate.attachment
    if attachment.ndim != 2 or attachment.shape[0] != mm.n:
        raise DimensionMismatchError(
            f"Attachment of shape {attachment.shape} does not match {mm.n} nodes"
        )
    params = candidate.params
    m = attachment.shape[1]

    aggregated = mm.q @ attachment
    scale = np.maximum(aggregated.max(axis=1), NORMALIZER_EPS)
    updated = params.f1 * attachment + params.f2 * (aggregated / scale[:, None]) + params.f0
    updated = np.maximum(updated, 0.0)

    sums = updated.sum(axis=1)
    alive = np.isfinite(sums) & (sums > 0)
    result = np.full_like(updated, 1.0 / m)
    result[alive] = updated[alive] / sums[alive, None]
    return replace(candidate, attachment=result)


def _advance(mm, candidate, iters):
    for _ in range(iters):
        candidate = gnns_step(mm, candidate)
    partition = binarize(candidate.attachment, mm)
    return replace(candidate, partition=partition, score=partition.score)


def run_stage(mm, population, iters, n_jobs=1):
    """
    Run `iters` updates on every candidate, then rescore each one as the
    full-diagonal modularity of its binarized attachment.
    """
    if iters < 1:
        raise ConfigError(f"Stage needs at least one iteration, got {iters}")
    mm = mm.zeroed()
    return Parallel(n_jobs=n_jobs, prefer='threads')(
        delayed(_advance)(mm, candidate, iters) for candidate in population
    )


def select_survivors(population, count):
    """Best `count` candidates by score; ties go to the lower index."""
    order = sorted(range(len(population)), key=lambda k: (-population[k].score, k))
    return [population[k] for k in order[:count]]


def shuffle_population(survivors, target, rng):
    """
    Keep the survivors and top the population up to `target` with members
    that take the attachment of one random survivor and the parameters of
    another.
    """
    if not survivors:
        raise ConfigError("Cannot recombine an empty survivor batch")
    if target < len(survivors):
        raise ConfigError(f"Target size {target} is below the survivor count {len(survivors)}")
    population = list(survivors)
    extra = target - len(survivors)
    if extra == 0:
        return population
    for _ in range(extra):
        source = survivors[int(rng.integers(len(survivors)))]
        donor = survivors[int(rng.integers(len(survivors)))]
        population.append(Candidate(
            attachment=source.attachment.copy(),
            params=donor.params,
            score=source.score,
            partition=source.partition,
        ))
    return population


class GNNSEngine:
    """Population search driver."""

    def search(self, mm, config, rng=None):
        """
        Run the staged search and return the best partition seen.

        Args:
            mm: ModularityMatrix (the diagonal is zeroed internally)
            config: ScheduleConfig
            rng: numpy Generator; defaults to one seeded with config.seed

        Returns:
            SearchResult
        """
        config.validate()
        if rng is None:
            rng = np.random.default_rng(config.seed)
        mm = mm.zeroed()
        n = mm.n
        m = config.communities_for(n)
        survivor_counts = config.survivor_counts()
        population_sizes = config.population_sizes()

        population = [init_candidate(n, m, child) for child in rng.spawn(config.samples)]
        best = None
        history = []

        for stage, iters in enumerate(config.stage_iters):
            if stage > 0:
                survivors = select_survivors(population, survivor_counts[stage - 1])
                population = shuffle_population(survivors, population_sizes[stage], rng)
            population = run_stage(mm, population, iters, n_jobs=config.n_jobs)
            leader = select_survivors(population, 1)[0]
            if best is None or leader.score > best.score:
                best = leader
            history.append(best.score)
            logger.info(
                f"GNNS stage {stage + 1}: population={len(population)} iters={iters} "
                f"stage_best={leader.score:.6f} best={best.score:.6f}"
            )

        return SearchResult(
            partition=best.partition,
            params=best.params,
            attachment=best.attachment,
            history=tuple(history),
        )


def gnns_search(mm, config, rng=None):
    """Return the best binarized partition found by the staged search."""
    return gnns_engine.search(mm, config, rng).partition


# Shared singleton instance
gnns_engine = GNNSEngine()
