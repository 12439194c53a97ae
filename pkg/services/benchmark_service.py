"""
Benchmark orchestration: single partition runs, multi-dataset tables and
temporal timelines, with file reports and optional database records.
"""
import logging
import math
import os
import re
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import psutil
from django.conf import settings

from services.best_of import best_of
from services.errors import CommunityDetectionError, ConfigError, UnsupportedGraphError
from services.gnns_engine import ScheduleConfig, gnns_engine
from services.graph_core import load_graph, symmetrize
from services.louvain import louvain
from services.modularity import modularity_matrix
from services.reporting import read_manifest, write_json, write_partition, write_table
from services.temporal import temporal_search

logger = logging.getLogger(__name__)

AVG_ROW_LABEL = 'Avg % to best'
DIRECTED_MODES = ('symmetrize', 'original')
_GNNS_METHOD = re.compile(r'^gnns(\d*)$')


@dataclass(frozen=True)
class MethodSpec:
    name: str
    kind: str
    samples: int = None


def parse_method(name, default_samples=None):
    """
    Parse a method name: 'louvain', 'gnns' or 'gnns<S>' (e.g. gnns2500).
    """
    key = name.strip().lower()
    if key == 'louvain':
        return MethodSpec(name=key, kind='louvain')
    match = _GNNS_METHOD.match(key)
    if not match:
        raise ConfigError(f"Unknown method '{name}', expected 'louvain', 'gnns' or 'gnns<S>'")
    if match.group(1):
        samples = int(match.group(1))
    elif default_samples is not None:
        samples = default_samples
    else:
        samples = settings.GNNS_DEFAULT_SAMPLES
    return MethodSpec(name=key, kind='gnns', samples=samples)


def schedule_config(samples=None, max_communities=None, seed=None, n_jobs=None, stage_iters=None):
    """ScheduleConfig with project defaults filled in from settings."""
    return ScheduleConfig(
        samples=settings.GNNS_DEFAULT_SAMPLES if samples is None else samples,
        stage_iters=tuple(settings.GNNS_STAGE_ITERS if stage_iters is None else stage_iters),
        max_communities=max_communities,
        seed=seed,
        n_jobs=settings.GNNS_N_JOBS if n_jobs is None else n_jobs,
        community_cap=settings.GNNS_MAX_COMMUNITIES,
    )


def peak_rss_mb():
    """Peak resident set size of this process in MiB (current RSS where no peak is exposed)."""
    info = psutil.Process().memory_info()
    peak = getattr(info, 'peak_wset', None) or info.rss
    return round(peak / (1024 * 1024), 2)


@dataclass
class RunReport:
    dataset: str
    method: str
    score: float
    attempts: int
    wall_time: float
    seed: int
    partition_path: str
    scores: list = field(default_factory=list)
    n: int = 0
    m: int = 0
    peak_rss_mb: float = None

    def __post_init__(self):
        if self.scores and not math.isclose(self.score, max(self.scores), rel_tol=0, abs_tol=1e-12):
            raise ConfigError("Report score must equal the best per-attempt score")
        if self.wall_time < 0:
            raise ConfigError("Wall time cannot be negative")

    def to_dict(self):
        return asdict(self)


@dataclass
class TemporalReport:
    name: str
    layer_ids: list
    scores: list
    communities: list
    times: list
    ratios: list = None
    tuned_scores: list = None
    warmup: str = 'aggregate'
    warmup_time: float = 0.0
    timeline_path: str = None
    summary_path: str = None

    @property
    def total_time(self):
        return self.warmup_time + sum(self.times)

    def summary(self):
        summary = {
            'name': self.name,
            'layers': len(self.layer_ids),
            'warmup': self.warmup,
            'warmup_time': self.warmup_time,
            'fine_tune_time': sum(self.times),
            'total_time': self.total_time,
            'mean_score': float(np.mean(self.scores)),
            'mean_ratio': None,
            'beats_reference': None,
        }
        if self.tuned_scores is not None:
            summary['carried_layers'] = sum(s > t for s, t in zip(self.scores, self.tuned_scores))
        known = [r for r in (self.ratios or []) if r is not None]
        if known:
            summary['mean_ratio'] = float(np.mean(known))
            summary['beats_reference'] = float(np.mean([r > 1.0 for r in known]))
        return summary

    def rows(self):
        rows = []
        for k, layer_id in enumerate(self.layer_ids):
            row = {
                'layer': layer_id,
                'score': self.scores[k],
                'communities': self.communities[k],
                'time': self.times[k],
            }
            if self.tuned_scores is not None:
                row['tuned_score'] = self.tuned_scores[k]
            if self.ratios is not None:
                row['ratio'] = self.ratios[k]
            rows.append(row)
        return rows


class BenchmarkService:
    """Runs partitioners on datasets and writes their reports."""

    def __init__(self, clock=time.perf_counter):
        self.clock = clock

    # ------------------------------------------------------------------
    # Single runs
    # ------------------------------------------------------------------

    def load_dataset(self, path, format='edgelist', directed=False, directed_mode='symmetrize'):
        """Load a dataset, symmetrizing directed input unless directed_mode is 'original'."""
        if directed_mode not in DIRECTED_MODES:
            raise ConfigError(f"directed_mode must be one of {DIRECTED_MODES}, got '{directed_mode}'")
        graph = load_graph(path, format=format, treat_as='directed' if directed else 'undirected')
        if graph.directed and directed_mode == 'symmetrize':
            graph = symmetrize(graph)
        return graph

    def run_partition(self, graph, dataset, method, attempts=1, seed=None, out_dir=None,
                      samples=None, max_communities=None, n_jobs=None, record=None):
        """
        Optimise one graph with one method and write its reports.

        Only the optimisation itself is timed; building outputs is not.

        Returns:
            RunReport
        """
        spec = parse_method(method, samples)
        if spec.kind == 'louvain' and graph.directed:
            raise UnsupportedGraphError(
                f"Louvain cannot run on directed dataset '{dataset}'; symmetrize it first"
            )
        out_dir = out_dir or settings.GNNS_OUTPUT_DIR
        if n_jobs is None:
            n_jobs = settings.GNNS_N_JOBS
        rng = np.random.default_rng(seed)

        if spec.kind == 'gnns':
            config = schedule_config(spec.samples, max_communities, seed, n_jobs)
            inner_jobs = 1
        else:
            config = None
            inner_jobs = n_jobs

        started = self.clock()
        if config is not None:
            mm = modularity_matrix(graph, zero_diagonal=True)
            result = best_of(lambda child: gnns_engine.search(mm, config, child).partition,
                             attempts, rng, n_jobs=inner_jobs)
        else:
            result = best_of(lambda child: louvain(graph, child), attempts, rng, n_jobs=inner_jobs)
        wall_time = self.clock() - started

        partition = result.partition
        base = os.path.join(out_dir, f"{dataset}_{spec.name}")
        partition_path = write_partition(f"{base}.csv", graph.node_labels, partition.labels)
        report = RunReport(
            dataset=dataset,
            method=spec.name,
            score=partition.score,
            attempts=attempts,
            wall_time=wall_time,
            seed=seed,
            partition_path=partition_path,
            scores=list(result.scores),
            n=graph.n,
            m=partition.m,
            peak_rss_mb=peak_rss_mb(),
        )
        write_json(f"{base}.json", report.to_dict())
        logger.info(f"{dataset} / {spec.name}: score={report.score:.6f} m={report.m} "
                    f"time={wall_time:.3f}s attempts={attempts}")
        self._record_partition(report, record)
        return report

    def _record_partition(self, report, record):
        if not (settings.GNNS_RECORD_RUNS if record is None else record):
            return None
        try:
            from core.models import PartitionRun
            return PartitionRun.from_report(report)
        except Exception as e:
            logger.error(f"Could not record run {report.dataset}/{report.method}: {e}")
            return None

    # ------------------------------------------------------------------
    # Multi-dataset benchmark
    # ------------------------------------------------------------------

    def run_benchmark(self, manifest_path, methods, attempts=None, out_dir=None, seed=None,
                      directed_mode='symmetrize', gnns_attempts=1, max_communities=None,
                      n_jobs=None, record=None):
        """
        Run every method on every manifest dataset and write the aggregate table.

        Louvain gets `attempts` runs per dataset, GNNS methods `gnns_attempts`.
        A failing dataset/method pair is recorded and the run continues.

        Returns:
            dict with success, reports, failures, rows and table_path
        """
        if attempts is None:
            attempts = settings.GNNS_LOUVAIN_ATTEMPTS
        if attempts < 1 or gnns_attempts < 1:
            raise ConfigError(f"attempts must be >= 1, got {attempts} (louvain) and {gnns_attempts} (gnns)")
        out_dir = out_dir or settings.GNNS_OUTPUT_DIR
        specs = [parse_method(m) for m in methods]
        if not specs:
            raise ConfigError("At least one method is required")
        for spec in specs:
            if spec.kind == 'gnns':
                schedule_config(spec.samples, max_communities, seed, n_jobs)
        entries = read_manifest(manifest_path)

        reports = []
        failures = []
        rows = []
        for entry in entries:
            row = {'dataset': entry['name']}
            errors = []
            try:
                graph = self.load_dataset(entry['path'], entry['format'], entry['directed'], directed_mode)
            except CommunityDetectionError as e:
                logger.error(f"Dataset {entry['name']} failed to load: {e}")
                failures.append({'success': False, 'dataset': entry['name'], 'method': None, 'error': str(e)})
                graph = None
                errors.append(str(e))

            for spec in specs:
                row[f"{spec.name}_score"] = None
                row[f"{spec.name}_time"] = None
                if graph is None:
                    continue
                try:
                    report = self.run_partition(
                        graph, entry['name'], spec.name,
                        attempts=attempts if spec.kind == 'louvain' else gnns_attempts,
                        seed=seed, out_dir=out_dir, samples=spec.samples,
                        max_communities=max_communities, n_jobs=n_jobs, record=record,
                    )
                except CommunityDetectionError as e:
                    logger.error(f"{entry['name']} / {spec.name} failed: {e}")
                    failures.append({'success': False, 'dataset': entry['name'],
                                     'method': spec.name, 'error': str(e)})
                    errors.append(f"{spec.name}: {e}")
                    continue
                reports.append(report)
                row[f"{spec.name}_score"] = report.score
                row[f"{spec.name}_time"] = report.wall_time

            scores = [row[f"{s.name}_score"] for s in specs if row[f"{s.name}_score"] is not None]
            row['best_score'] = max(scores) if scores else None
            row['error'] = '; '.join(errors) or None
            rows.append(row)

        table = rows + [average_to_best_row(rows, [s.name for s in specs])]
        columns = ['dataset'] + [f"{s.name}_{kind}" for s in specs for kind in ('score', 'time')]
        columns += ['best_score', 'error']
        table_path = os.path.join(out_dir, 'benchmark.csv')
        write_table(table_path, table, columns=columns)
        logger.info(f"Benchmark: {len(entries)} datasets, {len(reports)} runs, {len(failures)} failures")
        return {
            'success': not failures,
            'reports': reports,
            'failures': failures,
            'rows': table,
            'table_path': table_path,
        }

    # ------------------------------------------------------------------
    # Temporal series
    # ------------------------------------------------------------------

    def run_temporal(self, layers, layer_ids=None, config=None, warmup='aggregate',
                     fine_tune_iters=None, reference=None, out_dir=None, name='temporal',
                     seed=None, record=None):
        """
        Run temporal fine-tuning over layers and write the timeline and summary.

        Args:
            layers: ordered list of Graph over one node space
            layer_ids: identifiers for the timeline (defaults to 0..L-1)
            reference: optional dict layer index -> externally produced score

        Returns:
            TemporalReport
        """
        layers = list(layers)
        layer_ids = list(layer_ids) if layer_ids is not None else list(range(len(layers)))
        if len(layer_ids) != len(layers):
            raise ConfigError(f"{len(layer_ids)} layer ids for {len(layers)} layers")
        if config is None:
            config = schedule_config(seed=seed)
        if fine_tune_iters is None:
            fine_tune_iters = settings.GNNS_FINE_TUNE_ITERS
        out_dir = out_dir or settings.GNNS_OUTPUT_DIR

        result = temporal_search(layers, config, warmup=warmup, fine_tune_iters=fine_tune_iters,
                                 rng=np.random.default_rng(config.seed if seed is None else seed),
                                 clock=self.clock)
        scores = [layer.partition.score for layer in result.layers]
        ratios = None
        if reference is not None:
            ratios = []
            for k, score in enumerate(scores):
                ref = reference.get(k)
                ratios.append(score / ref if ref else None)
                if ref and not 0.0 < score / ref <= 1.05:
                    logger.warning(f"Layer {layer_ids[k]}: ratio {score / ref:.4f} outside (0, 1.05]")

        report = TemporalReport(
            name=name,
            layer_ids=layer_ids,
            scores=scores,
            communities=[layer.partition.m for layer in result.layers],
            times=[layer.elapsed for layer in result.layers],
            ratios=ratios,
            tuned_scores=[layer.tuned_score for layer in result.layers],
            warmup=str(warmup),
            warmup_time=result.warmup_elapsed,
        )
        report.timeline_path = os.path.join(out_dir, f"{name}_timeline.csv")
        report.summary_path = os.path.join(out_dir, f"{name}_summary.json")
        write_table(report.timeline_path, report.rows())
        write_json(report.summary_path, report.summary())
        logger.info(f"Temporal {name}: {len(layers)} layers, mean score "
                    f"{np.mean(scores):.6f}, total {report.total_time:.3f}s")
        self._record_temporal(report, record)
        return report

    def _record_temporal(self, report, record):
        if not (settings.GNNS_RECORD_RUNS if record is None else record):
            return None
        try:
            from core.models import TemporalRun
            return TemporalRun.from_report(report)
        except Exception as e:
            logger.error(f"Could not record temporal run {report.name}: {e}")
            return None


def average_to_best_row(rows, methods):
    """
    Mean over datasets of 100 * score / best score, and of
    100 * time / fastest time, per method.
    """
    avg = {'dataset': AVG_ROW_LABEL}
    for method in methods:
        score_pct = []
        time_pct = []
        for row in rows:
            score = row.get(f"{method}_score")
            best = row.get('best_score')
            if score is not None and best:
                score_pct.append(100.0 * score / best)
            elapsed = row.get(f"{method}_time")
            times = [row.get(f"{m}_time") for m in methods if row.get(f"{m}_time") is not None]
            fastest = min(times) if times else None
            if elapsed is not None and fastest:
                time_pct.append(100.0 * elapsed / fastest)
        avg[f"{method}_score"] = float(np.mean(score_pct)) if score_pct else None
        avg[f"{method}_time"] = float(np.mean(time_pct)) if time_pct else None
    avg['best_score'] = None
    avg['error'] = None
    return avg


# Shared singleton instance
benchmark_service = BenchmarkService()
