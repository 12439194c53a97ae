"""
Test suite for the GNNS community detection project.
Covers: graph ingestion, modularity scoring and rounding, the GNNS engine,
temporal fine-tuning, Louvain and best-of runs, the exhaustive oracle,
NMI, SBM generation, report files and the management commands.

Full-scale sweeps run only with GNNS_RUN_SLOW_TESTS=true.
"""
import json
import os
import tempfile
from io import StringIO
from itertools import count
from unittest import skipUnless

import networkx as nx
import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from core.models import PartitionRun, TemporalLayer, TemporalRun
from services.benchmark_service import (
    AVG_ROW_LABEL, BenchmarkService, TemporalReport, average_to_best_row, parse_method,
    schedule_config,
)
from services.best_of import best_of
from services.errors import (
    ConfigError, DimensionMismatchError, GraphFormatError, NodeSpaceMismatchError,
    UnsupportedGraphError,
)
from services.gnns_engine import (
    Candidate, HyperParams, ScheduleConfig, gnns_engine, gnns_search, gnns_step,
    init_candidate, select_survivors, shuffle_population,
)
from services.graph_core import (
    Graph, aggregate_graphs, align_layers, graph_from_edges, graph_from_networkx, load_graph,
    scale_weights, symmetrize, write_edgelist, write_pajek,
)
from services.louvain import louvain
from services.metrics import nmi
from services.modularity import (
    ModularityMatrix, Partition, binarize, compact_labels, discrete_score, labels_to_attachment,
    modularity_matrix, partition_modularity, soft_modularity,
)
from services.oracle import brute_force_partition
from services.reporting import (
    align_partitions, read_manifest, read_partition_file, read_reference, write_partition,
)
from services.sbm import SbmSpec, derive_seeds, sbm_generate, sbm_series
from services.temporal import LayerResult, WarmupSpec, fine_tune, temporal_search

SLOW = settings.GNNS_RUN_SLOW_TESTS
DATASETS_DIR = str(settings.GNNS_DATASETS_DIR)
KARATE = os.path.join(DATASETS_DIR, 'karate.txt')
DUMBBELL = os.path.join(DATASETS_DIR, 'dumbbell.txt')
DUMBBELL_SCORE = 5.0 / 14.0
# Best four-community split of the karate club, 1-indexed member -> community
KARATE_FOUR_SPLIT = {
    **dict.fromkeys((1, 2, 3, 4, 8, 12, 13, 14, 18, 20, 22), 0),
    **dict.fromkeys((5, 6, 7, 11, 17), 1),
    **dict.fromkeys((9, 10, 15, 16, 19, 21, 23, 27, 30, 31, 33, 34), 2),
    **dict.fromkeys((24, 25, 26, 28, 29, 32), 3),
}


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def dumbbell():
    edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0), (2, 3, 1.0)]
    return graph_from_edges(6, edges)


def two_cliques(size=4):
    weights = np.zeros((2 * size, 2 * size))
    weights[:size, :size] = 1.0
    weights[size:, size:] = 1.0
    np.fill_diagonal(weights, 0.0)
    return Graph(weights)


def random_graph(rng, n, p=0.4, weighted=False, directed=False):
    """Random simple graph with at least one edge."""
    while True:
        mask = rng.random((n, n)) < p
        values = rng.uniform(0.5, 2.0, (n, n)) if weighted else np.ones((n, n))
        weights = np.where(mask, values, 0.0)
        np.fill_diagonal(weights, 0.0)
        if not directed:
            weights = np.triu(weights, 1)
            weights = weights + weights.T
        if weights.sum() > 0:
            return Graph(weights, directed=directed)


def random_attachment(rng, n, m):
    raw = rng.random((n, m)) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


def single_move_gain(graph, labels):
    """Largest modularity gain of moving one node to another or a new community."""
    mm = modularity_matrix(graph)
    base = partition_modularity(mm, labels)
    fresh = int(labels.max()) + 1
    best = 0.0
    for i in range(graph.n):
        for target in list(np.unique(labels)) + [fresh]:
            if target == labels[i]:
                continue
            moved = labels.copy()
            moved[i] = target
            best = max(best, partition_modularity(mm, compact_labels(moved)) - base)
    return best


def set_partitions(n):
    """Every partition of n nodes as a restricted-growth label array."""
    def grow(prefix, top):
        if len(prefix) == n:
            yield np.array(prefix)
            return
        for label in range(top + 2):
            yield from grow(prefix + [label], max(top, label))
    yield from grow([0], 0)


def write_text(path, text):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    return path


def read_bytes(path):
    with open(path, 'rb') as f:
        return f.read()


# ---------------------------------------------------------------------------
# 1. Graph core
# ---------------------------------------------------------------------------

class GraphCoreTests(SimpleTestCase):
    """Graph construction, file ingestion and writers."""

    def test_karate_edgelist_loads(self):
        graph = load_graph(KARATE)
        self.assertEqual(graph.n, 34)
        self.assertFalse(graph.directed)
        self.assertEqual(graph.total_weight, 156.0)
        np.testing.assert_array_equal(graph.weights, graph.weights.T)

    def test_strengths_match_total(self):
        graph = random_graph(np.random.default_rng(1), 12, weighted=True, directed=True)
        strengths = graph.strengths
        self.assertAlmostEqual(strengths.w_out.sum(), strengths.T, places=9)
        self.assertAlmostEqual(strengths.w_in.sum(), strengths.T, places=9)

    def test_undirected_self_loop_counted_once(self):
        graph = graph_from_edges(2, [(0, 0, 2.0), (0, 1, 1.0)])
        self.assertEqual(graph.weights[0, 0], 2.0)
        self.assertEqual(graph.weights[0, 1], 1.0)
        self.assertEqual(graph.weights[1, 0], 1.0)

    def test_duplicate_edges_accumulate(self):
        graph = graph_from_edges(2, [(0, 1, 1.0), (0, 1, 2.5)])
        self.assertEqual(graph.weights[0, 1], 3.5)

    def test_weights_are_read_only(self):
        graph = dumbbell()
        with self.assertRaises(ValueError):
            graph.weights[0, 1] = 5.0

    def test_invalid_adjacency_rejected(self):
        cases = {
            'negative': [[0, -1], [-1, 0]],
            'empty': [[0, 0], [0, 0]],
            'asymmetric': [[0, 1], [0, 0]],
            'not_square': [[0, 1, 1], [1, 0, 1]],
        }
        for name, weights in cases.items():
            with self.subTest(case=name):
                with self.assertRaises(GraphFormatError):
                    Graph(weights)

    def test_edgelist_comments_labels_and_weights(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(os.path.join(tmp, 'g.txt'), "# comment\n% other\nb a 2.5\na c\n\n")
            graph = load_graph(path)
        self.assertEqual(graph.node_labels, ('b', 'a', 'c'))
        self.assertEqual(graph.weights[0, 1], 2.5)
        self.assertEqual(graph.weights[1, 2], 1.0)

    def test_malformed_edgelist_errors(self):
        bad = {
            'fields': "a b 1 extra\n",
            'weight': "a b heavy\n",
            'negative': "a b -1\n",
            'no_edges': "# nothing\n",
        }
        with tempfile.TemporaryDirectory() as tmp:
            for name, text in bad.items():
                with self.subTest(case=name):
                    path = write_text(os.path.join(tmp, f'{name}.txt'), text)
                    with self.assertRaises(GraphFormatError):
                        load_graph(path)

    def test_missing_file_and_unknown_format(self):
        with self.assertRaises(GraphFormatError):
            load_graph('/nonexistent/graph.txt')
        with self.assertRaises(GraphFormatError):
            load_graph(KARATE, format='gml')

    def test_networkx_builtin_graphs(self):
        lesmis = load_graph('les_miserables', format='networkx')
        self.assertEqual(lesmis.n, 77)
        self.assertFalse(lesmis.directed)
        np.testing.assert_array_equal(lesmis.weights, graph_from_networkx(nx.les_miserables_graph()).weights)
        florentine = load_graph('florentine_families', format='networkx', treat_as='directed')
        self.assertTrue(florentine.directed)
        self.assertEqual(florentine.n, 15)
        self.assertEqual(florentine.total_weight, 40.0)
        with self.assertRaises(GraphFormatError):
            load_graph('petersen', format='networkx')

    def test_networkx_parallel_edges_keep_heaviest(self):
        g = nx.MultiGraph()
        g.add_edge('a', 'b', value=2.0)
        g.add_edge('a', 'b', value=3.0)
        g.add_edge('b', 'c')
        graph = graph_from_networkx(g, weight='value')
        self.assertEqual(graph.node_labels, ('a', 'b', 'c'))
        self.assertEqual(graph.weights[0, 1], 3.0)
        self.assertEqual(graph.weights[1, 2], 1.0)

    def test_pajek_edges_and_arcs(self):
        text = (
            '*Network demo\n'
            '*Vertices 3\n'
            '1 "Node A"\n'
            '2 "B"\n'
            '3 C\n'
            '*Edges\n'
            '1 2 2\n'
            '*Arcs\n'
            '2 3\n'
        )
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(os.path.join(tmp, 'g.net'), text)
            directed = load_graph(path, format='pajek', treat_as='directed')
        self.assertEqual(directed.node_labels, ('Node A', 'B', 'C'))
        self.assertEqual(directed.weights[0, 1], 2.0)
        self.assertEqual(directed.weights[1, 0], 2.0)
        self.assertEqual(directed.weights[1, 2], 1.0)
        self.assertEqual(directed.weights[2, 1], 0.0)

    def test_pajek_isolated_vertex_kept(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(os.path.join(tmp, 'g.net'), '*Vertices 4\n*Edges\n1 2\n2 3\n')
            graph = load_graph(path, format='pajek')
        self.assertEqual(graph.n, 4)
        self.assertEqual(graph.strengths.w_out[3], 0.0)

    def test_pajek_edge_out_of_range(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(os.path.join(tmp, 'g.net'), '*Vertices 2\n*Edges\n1 3\n')
            with self.assertRaises(GraphFormatError):
                load_graph(path, format='pajek')

    def test_symmetrize(self):
        graph = Graph([[0, 2, 0], [1, 0, 0], [0, 3, 0]], directed=True)
        sym = symmetrize(graph)
        self.assertFalse(sym.directed)
        np.testing.assert_array_equal(sym.weights, [[0, 3, 0], [3, 0, 3], [0, 3, 0]])

    def test_aggregate_graphs(self):
        a = dumbbell()
        total = aggregate_graphs([a, a, a])
        np.testing.assert_array_equal(total.weights, 3 * a.weights)
        other = Graph(np.ones((6, 6)), node_labels=list('abcdef'))
        with self.assertRaises(NodeSpaceMismatchError):
            aggregate_graphs([a, other])
        with self.assertRaises(GraphFormatError):
            aggregate_graphs([])

    def test_align_layers_reorders_nodes(self):
        first = Graph([[0, 1, 0], [1, 0, 2], [0, 2, 0]], node_labels=['x', 'y', 'z'])
        shuffled = Graph([[0, 2, 0], [2, 0, 1], [0, 1, 0]], node_labels=['z', 'y', 'x'])
        aligned = align_layers([first, shuffled])
        self.assertEqual(aligned[1].node_labels, first.node_labels)
        np.testing.assert_array_equal(aligned[1].weights, first.weights)
        stranger = Graph([[0, 1], [1, 0]], node_labels=['x', 'q'])
        with self.assertRaises(NodeSpaceMismatchError):
            align_layers([first, stranger])

    def test_written_files_reload_to_same_weights(self):
        graph = scale_weights(load_graph(KARATE), 0.3)
        with tempfile.TemporaryDirectory() as tmp:
            edgelist = load_graph(write_edgelist(graph, os.path.join(tmp, 'g.txt')))
            pajek = load_graph(write_pajek(graph, os.path.join(tmp, 'g.net')), format='pajek')
        np.testing.assert_array_equal(pajek.weights, graph.weights)
        self.assertEqual(pajek.node_labels, graph.node_labels)
        realigned = align_layers([graph, edgelist])[1]
        np.testing.assert_array_equal(realigned.weights, graph.weights)


# ---------------------------------------------------------------------------
# 2. Modularity
# ---------------------------------------------------------------------------

class ModularityTests(SimpleTestCase):
    """Modularity matrix, scoring and binarization."""

    def test_matrix_sums_to_zero(self):
        rng = np.random.default_rng(11)
        for k in range(20):
            graph = random_graph(rng, int(rng.integers(3, 15)), weighted=True, directed=bool(k % 2))
            with self.subTest(graph=k):
                self.assertAlmostEqual(modularity_matrix(graph).q.sum(), 0.0, delta=1e-9)

    def test_dumbbell_two_triangles(self):
        mm = modularity_matrix(dumbbell())
        self.assertAlmostEqual(partition_modularity(mm, np.array([0, 0, 0, 1, 1, 1])), DUMBBELL_SCORE, places=12)
        self.assertAlmostEqual(partition_modularity(mm, np.zeros(6, dtype=int)), 0.0, places=12)

    def test_score_invariant_under_weight_scaling(self):
        graph = load_graph(KARATE)
        labels = np.arange(34) % 4
        base = partition_modularity(modularity_matrix(graph), labels)
        for factor in (2, 7, 1000):
            with self.subTest(factor=factor):
                scaled = partition_modularity(modularity_matrix(scale_weights(graph, factor)), labels)
                self.assertAlmostEqual(base, scaled, places=12)

    def test_pair_sum_matches_soft_form_for_binary_attachment(self):
        rng = np.random.default_rng(5)
        for k in range(100):
            n = int(rng.integers(2, 16))
            graph = random_graph(rng, n, weighted=True, directed=bool(k % 2))
            labels = rng.integers(0, n, size=n)
            mm = modularity_matrix(graph)
            attachment = labels_to_attachment(labels, n)
            with self.subTest(case=k):
                self.assertAlmostEqual(partition_modularity(mm, labels), soft_modularity(mm, attachment), delta=1e-9)

    def test_discrete_score_restores_diagonal(self):
        graph = load_graph(KARATE)
        labels = np.arange(34) % 3
        full = modularity_matrix(graph)
        zeroed = modularity_matrix(graph, zero_diagonal=True)
        self.assertTrue(zeroed.diagonal_zeroed)
        self.assertEqual(float(np.abs(np.diag(zeroed.q)).sum()), 0.0)
        self.assertAlmostEqual(discrete_score(zeroed, labels), partition_modularity(full, labels), places=12)
        with self.assertRaises(DimensionMismatchError):
            partition_modularity(zeroed, labels)

    def test_label_validation(self):
        mm = modularity_matrix(dumbbell())
        with self.assertRaises(DimensionMismatchError):
            partition_modularity(mm, np.zeros(5, dtype=int))
        with self.assertRaises(DimensionMismatchError):
            partition_modularity(mm, np.array([0, 0, 0, 1, 1, 9]))
        with self.assertRaises(DimensionMismatchError):
            labels_to_attachment([0, 3], 2)

    def test_compact_labels_first_appearance(self):
        np.testing.assert_array_equal(compact_labels([5, 5, 2, 7, 2]), [0, 0, 1, 2, 1])
        partition = Partition.from_labels([3, 1, 3], 0.25)
        self.assertEqual(partition.m, 2)
        self.assertEqual(partition.to_dict(), {'score': 0.25, 'm': 2, 'n': 3})

    def test_binarize_never_lowers_soft_score(self):
        rng = np.random.default_rng(2024)
        for k in range(100):
            n = int(rng.integers(2, 21))
            m = int(rng.integers(2, n + 2))
            graph = random_graph(rng, n, weighted=True, directed=bool(k % 3 == 0))
            mm = modularity_matrix(graph, zero_diagonal=True)
            attachment = random_attachment(rng, n, m)
            partition = binarize(attachment, mm)
            hard = soft_modularity(mm, labels_to_attachment(partition.labels, partition.m))
            with self.subTest(case=k):
                self.assertGreaterEqual(hard, soft_modularity(mm, attachment) - 1e-9)
                self.assertAlmostEqual(partition.score, hard + mm.removed_diagonal, delta=1e-9)

    def test_binarize_keeps_clear_argmax(self):
        mm = modularity_matrix(dumbbell())
        attachment = np.array([[0.9, 0.1]] * 3 + [[0.1, 0.9]] * 3)
        partition = binarize(attachment, mm)
        np.testing.assert_array_equal(partition.labels, [0, 0, 0, 1, 1, 1])
        self.assertAlmostEqual(partition.score, DUMBBELL_SCORE, places=12)

    def test_binarize_shape_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            binarize(np.ones((5, 2)) / 2, modularity_matrix(dumbbell()))

    def test_binarize_uniform_dumbbell(self):
        partition = binarize(np.full((6, 2), 0.5), modularity_matrix(dumbbell()))
        np.testing.assert_array_equal(partition.labels, [0, 0, 0, 1, 1, 1])
        self.assertAlmostEqual(partition.score, DUMBBELL_SCORE, places=12)

    def test_diagonal_shift_keeps_ranking(self):
        rng = np.random.default_rng(17)
        for n in (6, 7, 8):
            weights = random_graph(rng, n, weighted=True).weights + np.diag(rng.uniform(0.5, 3.0, n))
            graph = Graph(weights)
            full = modularity_matrix(graph)
            zeroed = modularity_matrix(graph, zero_diagonal=True)
            partitions = list(set_partitions(n))
            exact = np.array([partition_modularity(full, labels) for labels in partitions])
            pairwise = np.array([discrete_score(zeroed, labels) - zeroed.removed_diagonal
                                 for labels in partitions])
            with self.subTest(n=n):
                np.testing.assert_allclose(exact - pairwise, np.trace(full.q), rtol=0, atol=1e-12)
                self.assertAlmostEqual(exact[int(np.argmax(pairwise))], exact.max(), delta=1e-12)

    def test_karate_four_community_split(self):
        graph = load_graph(KARATE)
        labels = np.array([KARATE_FOUR_SPLIT[int(label)] for label in graph.node_labels])
        self.assertAlmostEqual(partition_modularity(modularity_matrix(graph), labels), 0.419790, delta=1e-6)


# ---------------------------------------------------------------------------
# 3. GNNS engine
# ---------------------------------------------------------------------------

class GNNSEngineTests(SimpleTestCase):
    """Update rule, population schedule and search."""

    def test_hyperparams_balance(self):
        params = HyperParams(f0=-0.3, f1=0.5)
        self.assertAlmostEqual(params.f0 + params.f1 + params.f2, 1.0)
        for f0, f1 in [(0.1, 0.5), (-1.5, 0.5), (-0.5, 1.2), (-0.5, -0.1)]:
            with self.subTest(f0=f0, f1=f1):
                with self.assertRaises(ConfigError):
                    HyperParams(f0=f0, f1=f1)

    def test_step_preserves_row_stochastic(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for k in range(10000):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(2, 5))
            kind = k % 4
            if kind == 0:
                q = -rng.random((n, n))
            elif kind == 1:
                q = rng.normal(scale=1e6, size=(n, n))
            else:
                q = rng.normal(size=(n, n))
            np.fill_diagonal(q, 0.0)
            mm = ModularityMatrix(q, diagonal_zeroed=True)
            attachment = random_attachment(rng, n, m) if kind != 3 else labels_to_attachment(rng.integers(0, m, n), m)
            candidate = Candidate(attachment=attachment,
                                  params=HyperParams(f0=float(rng.uniform(-1, 0)), f1=float(rng.uniform(0, 1))))
            result = gnns_step(mm, candidate).attachment
            self.assertTrue(np.all(np.isfinite(result)))
            self.assertTrue(np.all(result >= 0))
            worst = max(worst, float(np.abs(result.sum(axis=1) - 1.0).max()))
        self.assertLessEqual(worst, 1e-9)

    def test_dead_rows_reset_to_uniform(self):
        mm = ModularityMatrix(-np.ones((3, 3)) + np.eye(3), diagonal_zeroed=True)
        candidate = Candidate(attachment=np.full((3, 2), 0.5), params=HyperParams(f0=-1.0, f1=0.0))
        result = gnns_step(mm, candidate).attachment
        np.testing.assert_allclose(result, 0.5)

    def test_step_worked_example(self):
        mm = ModularityMatrix([[0.0, 1.0], [1.0, 0.0]], diagonal_zeroed=True)
        attachment = np.array([[1.0, 0.0], [2.0 / 3.0, 1.0 / 3.0]])
        candidate = Candidate(attachment=attachment, params=HyperParams(f0=-0.2, f1=0.5))
        row = gnns_step(mm, candidate).attachment[0]
        np.testing.assert_allclose(row, [1.0 / 1.15, 0.15 / 1.15], rtol=0, atol=1e-12)
        np.testing.assert_allclose(row, [0.8696, 0.1304], rtol=0, atol=1e-4)

    def test_dumbbell_split_is_fixed_point(self):
        mm = modularity_matrix(dumbbell(), zero_diagonal=True)
        split = labels_to_attachment([0, 0, 0, 1, 1, 1], 2)
        for f0, f1 in [(-0.2, 0.5), (0.0, 0.0), (-1.0, 1.0), (-0.7, 0.1)]:
            with self.subTest(f0=f0, f1=f1):
                candidate = Candidate(attachment=split, params=HyperParams(f0=f0, f1=f1))
                np.testing.assert_allclose(gnns_step(mm, candidate).attachment, split, rtol=0, atol=1e-12)

    def test_karate_steps_stay_finite_over_seeds(self):
        mm = modularity_matrix(load_graph(KARATE), zero_diagonal=True)
        for seed in range(100):
            candidate = init_candidate(mm.n, 32, np.random.default_rng(seed))
            for _ in range(50):
                candidate = gnns_step(mm, candidate)
            attachment = candidate.attachment
            with self.subTest(seed=seed):
                self.assertTrue(np.all(np.isfinite(attachment)))
                self.assertTrue(np.all(attachment >= 0))
                np.testing.assert_allclose(attachment.sum(axis=1), 1.0, rtol=0, atol=1e-9)

    def test_init_candidate(self):
        candidate = init_candidate(10, 4, np.random.default_rng(0))
        self.assertEqual(candidate.attachment.shape, (10, 4))
        np.testing.assert_allclose(candidate.attachment.sum(axis=1), 1.0)
        with self.assertRaises(ConfigError):
            init_candidate(1, 4, np.random.default_rng(0))

    def test_schedule_config(self):
        config = ScheduleConfig(samples=100)
        self.assertEqual(config.survivor_counts(), [33, 11])
        self.assertEqual(config.population_sizes(), [100, 100, 33])
        self.assertEqual(config.communities_for(34), 32)
        self.assertEqual(ScheduleConfig(samples=100, max_communities=34).communities_for(34), 34)
        self.assertEqual(ScheduleConfig(samples=3).survivor_counts(), [1, 1])

    def test_invalid_schedules(self):
        bad = [
            {'samples': 2},
            {'samples': 100, 'stage_iters': ()},
            {'samples': 100, 'stage_iters': (10, 0, 30)},
            {'samples': 100, 'stage_iters': (10, 10)},
            {'samples': 100, 'survivor_fracs': (0.1, 0.5)},
            {'samples': 100, 'max_communities': 1},
        ]
        for kwargs in bad:
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ConfigError):
                    ScheduleConfig(**kwargs)

    def test_select_survivors_ties_to_lower_index(self):
        params = HyperParams(f0=-0.5, f1=0.5)
        population = [Candidate(attachment=np.ones((2, 2)) / 2, params=params, score=s)
                      for s in (0.1, 0.3, 0.3, 0.2)]
        survivors = select_survivors(population, 2)
        self.assertIs(survivors[0], population[1])
        self.assertIs(survivors[1], population[2])

    def test_shuffle_population(self):
        rng = np.random.default_rng(4)
        survivors = [init_candidate(5, 3, child) for child in rng.spawn(3)]
        population = shuffle_population(survivors, 9, rng)
        self.assertEqual(len(population), 9)
        self.assertEqual(population[:3], survivors)
        originals = {id(s.params) for s in survivors}
        for member in population[3:]:
            self.assertIn(id(member.params), originals)
        with self.assertRaises(ConfigError):
            shuffle_population(survivors, 2, rng)

    def test_dumbbell_reaches_optimum(self):
        mm = modularity_matrix(dumbbell())
        partition = gnns_search(mm, ScheduleConfig(samples=30), np.random.default_rng(1))
        self.assertAlmostEqual(partition.score, DUMBBELL_SCORE, places=12)
        self.assertEqual(partition.m, 2)

    def test_search_is_deterministic(self):
        mm = modularity_matrix(load_graph(KARATE))
        config = ScheduleConfig(samples=12, seed=99)
        first = gnns_engine.search(mm, config)
        second = gnns_engine.search(mm, config)
        np.testing.assert_array_equal(first.partition.labels, second.partition.labels)
        self.assertEqual(first.history, second.history)
        self.assertEqual(len(first.history), 3)
        self.assertEqual(list(first.history), sorted(first.history))

    def test_search_ignores_weight_scale(self):
        graph = load_graph(KARATE)
        config = ScheduleConfig(samples=20, max_communities=34)
        base = gnns_search(modularity_matrix(graph), config, np.random.default_rng(8))
        scaled = gnns_search(modularity_matrix(scale_weights(graph, 10)), config, np.random.default_rng(8))
        np.testing.assert_array_equal(base.labels, scaled.labels)
        self.assertEqual(base.score, scaled.score)

    def test_parallel_search_matches_serial(self):
        mm = modularity_matrix(dumbbell())
        serial = gnns_engine.search(mm, ScheduleConfig(samples=9, seed=5, n_jobs=1))
        threaded = gnns_engine.search(mm, ScheduleConfig(samples=9, seed=5, n_jobs=2))
        np.testing.assert_array_equal(serial.partition.labels, threaded.partition.labels)
        self.assertEqual(serial.history, threaded.history)

    def test_karate_quality(self):
        mm = modularity_matrix(load_graph(KARATE))
        partition = gnns_search(mm, ScheduleConfig(samples=100, max_communities=34), np.random.default_rng(7))
        self.assertGreaterEqual(partition.score, 0.41)

    def test_oracle_dominance_on_small_graphs(self):
        rng = np.random.default_rng(31)
        for k in range(10):
            graph = random_graph(rng, int(rng.integers(5, 8)))
            mm = modularity_matrix(graph)
            heuristic = gnns_search(mm, ScheduleConfig(samples=20, max_communities=graph.n), rng)
            exact = brute_force_partition(graph)
            with self.subTest(graph=k):
                self.assertLessEqual(heuristic.score, exact.score + 1e-9)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_karate_anchor_over_seeds(self):
        mm = modularity_matrix(load_graph(KARATE))
        hits = 0
        for seed in range(10):
            partition = gnns_search(mm, ScheduleConfig(samples=100, max_communities=34),
                                    np.random.default_rng(seed))
            hits += abs(partition.score - 0.419790) <= 1e-4
        self.assertGreaterEqual(hits, 9)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_oracle_equivalence_sweep(self):
        rng = np.random.default_rng(2022)
        matches = 0
        for k in range(50):
            graph = random_graph(rng, int(rng.integers(5, 10)))
            heuristic = gnns_search(modularity_matrix(graph),
                                    ScheduleConfig(samples=100, max_communities=graph.n), rng)
            exact = brute_force_partition(graph)
            self.assertLessEqual(heuristic.score, exact.score + 1e-9)
            matches += abs(heuristic.score - exact.score) <= 1e-9
        self.assertGreaterEqual(matches, 40)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_les_miserables(self):
        graph = load_graph('les_miserables', format='networkx')
        partition = gnns_search(modularity_matrix(graph), ScheduleConfig(samples=100),
                                np.random.default_rng(3))
        self.assertAlmostEqual(partition.score, 0.566688, delta=1e-3)


# ---------------------------------------------------------------------------
# 4. Temporal fine-tuning
# ---------------------------------------------------------------------------

class TemporalTests(SimpleTestCase):
    """Warm-up selection and per-layer fine-tuning."""

    def test_warmup_spec_parsing(self):
        self.assertEqual(WarmupSpec.parse('aggregate').mode, 'aggregate')
        spec = WarmupSpec.parse('first:3')
        self.assertEqual((spec.mode, spec.k), ('first_k', 3))
        self.assertEqual(str(spec), 'first:3')
        for text in ('first:0', 'first:x', 'latest'):
            with self.subTest(text=text):
                with self.assertRaises(ConfigError):
                    WarmupSpec.parse(text)
        with self.assertRaises(ConfigError):
            WarmupSpec.parse('first:5').select([dumbbell()] * 2)

    def test_stationary_series_is_flat(self):
        layers = [dumbbell()] * 5
        result = temporal_search(layers, ScheduleConfig(samples=30, seed=3), fine_tune_iters=5)
        self.assertEqual(len(result.layers), 5)
        for layer in result.layers:
            self.assertAlmostEqual(layer.partition.score, DUMBBELL_SCORE, places=12)
        self.assertEqual([index for index, _ in result.as_pairs()], list(range(5)))

    def test_stationary_series_never_decreases(self):
        layers = [load_graph(KARATE)] * 4
        result = temporal_search(layers, ScheduleConfig(samples=10, seed=8), fine_tune_iters=5)
        scores = [layer.partition.score for layer in result.layers]
        self.assertEqual(scores, sorted(scores))
        self.assertGreaterEqual(scores[0], result.warmup.partition.score - 1e-9)

    def test_fine_tune_never_below_carried(self):
        graph = load_graph(KARATE)
        mm = modularity_matrix(graph, zero_diagonal=True)
        labels = np.arange(34) % 2
        partition, tuned = fine_tune(mm, labels, HyperParams(f0=-0.2, f1=0.6), 4, 10)
        carried = discrete_score(mm, labels)
        self.assertGreaterEqual(partition.score, carried - 1e-9)
        self.assertEqual(partition.score, max(tuned.score, carried))
        if tuned.score >= carried:
            self.assertIs(partition, tuned)

    def test_tuned_score_reported_next_to_kept_score(self):
        kept = LayerResult(index=0, partition=Partition.from_labels([0, 1], 0.3), elapsed=0.0, tuned_score=0.2)
        self.assertFalse(kept.fine_tuned)
        report = TemporalReport(name='t', layer_ids=['a', 'b'], scores=[0.3, 0.4], communities=[2, 2],
                                times=[0.1, 0.1], tuned_scores=[0.2, 0.4])
        self.assertEqual(report.summary()['carried_layers'], 1)
        self.assertEqual([row['tuned_score'] for row in report.rows()], [0.2, 0.4])
        result = temporal_search([dumbbell()] * 3, ScheduleConfig(samples=10, seed=6), fine_tune_iters=3)
        for layer in result.layers:
            self.assertLessEqual(layer.tuned_score, layer.partition.score)

    def test_node_space_mismatch(self):
        other = Graph(np.ones((6, 6)) - np.eye(6), node_labels=list('abcdef'))
        with self.assertRaises(NodeSpaceMismatchError):
            temporal_search([dumbbell(), other], ScheduleConfig(samples=5))
        with self.assertRaises(GraphFormatError):
            temporal_search([], ScheduleConfig(samples=5))

    def test_injected_clock_times_each_layer(self):
        ticks = count()
        result = temporal_search([dumbbell()] * 3, ScheduleConfig(samples=5, seed=1),
                                 fine_tune_iters=2, clock=lambda: float(next(ticks)))
        self.assertEqual(result.warmup_elapsed, 1.0)
        self.assertEqual([layer.elapsed for layer in result.layers], [1.0, 1.0, 1.0])

    def test_first_k_warmup(self):
        layers = [dumbbell(), scale_weights(dumbbell(), 2.0), dumbbell()]
        result = temporal_search(layers, ScheduleConfig(samples=10, seed=2), warmup='first:1', fine_tune_iters=3)
        self.assertEqual(len(result.layers), 3)

    def test_drifting_series_close_to_fresh_search(self):
        spec = SbmSpec(block_sizes=(20, 20, 20), p_out=0.05, nu=8.0, seed=4)
        samples = sbm_series(spec, 5, drift=0.05, seed=4)
        layers = [s.graph for s in samples]
        config = ScheduleConfig(samples=30, seed=4)
        result = temporal_search(layers, config, fine_tune_iters=20)
        ratios = []
        for layer, tuned in zip(layers, result.layers):
            fresh = gnns_search(modularity_matrix(layer), config, np.random.default_rng(9))
            ratios.append(tuned.partition.score / fresh.score)
        self.assertGreaterEqual(float(np.mean(ratios)), 0.93)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_drifting_series_acceptance(self):
        spec = SbmSpec(block_sizes=(100, 100, 100), p_out=0.05, nu=3.0, seed=30)
        layers = [s.graph for s in sbm_series(spec, 30, drift=0.02, seed=30)]
        config = ScheduleConfig(samples=100, seed=30)
        service = BenchmarkService()
        ticks = service.clock
        result = temporal_search(layers, config, clock=ticks)
        temporal_time = result.warmup_elapsed + sum(layer.elapsed for layer in result.layers)
        fresh_time = 0.0
        ratios = []
        for layer, tuned in zip(layers, result.layers):
            started = ticks()
            fresh = gnns_search(modularity_matrix(layer), config, np.random.default_rng(1))
            fresh_time += ticks() - started
            ratios.append(tuned.partition.score / fresh.score)
        self.assertGreaterEqual(float(np.mean(ratios)), 0.97)
        self.assertLess(temporal_time, 0.6 * fresh_time)


# ---------------------------------------------------------------------------
# 5. Louvain and best-of
# ---------------------------------------------------------------------------

class LouvainTests(SimpleTestCase):
    """Louvain baseline and the best-of-N protocol."""

    def test_directed_input_rejected(self):
        graph = Graph([[0, 1], [0, 0]], directed=True)
        with self.assertRaises(UnsupportedGraphError):
            louvain(graph, np.random.default_rng(0))

    def test_two_cliques_exact(self):
        partition = louvain(two_cliques(), np.random.default_rng(0))
        np.testing.assert_array_equal(partition.labels, [0, 0, 0, 0, 1, 1, 1, 1])

    def test_dumbbell_matches_oracle(self):
        partition = louvain(dumbbell(), np.random.default_rng(2))
        self.assertAlmostEqual(partition.score, DUMBBELL_SCORE, places=12)

    def test_outputs_are_locally_optimal(self):
        rng = np.random.default_rng(17)
        for k in range(8):
            graph = random_graph(rng, int(rng.integers(8, 30)), p=0.2, weighted=bool(k % 2))
            partition = louvain(graph, rng)
            with self.subTest(graph=k):
                self.assertLessEqual(single_move_gain(graph, partition.labels.copy()), 1e-9)
                self.assertAlmostEqual(
                    partition.score, partition_modularity(modularity_matrix(graph), partition.labels), places=12
                )

    def test_best_of_twenty_on_karate(self):
        graph = load_graph(KARATE)
        result = best_of(lambda child: louvain(graph, child), 20, np.random.default_rng(0))
        self.assertGreaterEqual(result.partition.score, 0.4188)
        self.assertEqual(result.partition.score, max(result.scores))

    def test_single_attempt_matches_single_run(self):
        graph = load_graph(KARATE)
        result = best_of(lambda child: louvain(graph, child), 1, np.random.default_rng(12))
        child = np.random.default_rng(12).spawn(1)[0]
        np.testing.assert_array_equal(result.partition.labels, louvain(graph, child).labels)

    def test_best_scores_non_decreasing_in_attempts(self):
        graph = random_graph(np.random.default_rng(8), 40, p=0.15)

        def runner(child):
            return louvain(graph, child)

        bests = [best_of(runner, n, np.random.default_rng(21)).partition.score for n in (1, 5, 10, 20)]
        self.assertEqual(bests, sorted(bests))
        full = best_of(runner, 20, np.random.default_rng(21))
        self.assertEqual(list(full.running_best), sorted(full.running_best))
        self.assertEqual(full.best_after(5), bests[1])

    def test_best_of_validation_and_ties(self):
        with self.assertRaises(ConfigError):
            best_of(lambda child: None, 0, np.random.default_rng(0))
        result = best_of(lambda child: Partition.from_labels([0, 0], 0.5), 4, np.random.default_rng(0))
        self.assertEqual(result.best_attempt, 0)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_local_optimality_up_to_two_hundred_nodes(self):
        rng = np.random.default_rng(200)
        for n in (60, 120, 200):
            graph = random_graph(rng, n, p=0.05)
            partition = louvain(graph, rng)
            self.assertLessEqual(single_move_gain(graph, partition.labels.copy()), 1e-9)


# ---------------------------------------------------------------------------
# 6. Exhaustive oracle
# ---------------------------------------------------------------------------

class OracleTests(SimpleTestCase):

    def test_single_edge_prefers_one_community(self):
        partition = brute_force_partition(graph_from_edges(2, [(0, 1, 1.0)]))
        np.testing.assert_array_equal(partition.labels, [0, 0])
        self.assertAlmostEqual(partition.score, 0.0, places=12)

    def test_triangle(self):
        partition = brute_force_partition(graph_from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]))
        self.assertEqual(partition.m, 1)
        self.assertAlmostEqual(partition.score, 0.0, places=12)

    def test_dumbbell(self):
        partition = brute_force_partition(dumbbell())
        np.testing.assert_array_equal(partition.labels, [0, 0, 0, 1, 1, 1])
        self.assertAlmostEqual(partition.score, DUMBBELL_SCORE, places=12)

    def test_dominates_louvain(self):
        rng = np.random.default_rng(6)
        for k in range(10):
            graph = random_graph(rng, int(rng.integers(4, 9)), weighted=True)
            with self.subTest(graph=k):
                self.assertLessEqual(louvain(graph, rng).score, brute_force_partition(graph).score + 1e-9)

    def test_too_large(self):
        with self.assertRaises(ConfigError):
            brute_force_partition(load_graph(KARATE))


# ---------------------------------------------------------------------------
# 7. NMI
# ---------------------------------------------------------------------------

class NMITests(SimpleTestCase):

    def test_identical_and_permuted(self):
        labels = np.array([0, 0, 1, 1, 2, 2])
        self.assertAlmostEqual(nmi(labels, labels), 1.0)
        self.assertAlmostEqual(nmi(labels, np.array([2, 2, 0, 0, 1, 1])), 1.0)

    def test_zero_entropy_conventions(self):
        self.assertAlmostEqual(nmi([0, 0, 0, 0], [0, 0, 0, 0]), 1.0)
        self.assertAlmostEqual(nmi([0, 0, 0, 0], [0, 0, 1, 1]), 0.0)

    def test_symmetric_and_bounded(self):
        rng = np.random.default_rng(0)
        for k in range(20):
            a = rng.integers(0, 4, 30)
            b = rng.integers(0, 5, 30)
            with self.subTest(case=k):
                self.assertAlmostEqual(nmi(a, b), nmi(b, a), delta=1e-12)
                self.assertTrue(0.0 <= nmi(a, b) <= 1.0)

    def test_accepts_partitions(self):
        a = Partition.from_labels([0, 0, 1], 0.0)
        self.assertAlmostEqual(nmi(a, a), 1.0)

    def test_length_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            nmi([0, 1], [0, 1, 1])


# ---------------------------------------------------------------------------
# 8. SBM generation
# ---------------------------------------------------------------------------

class SBMTests(SimpleTestCase):

    def test_invalid_specs(self):
        bad = [
            {'block_sizes': (10, 10), 'p_out': 0.5, 'nu': 3.0},
            {'block_sizes': (10, 10), 'p_out': 0.1, 'nu': 0.5},
            {'block_sizes': (10, 10), 'p_out': 0.0, 'nu': 2.0},
            {'block_sizes': (10, 0), 'p_out': 0.1, 'nu': 2.0},
            {'block_sizes': (), 'p_out': 0.1, 'nu': 2.0},
        ]
        for kwargs in bad:
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ConfigError):
                    SbmSpec(**kwargs)

    def test_reproducible_with_seed(self):
        spec = SbmSpec(block_sizes=(15, 15), p_out=0.1, nu=3.0, seed=42)
        first = sbm_generate(spec)
        second = sbm_generate(spec)
        np.testing.assert_array_equal(first.graph.weights, second.graph.weights)
        np.testing.assert_array_equal(first.truth, [0] * 15 + [1] * 15)

    def test_simple_unit_weight_graph(self):
        sample = sbm_generate(SbmSpec(block_sizes=(20, 20), p_out=0.1, nu=4.0, seed=1))
        weights = sample.graph.weights
        self.assertFalse(sample.graph.directed)
        self.assertTrue(set(np.unique(weights)) <= {0.0, 1.0})
        self.assertEqual(float(np.trace(weights)), 0.0)

    def test_edge_count_within_five_sigma(self):
        spec = SbmSpec(block_sizes=(30, 30, 30), p_out=0.1, nu=3.0, seed=7)
        sizes = np.array(spec.block_sizes, dtype=float)
        within = float(np.sum(sizes * (sizes - 1) / 2))
        cross = float((sizes.sum() ** 2 - np.sum(sizes ** 2)) / 2)
        variance = within * spec.p_in * (1 - spec.p_in) + cross * spec.p_out * (1 - spec.p_out)
        edges = np.count_nonzero(np.triu(sbm_generate(spec).graph.weights))
        self.assertAlmostEqual(spec.expected_edges(), within * spec.p_in + cross * spec.p_out)
        self.assertLessEqual(abs(edges - spec.expected_edges()), 5 * np.sqrt(variance))

    def test_series_shares_node_space_and_drifts(self):
        spec = SbmSpec(block_sizes=(20, 20, 20), p_out=0.05, nu=4.0)
        samples = sbm_series(spec, 4, drift=0.1, seed=3)
        self.assertEqual(len(samples), 4)
        for previous, current in zip(samples, samples[1:]):
            self.assertTrue(previous.graph.same_node_space(current.graph))
            self.assertLessEqual(int(np.sum(previous.truth != current.truth)), 6)
        again = sbm_series(spec, 4, drift=0.1, seed=3)
        np.testing.assert_array_equal(samples[-1].graph.weights, again[-1].graph.weights)

    def test_derived_seeds(self):
        self.assertEqual(derive_seeds(1, 3), derive_seeds(1, 3))
        self.assertEqual(len(set(derive_seeds(1, 5))), 5)
        self.assertEqual(derive_seeds(1, 0), [])

    def test_strong_structure_recovered(self):
        sample = sbm_generate(SbmSpec(block_sizes=(30, 30, 30), p_out=0.02, nu=20.0, seed=5))
        partition = gnns_search(modularity_matrix(sample.graph), ScheduleConfig(samples=30),
                                np.random.default_rng(5))
        self.assertGreaterEqual(nmi(partition, sample.truth), 0.9)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_recovery_improves_with_nu(self):
        means = []
        for nu in (1.5, 2.0, 2.5, 3.0):
            scores = []
            for seed in derive_seeds(int(nu * 10), 10):
                sample = sbm_generate(SbmSpec(block_sizes=(100, 100, 100), p_out=0.05, nu=nu, seed=seed))
                partition = gnns_search(modularity_matrix(sample.graph), ScheduleConfig(samples=100),
                                        np.random.default_rng(seed))
                scores.append(nmi(partition, sample.truth))
            means.append(float(np.mean(scores)))
        self.assertGreaterEqual(means[-1], 0.9)
        inversions = [a - b for a, b in zip(means, means[1:]) if b < a]
        self.assertLessEqual(len(inversions), 1)
        self.assertTrue(all(drop <= 0.05 for drop in inversions))


# ---------------------------------------------------------------------------
# 9. Report files and the benchmark service
# ---------------------------------------------------------------------------

class ReportingTests(SimpleTestCase):

    def test_partition_file_round_trip_and_alignment(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_partition(os.path.join(tmp, 'p.csv'), ['b', 'a', 'c'], [1, 0, 1])
            nodes, labels = read_partition_file(path)
        self.assertEqual(nodes, ['b', 'a', 'c'])
        _, aligned = align_partitions(['a', 'b', 'c'], [0, 0, 1], nodes, labels)
        np.testing.assert_array_equal(aligned, [0, 1, 1])
        with self.assertRaises(NodeSpaceMismatchError):
            align_partitions(['a', 'b'], [0, 0], ['a', 'z'], [0, 0])

    def test_bad_partition_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            cases = {
                'columns': 'node,group\na,1\n',
                'duplicate': 'node_label,community\na,1\na,2\n',
                'non_integer': 'node_label,community\na,x\n',
            }
            for name, text in cases.items():
                with self.subTest(case=name):
                    with self.assertRaises(GraphFormatError):
                        read_partition_file(write_text(os.path.join(tmp, f'{name}.csv'), text))

    def test_manifest_paths_resolve_relative_to_manifest(self):
        entries = read_manifest(os.path.join(DATASETS_DIR, 'manifest.csv'))
        by_name = {e['name']: e for e in entries}
        self.assertEqual(os.path.realpath(by_name['karate']['path']), os.path.realpath(KARATE))
        self.assertFalse(by_name['karate']['directed'])
        self.assertEqual(by_name['lesmis']['path'], 'les_miserables')
        self.assertEqual(by_name['lesmis']['format'], 'networkx')

    def test_reference_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_text(os.path.join(tmp, 'ref.csv'), 'layer,score\n0,0.4\n1,0.5\n')
            self.assertEqual(read_reference(path), {0: 0.4, 1: 0.5})

    def test_parse_method(self):
        self.assertEqual(parse_method('gnns2500').samples, 2500)
        self.assertEqual(parse_method('louvain').kind, 'louvain')
        self.assertEqual(parse_method('gnns', 50).samples, 50)
        self.assertEqual(parse_method('gnns', 0).samples, 0)
        self.assertEqual(parse_method('gnns0').samples, 0)
        with self.assertRaises(ConfigError):
            parse_method('combo')

    def test_average_to_best_row(self):
        rows = [
            {'dataset': 'a', 'x_score': 0.4, 'x_time': 2.0, 'y_score': 0.5, 'y_time': 1.0, 'best_score': 0.5},
            {'dataset': 'b', 'x_score': 0.3, 'x_time': 1.0, 'y_score': 0.3, 'y_time': 4.0, 'best_score': 0.3},
        ]
        avg = average_to_best_row(rows, ['x', 'y'])
        self.assertEqual(avg['dataset'], AVG_ROW_LABEL)
        self.assertAlmostEqual(avg['x_score'], 90.0)
        self.assertAlmostEqual(avg['y_score'], 100.0)
        self.assertAlmostEqual(avg['x_time'], 150.0)
        self.assertAlmostEqual(avg['y_time'], 250.0)

    def test_wall_time_covers_optimisation_only(self):
        ticks = iter([10.0, 12.5])
        service = BenchmarkService(clock=lambda: next(ticks))
        with tempfile.TemporaryDirectory() as tmp:
            report = service.run_partition(dumbbell(), 'dumbbell', 'louvain', attempts=3, seed=1,
                                           out_dir=tmp, record=False)
            self.assertTrue(os.path.exists(report.partition_path))
            self.assertTrue(os.path.exists(os.path.join(tmp, 'dumbbell_louvain.json')))
        self.assertEqual(report.wall_time, 2.5)
        self.assertEqual(report.score, max(report.scores))
        self.assertEqual(len(report.scores), 3)

    def test_schedule_config_uses_settings(self):
        config = schedule_config(seed=3)
        self.assertEqual(config.samples, settings.GNNS_DEFAULT_SAMPLES)
        self.assertEqual(config.stage_iters, tuple(settings.GNNS_STAGE_ITERS))
        for kwargs in ({'samples': 0}, {'n_jobs': 0}, {'stage_iters': ()}):
            with self.subTest(kwargs=kwargs):
                with self.assertRaises(ConfigError):
                    schedule_config(**kwargs)


# ---------------------------------------------------------------------------
# 10. Management commands and run records
# ---------------------------------------------------------------------------

class CommandTests(TestCase):
    """End-to-end command runs, exit codes and database records."""

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def run_command(self, *args, **options):
        out = StringIO()
        call_command(*args, stdout=out, **options)
        return out.getvalue()

    def test_partition_writes_reports_and_record(self):
        output = self.run_command('partition', input=KARATE, method='gnns', samples=30, seed=7, out=self.tmp)
        self.assertIn('score=', output)
        self.assertTrue(os.path.exists(os.path.join(self.tmp, 'karate_gnns.csv')))
        self.assertTrue(os.path.exists(os.path.join(self.tmp, 'karate_gnns.json')))
        run = PartitionRun.objects.get()
        self.assertEqual(run.dataset, 'karate')
        self.assertEqual(run.n_nodes, 34)
        self.assertEqual(run.to_dict()['scores'], [run.score])

    def test_partition_is_byte_identical_for_same_seed(self):
        outputs = []
        for k in range(2):
            out_dir = os.path.join(self.tmp, str(k))
            self.run_command('partition', input=KARATE, method='louvain', attempts=3, seed=5,
                             out=out_dir, no_record=True)
            outputs.append(read_bytes(os.path.join(out_dir, 'karate_louvain.csv')))
        self.assertEqual(outputs[0], outputs[1])
        self.assertEqual(PartitionRun.objects.count(), 0)

    def test_report_schema_independent_of_seed(self):
        keys = []
        for seed in (1, 2):
            out_dir = os.path.join(self.tmp, str(seed))
            self.run_command('partition', input=DUMBBELL, method='gnns', samples=6, seed=seed,
                             out=out_dir, no_record=True)
            with open(os.path.join(out_dir, 'dumbbell_gnns.json'), encoding='utf-8') as f:
                keys.append(sorted(json.load(f)))
        self.assertEqual(keys[0], keys[1])
        self.assertIn('peak_rss_mb', keys[0])

    def test_exit_codes(self):
        directed = write_text(os.path.join(self.tmp, 'arcs.txt'), 'a b\nb c\nc a\n')
        cases = [
            ({'input': directed, 'method': 'louvain', 'directed': True}, 1),
            ({'input': KARATE, 'samples': 2}, 1),
            ({'input': KARATE, 'samples': 0}, 1),
            ({'input': KARATE, 'method': 'gnns0'}, 1),
            ({'input': KARATE, 'method': 'louvain', 'n_jobs': 0}, 1),
            ({'input': KARATE, 'method': 'combo'}, 1),
            ({'input': os.path.join(self.tmp, 'missing.txt')}, 2),
        ]
        for options, code in cases:
            with self.subTest(options=options):
                with self.assertRaises(CommandError) as ctx:
                    self.run_command('partition', out=self.tmp, no_record=True, **options)
                self.assertEqual(ctx.exception.returncode, code)

    def test_explicit_zero_counts_are_rejected(self):
        manifest = write_text(os.path.join(self.tmp, 'manifest.csv'),
                              f'name,path,format,directed\nkarate,{KARATE},edgelist,false\n')
        layers = write_text(os.path.join(self.tmp, 'layers.csv'), (
            'name,path,format,directed\n'
            f'day0,{KARATE},edgelist,false\n'
            f'day1,{KARATE},edgelist,false\n'
        ))
        cases = [
            ('benchmark', {'manifest': manifest, 'methods': 'louvain', 'attempts': 0}),
            ('benchmark', {'manifest': manifest, 'methods': 'gnns20', 'gnns_attempts': 0}),
            ('benchmark', {'manifest': manifest, 'methods': 'gnns0,louvain'}),
            ('temporal', {'manifest': layers, 'samples': 10, 'fine_tune_iters': 0}),
            ('temporal', {'manifest': layers, 'samples': 0}),
        ]
        for command, options in cases:
            with self.subTest(command=command, options=options):
                with self.assertRaises(CommandError) as ctx:
                    self.run_command(command, out=self.tmp, no_record=True, **options)
                self.assertEqual(ctx.exception.returncode, 1)
        self.assertFalse(os.path.exists(os.path.join(self.tmp, 'benchmark.csv')))

    def test_symmetrize_allows_louvain_on_directed_file(self):
        directed = write_text(os.path.join(self.tmp, 'arcs.txt'), 'a b\nb c\nc a\nd e\ne f\nf d\nc d\n')
        output = self.run_command('partition', input=directed, method='louvain', directed=True,
                                  symmetrize=True, seed=1, out=self.tmp, no_record=True)
        self.assertIn('communities=2', output)

    def test_benchmark_single_dataset(self):
        manifest = write_text(os.path.join(self.tmp, 'manifest.csv'),
                              f'name,path,format,directed\ndumbbell,{DUMBBELL},edgelist,false\n')
        self.run_command('benchmark', manifest=manifest, methods='gnns20,louvain', attempts=3,
                         seed=2, out=self.tmp)
        table = pd.read_csv(os.path.join(self.tmp, 'benchmark.csv'))
        self.assertEqual(list(table['dataset']), ['dumbbell', AVG_ROW_LABEL])
        row = table.iloc[0]
        self.assertAlmostEqual(row['best_score'], max(row['gnns20_score'], row['louvain_score']))
        winner = 'gnns20' if row['gnns20_score'] >= row['louvain_score'] else 'louvain'
        self.assertAlmostEqual(table.iloc[1][f'{winner}_score'], 100.0)
        self.assertEqual(PartitionRun.objects.count(), 2)

    def test_benchmark_records_failures_and_continues(self):
        arcs = write_text(os.path.join(self.tmp, 'arcs.txt'), 'a b\nb c\nc a\n')
        manifest = write_text(os.path.join(self.tmp, 'manifest.csv'), (
            'name,path,format,directed\n'
            f'dumbbell,{DUMBBELL},edgelist,false\n'
            'missing,nowhere.txt,edgelist,false\n'
            f'arcs,{arcs},edgelist,true\n'
        ))
        output = self.run_command('benchmark', manifest=manifest, methods='gnns10,louvain', attempts=2,
                                  seed=3, directed_mode='original', out=self.tmp, no_record=True)
        self.assertIn('missing', output)
        self.assertIn('arcs / louvain', output)
        table = pd.read_csv(os.path.join(self.tmp, 'benchmark.csv')).set_index('dataset')
        self.assertAlmostEqual(table.loc['dumbbell', 'louvain_score'], DUMBBELL_SCORE, places=9)
        self.assertTrue(np.isnan(table.loc['arcs', 'louvain_score']))
        self.assertFalse(np.isnan(table.loc['arcs', 'gnns10_score']))

    def test_synth_sbm_reproducible(self):
        first = os.path.join(self.tmp, 'a')
        second = os.path.join(self.tmp, 'b')
        for out_dir in (first, second):
            self.run_command('synth', 'sbm', blocks='10,10,10', nu=3.0, p_out=0.1, count=2, seed=1, out=out_dir)
        files = sorted(os.listdir(first))
        self.assertEqual(files, sorted([
            'manifest.csv', 'sbm_nu3_00.net', 'sbm_nu3_00_truth.csv', 'sbm_nu3_01.net', 'sbm_nu3_01_truth.csv',
        ]))
        for name in files:
            with self.subTest(file=name):
                self.assertEqual(read_bytes(os.path.join(first, name)), read_bytes(os.path.join(second, name)))

    def test_synth_edge_cases(self):
        empty = os.path.join(self.tmp, 'empty')
        self.run_command('synth', 'sbm', count=0, seed=1, out=empty)
        self.assertEqual(os.listdir(empty), [])
        with self.assertRaises(CommandError) as ctx:
            self.run_command('synth', 'sbm', nu=30.0, p_out=0.05, out=self.tmp)
        self.assertEqual(ctx.exception.returncode, 1)

    def test_temporal_on_synthetic_series(self):
        series = os.path.join(self.tmp, 'series')
        self.run_command('synth', 'sbm-series', blocks='10,10,10', nu=5.0, p_out=0.08, layers=4,
                         drift=0.05, seed=2, out=series)
        manifest = os.path.join(series, 'manifest.csv')

        self.run_command('temporal', manifest=manifest, samples=10, seed=2, fine_tune_iters=5,
                         out=self.tmp, name='plain')
        plain = pd.read_csv(os.path.join(self.tmp, 'plain_timeline.csv'))
        self.assertEqual(list(plain.columns), ['layer', 'score', 'communities', 'time', 'tuned_score'])
        self.assertTrue((plain['tuned_score'] <= plain['score']).all())
        self.assertEqual(len(plain), 4)

        reference = write_text(os.path.join(self.tmp, 'ref.csv'),
                               'layer,score\n' + ''.join(f'{k},{s}\n' for k, s in enumerate(plain['score'])))
        output = self.run_command('temporal', manifest=manifest, samples=10, seed=2, fine_tune_iters=5,
                                  reference=reference, out=self.tmp, name='compared')
        self.assertIn('Mean ratio to reference: 1.0000', output)
        compared = pd.read_csv(os.path.join(self.tmp, 'compared_timeline.csv'))
        self.assertIn('ratio', compared.columns)

        run = TemporalRun.objects.get(name='compared')
        self.assertEqual(run.layer_count, 4)
        self.assertEqual(TemporalLayer.objects.filter(run=run).count(), 4)
        self.assertAlmostEqual(run.mean_ratio, 1.0, places=9)
        self.assertIsNotNone(run.beats_reference)
        self.assertEqual(len(run.to_dict()['layers']), 4)

    def test_temporal_glob_and_mismatch(self):
        write_text(os.path.join(self.tmp, 'l0.txt'), 'a b\nb c\nc a\n')
        write_text(os.path.join(self.tmp, 'l1.txt'), 'c b\nb a\na c\n')
        self.run_command('temporal', layers_glob=os.path.join(self.tmp, 'l*.txt'), samples=5, seed=1,
                         fine_tune_iters=2, out=self.tmp, no_record=True)
        write_text(os.path.join(self.tmp, 'l2.txt'), 'x y\n')
        with self.assertRaises(CommandError) as ctx:
            self.run_command('temporal', layers_glob=os.path.join(self.tmp, 'l*.txt'), samples=5,
                             seed=1, out=self.tmp, no_record=True)
        self.assertEqual(ctx.exception.returncode, 2)

    def test_nmi_command(self):
        path = write_partition(os.path.join(self.tmp, 'a.csv'), ['1', '2', '3', '4'], [0, 0, 1, 1])
        self.assertEqual(self.run_command('nmi', path, path).strip(), '1.000000')
        other = write_partition(os.path.join(self.tmp, 'b.csv'), ['5', '6', '7', '8'], [0, 0, 1, 1])
        with self.assertRaises(CommandError) as ctx:
            self.run_command('nmi', path, other)
        self.assertEqual(ctx.exception.returncode, 2)

    @override_settings(GNNS_RECORD_RUNS=False)
    def test_recording_can_be_disabled(self):
        self.run_command('partition', input=DUMBBELL, method='louvain', attempts=2, seed=1, out=self.tmp)
        self.assertEqual(PartitionRun.objects.count(), 0)


class BundledClassicsTests(SimpleTestCase):
    """
    Classic benchmark networks from datasets/manifest.csv. Networks fetched
    by scripts/fetch_datasets.py are skipped, by name, until downloaded.
    """

    # name, population size S, expected score, tolerance (None: lower bound only)
    CASES = [
        ('dolphins', 100, 0.528519, 1e-3),
        ('lesmis', 100, 0.566688, 1e-3),
        ('polbooks', 2500, 0.527237, 1e-3),
        ('football', 2500, 0.605445, 1e-3),
        ('football', 100, 0.6040, None),
        ('celegans', 100, 0.5015, None),
    ]

    def setUp(self):
        self.entries = {e['name']: e for e in read_manifest(os.path.join(DATASETS_DIR, 'manifest.csv'))}
        self.service = BenchmarkService()

    def load(self, name, directed_mode='symmetrize'):
        entry = self.entries.get(name)
        if entry is None or (entry['format'] != 'networkx' and not os.path.exists(entry['path'])):
            self.skipTest(f"{name} not downloaded; run scripts/fetch_datasets.py --only {name}")
        return self.service.load_dataset(entry['path'], entry['format'], entry['directed'], directed_mode)

    def test_les_miserables_is_bundled(self):
        graph = self.load('lesmis')
        self.assertEqual(graph.n, 77)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_classics(self):
        for name, samples, expected, tolerance in self.CASES:
            with self.subTest(dataset=name, samples=samples):
                graph = self.load(name)
                partition = gnns_search(modularity_matrix(graph), ScheduleConfig(samples=samples),
                                        np.random.default_rng(0))
                if tolerance is None:
                    self.assertGreaterEqual(partition.score, expected)
                else:
                    self.assertAlmostEqual(partition.score, expected, delta=tolerance)

    @skipUnless(SLOW, 'set GNNS_RUN_SLOW_TESTS=true')
    def test_directed_jazz(self):
        graph = self.load('jazz', directed_mode='original')
        self.assertTrue(graph.directed)
        partition = gnns_search(modularity_matrix(graph), ScheduleConfig(samples=100),
                                np.random.default_rng(0))
        self.assertAlmostEqual(partition.score, 0.4456, delta=1e-3)
