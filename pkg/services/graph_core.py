"""
Graph representation and ingestion for community detection.

Graphs are stored as dense weighted adjacency matrices (e_{i,j}); the
modularity machinery needs the full matrix anyway, so there is no sparse
path. Input files are parsed into a dense 0-based index space and the
original node identifiers are kept alongside.
"""
import logging
import os
from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

from services.errors import GraphFormatError, NodeSpaceMismatchError

logger = logging.getLogger(__name__)

NETWORKX_FORMAT = 'networkx'
FILE_FORMATS = ('edgelist', 'pajek')
SUPPORTED_FORMATS = FILE_FORMATS + (NETWORKX_FORMAT,)
TREAT_AS_CHOICES = ('directed', 'undirected')
COMMENT_PREFIXES = ('#', '%')

# Relative tolerance for the strength/total-weight bookkeeping checks.
STRENGTH_RTOL = 1e-9

# Graphs shipped inside networkx, addressed by name with format 'networkx'
NETWORKX_GRAPHS = {
    'les_miserables': nx.les_miserables_graph,
    'florentine_families': nx.florentine_families_graph,
}


@dataclass(frozen=True)
class NodeStrengths:
    """Out/in strength vectors and total weight T of a graph."""
    w_out: np.ndarray
    w_in: np.ndarray
    total: float

    @property
    def T(self):
        return self.total


class Graph:
    """
    Weighted, optionally directed graph over nodes 0..n-1.

    The adjacency matrix is read-only after construction, so instances can
    be shared freely between threads.
    """

    def __init__(self, weights, directed=False, node_labels=None):
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphFormatError(f"Adjacency must be square, got shape {w.shape}")
        if w.shape[0] == 0:
            raise GraphFormatError("Graph has no nodes")
        if not np.all(np.isfinite(w)):
            raise GraphFormatError("Edge weights must be finite")
        if np.any(w < 0):
            raise GraphFormatError("Edge weights must be nonnegative")
        if not np.any(w > 0):
            raise GraphFormatError("Graph has no edges with positive weight")
        if not directed and not np.allclose(w, w.T, rtol=0.0, atol=1e-12):
            raise GraphFormatError("Undirected graph must have a symmetric adjacency")

        n = w.shape[0]
        if node_labels is None:
            node_labels = [str(i) for i in range(n)]
        node_labels = tuple(str(label) for label in node_labels)
        if len(node_labels) != n:
            raise GraphFormatError(
                f"Got {len(node_labels)} node labels for {n} nodes"
            )

        w.setflags(write=False)
        self._weights = w
        self.directed = bool(directed)
        self.node_labels = node_labels

    @property
    def n(self):
        return self._weights.shape[0]

    @property
    def weights(self):
        return self._weights

    @property
    def edges(self):
        """All (source, target, weight) entries with positive weight, row-major."""
        rows, cols = np.nonzero(self._weights)
        return [(int(i), int(j), float(self._weights[i, j])) for i, j in zip(rows, cols)]

    @cached_property
    def strengths(self):
        return node_strengths(self)

    @property
    def total_weight(self):
        return self.strengths.total

    def same_node_space(self, other):
        return self.n == other.n and self.node_labels == other.node_labels

    def __repr__(self):
        kind = 'directed' if self.directed else 'undirected'
        return f"<Graph n={self.n} {kind} T={self.total_weight:g}>"


def graph_from_edges(n, edges, directed=False, node_labels=None):
    """
    Build a Graph from (source, target, weight) triples.

    Duplicate entries accumulate. For undirected graphs every triple adds
    its weight to both e_{i,j} and e_{j,i}; a self-loop is added once.
    """
    weights = np.zeros((n, n), dtype=np.float64)
    for source, target, weight in edges:
        if not (0 <= source < n and 0 <= target < n):
            raise GraphFormatError(f"Edge ({source}, {target}) outside node range [0, {n})")
        if weight < 0:
            raise GraphFormatError(f"Negative weight {weight} on edge ({source}, {target})")
        weights[source, target] += weight
        if not directed and source != target:
            weights[target, source] += weight
    return Graph(weights, directed=directed, node_labels=node_labels)


def node_strengths(graph):
    """Compute w_out, w_in and T for a graph."""
    w = graph.weights
    w_out = w.sum(axis=1)
    w_in = w.sum(axis=0)
    total = float(w.sum())
    if total <= 0:
        raise GraphFormatError("Total edge weight T must be positive")
    w_out.setflags(write=False)
    w_in.setflags(write=False)
    return NodeStrengths(w_out=w_out, w_in=w_in, total=total)


def symmetrize(graph):
    """Return the undirected graph with e'_{i,j} = e_{i,j} + e_{j,i}."""
    w = graph.weights
    return Graph(w + w.T, directed=False, node_labels=graph.node_labels)


def scale_weights(graph, factor):
    """Multiply every edge weight by a positive factor."""
    if factor <= 0:
        raise GraphFormatError(f"Scale factor must be positive, got {factor}")
    return Graph(graph.weights * factor, directed=graph.directed, node_labels=graph.node_labels)


def aggregate_graphs(layers):
    """Sum edge weights over layers that share one node space."""
    layers = list(layers)
    if not layers:
        raise GraphFormatError("Cannot aggregate an empty list of graphs")
    first = layers[0]
    total = np.zeros_like(first.weights)
    for index, layer in enumerate(layers):
        if not first.same_node_space(layer):
            raise NodeSpaceMismatchError(
                f"Layer {index} has a different node space than layer 0"
            )
        total += layer.weights
    directed = any(layer.directed for layer in layers)
    return Graph(total, directed=directed, node_labels=first.node_labels)


# ----------------------------------------------------------------------
# File ingestion
# ----------------------------------------------------------------------

def load_graph(path, format='edgelist', treat_as='undirected'):
    """
    Load a graph from an edge list or Pajek file, or one of the graphs
    shipped with networkx (format 'networkx', path = its NETWORKX_GRAPHS name).

    Args:
        path: Input file path or networkx graph name
        format: 'edgelist', 'pajek' or 'networkx'
        treat_as: 'directed' or 'undirected'

    Returns:
        Graph
    """
    if format not in SUPPORTED_FORMATS:
        raise GraphFormatError(f"Unsupported format '{format}', expected one of {SUPPORTED_FORMATS}")
    if treat_as not in TREAT_AS_CHOICES:
        raise GraphFormatError(f"treat_as must be one of {TREAT_AS_CHOICES}, got '{treat_as}'")
    directed = treat_as == 'directed'
    if format == NETWORKX_FORMAT:
        return _load_networkx(path, directed)
    if not os.path.exists(path):
        raise GraphFormatError(f"Graph file not found: {path}")

    if format == 'edgelist':
        labels, edges = _parse_edgelist(path)
    else:
        labels, edges = _parse_pajek(path, directed)

    if not edges:
        raise GraphFormatError(f"No edges found in {path}")

    graph = graph_from_edges(len(labels), edges, directed=directed, node_labels=labels)
    logger.info(f"Loaded {graph!r} from {path} ({format}, {treat_as})")
    return graph


def graph_from_networkx(g, weight='weight'):
    """Dense Graph from a networkx graph; parallel edges keep their heaviest weight."""
    nodes = list(g.nodes())
    weights = nx.to_numpy_array(g, nodelist=nodes, weight=weight, multigraph_weight=max)
    return Graph(weights, directed=g.is_directed(), node_labels=nodes)


def _load_networkx(name, directed):
    builder = NETWORKX_GRAPHS.get(name)
    if builder is None:
        raise GraphFormatError(f"Unknown networkx graph '{name}', expected one of {sorted(NETWORKX_GRAPHS)}")
    graph = graph_from_networkx(builder())
    if directed and not graph.directed:
        graph = Graph(graph.weights, directed=True, node_labels=graph.node_labels)
    logger.info(f"Loaded {graph!r} from networkx '{name}'")
    return graph


class _LabelIndex:
    """Maps arbitrary node identifiers to dense indices by first appearance."""

    def __init__(self):
        self.labels = []
        self._index = {}

    def get(self, label):
        if label not in self._index:
            self._index[label] = len(self.labels)
            self.labels.append(label)
        return self._index[label]


def _parse_weight(token, path, line_no):
    try:
        weight = float(token)
    except ValueError:
        raise GraphFormatError(f"{path}:{line_no}: invalid weight '{token}'") from None
    if not np.isfinite(weight):
        raise GraphFormatError(f"{path}:{line_no}: weight must be finite")
    if weight < 0:
        raise GraphFormatError(f"{path}:{line_no}: negative weight {weight}")
    return weight


def _parse_edgelist(path):
    index = _LabelIndex()
    edges = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith(COMMENT_PREFIXES):
                continue
            tokens = line.split()
            if len(tokens) not in (2, 3):
                raise GraphFormatError(
                    f"{path}:{line_no}: expected 'src dst [weight]', got {len(tokens)} fields"
                )
            weight = _parse_weight(tokens[2], path, line_no) if len(tokens) == 3 else 1.0
            edges.append((index.get(tokens[0]), index.get(tokens[1]), weight))
    return index.labels, edges


def _split_pajek_line(line):
    """Split a Pajek line, keeping quoted labels together."""
    tokens = []
    current = []
    quoted = False
    for char in line:
        if char == '"':
            quoted = not quoted
        elif char.isspace() and not quoted:
            if current:
                tokens.append(''.join(current))
                current = []
        else:
            current.append(char)
    if current:
        tokens.append(''.join(current))
    return tokens


def _parse_pajek(path, directed):
    n = None
    labels = []
    edges = []
    section = None
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith('%'):
                continue
            if line.startswith('*'):
                header = line.split()
                keyword = header[0].lower()
                if keyword == '*vertices':
                    if len(header) < 2 or not header[1].isdigit():
                        raise GraphFormatError(f"{path}:{line_no}: '*Vertices' needs a node count")
                    n = int(header[1])
                    labels = [str(i) for i in range(1, n + 1)]
                    section = 'vertices'
                elif keyword in ('*edges', '*arcs'):
                    if n is None:
                        raise GraphFormatError(f"{path}:{line_no}: '{header[0]}' before '*Vertices'")
                    section = keyword[1:]
                elif keyword == '*network':
                    continue
                else:
                    raise GraphFormatError(f"{path}:{line_no}: unsupported section '{header[0]}'")
                continue

            tokens = _split_pajek_line(line)
            if section == 'vertices':
                if not tokens[0].isdigit() or not 1 <= int(tokens[0]) <= n:
                    raise GraphFormatError(f"{path}:{line_no}: invalid vertex id '{tokens[0]}'")
                if len(tokens) > 1:
                    labels[int(tokens[0]) - 1] = tokens[1]
            elif section in ('edges', 'arcs'):
                if len(tokens) < 2:
                    raise GraphFormatError(f"{path}:{line_no}: expected 'src dst [weight]'")
                try:
                    source, target = int(tokens[0]) - 1, int(tokens[1]) - 1
                except ValueError:
                    raise GraphFormatError(f"{path}:{line_no}: node ids must be integers") from None
                if not (0 <= source < n and 0 <= target < n):
                    raise GraphFormatError(f"{path}:{line_no}: node id outside 1..{n}")
                weight = _parse_weight(tokens[2], path, line_no) if len(tokens) > 2 else 1.0
                edges.append((source, target, weight))
                # *Edges are undirected; keep both directions when building a directed graph
                if section == 'edges' and directed and source != target:
                    edges.append((target, source, weight))
            else:
                raise GraphFormatError(f"{path}:{line_no}: data outside of a section")

    if n is None:
        raise GraphFormatError(f"{path}: missing '*Vertices' section")
    return labels, edges


def write_edgelist(graph, path):
    """
    Write 'src dst weight' lines using the original node labels.

    Undirected graphs are written once per pair (i <= j).
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    w = graph.weights
    rows, cols = np.nonzero(np.triu(w) if not graph.directed else w)
    labels = graph.node_labels
    with open(path, 'w', encoding='utf-8') as f:
        for i, j in zip(rows, cols):
            f.write(f"{labels[i]} {labels[j]} {w[i, j]:.17g}\n")
    return path


def write_pajek(graph, path):
    """
    Write a Pajek file that keeps every node, isolated ones included.

    Undirected graphs go to '*Edges' (one line per pair), directed graphs
    to '*Arcs'.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    w = graph.weights
    rows, cols = np.nonzero(np.triu(w) if not graph.directed else w)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(f"*Vertices {graph.n}\n")
        for i, label in enumerate(graph.node_labels, start=1):
            f.write(f'{i} "{label}"\n')
        f.write("*Arcs\n" if graph.directed else "*Edges\n")
        for i, j in zip(rows, cols):
            f.write(f"{i + 1} {j + 1} {w[i, j]:.17g}\n")
    return path


def align_layers(layers):
    """
    Reorder every layer's nodes to follow the first layer's node order.

    Layers read from edge lists index nodes by first appearance, so equal
    node sets may come out in different orders.
    """
    layers = list(layers)
    if not layers:
        return layers
    first = layers[0]
    aligned = [first]
    for index, layer in enumerate(layers[1:], start=1):
        if layer.node_labels == first.node_labels:
            aligned.append(layer)
            continue
        if layer.n != first.n or set(layer.node_labels) != set(first.node_labels):
            raise NodeSpaceMismatchError(
                f"Layer {index} has a different node set than layer 0"
            )
        position = {label: k for k, label in enumerate(layer.node_labels)}
        order = np.array([position[label] for label in first.node_labels])
        aligned.append(Graph(layer.weights[np.ix_(order, order)], directed=layer.directed,
                             node_labels=first.node_labels))
    return aligned
