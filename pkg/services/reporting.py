"""
File formats for partitions, reports, manifests and timelines.

Partition/truth files:  CSV  node_label,community
Dataset manifests:      CSV  name,path,format,directed
Reference scores:       CSV  layer,score
"""
import json
import logging
import os

import numpy as np
import pandas as pd

from services.errors import GraphFormatError, NodeSpaceMismatchError
from services.graph_core import NETWORKX_FORMAT

logger = logging.getLogger(__name__)

PARTITION_COLUMNS = ['node_label', 'community']
MANIFEST_COLUMNS = ['name', 'path', 'format', 'directed']
REFERENCE_COLUMNS = ['layer', 'score']
TRUE_VALUES = ('1', 'true', 'yes', 'directed')


def _ensure_parent(path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def _read_csv(path, columns):
    if not os.path.exists(path):
        raise GraphFormatError(f"File not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise GraphFormatError(f"{path}: {e}") from None
    df.columns = [c.strip() for c in df.columns]
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise GraphFormatError(f"{path}: missing columns {missing}, expected {columns}")
    return df


def write_partition(path, node_labels, labels):
    """Write one `node_label,community` row per node in node order."""
    labels = np.asarray(labels)
    if len(node_labels) != labels.size:
        raise NodeSpaceMismatchError(f"{len(node_labels)} node labels for {labels.size} communities")
    _ensure_parent(path)
    df = pd.DataFrame({'node_label': list(node_labels), 'community': labels.astype(np.int64)})
    df.to_csv(path, index=False, lineterminator='\n')
    return path


# Ground-truth files share the partition layout
write_truth = write_partition


def read_partition_file(path):
    """
    Read a partition CSV.

    Returns:
        (node_labels list, labels ndarray)
    """
    df = _read_csv(path, PARTITION_COLUMNS)
    if df.empty:
        raise GraphFormatError(f"{path}: partition file has no rows")
    node_labels = [str(v).strip() for v in df['node_label']]
    if len(set(node_labels)) != len(node_labels):
        raise GraphFormatError(f"{path}: duplicate node labels")
    try:
        labels = np.array([int(v) for v in df['community']], dtype=np.int64)
    except ValueError:
        raise GraphFormatError(f"{path}: community ids must be integers") from None
    return node_labels, labels


def align_partitions(nodes_a, labels_a, nodes_b, labels_b):
    """Reorder the second labeling to follow the node order of the first."""
    if set(nodes_a) != set(nodes_b):
        only_a = len(set(nodes_a) - set(nodes_b))
        only_b = len(set(nodes_b) - set(nodes_a))
        raise NodeSpaceMismatchError(
            f"Partitions cover different node sets ({only_a} nodes only in the first, "
            f"{only_b} only in the second)"
        )
    position = {label: k for k, label in enumerate(nodes_b)}
    order = [position[label] for label in nodes_a]
    return np.asarray(labels_a), np.asarray(labels_b)[order]


def write_json(path, payload):
    _ensure_parent(path)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2, default=str)
        f.write('\n')
    return path


def write_table(path, rows, columns=None):
    """Write a list of dict rows as CSV."""
    _ensure_parent(path)
    df = pd.DataFrame(rows, columns=columns)
    df.to_csv(path, index=False, lineterminator='\n')
    return df


def read_manifest(path):
    """
    Read a dataset manifest. Relative paths resolve against the manifest's
    own directory; networkx entries name a built-in graph instead of a file.

    Returns:
        list of dicts with name, path, format, directed (bool)
    """
    df = _read_csv(path, MANIFEST_COLUMNS)
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for row in df.to_dict(orient='records'):
        dataset_path = row['path'].strip()
        fmt = (row['format'].strip() or 'edgelist').lower()
        if fmt != NETWORKX_FORMAT and not os.path.isabs(dataset_path):
            dataset_path = os.path.join(base, dataset_path)
        entries.append({
            'name': row['name'].strip(),
            'path': dataset_path,
            'format': fmt,
            'directed': row['directed'].strip().lower() in TRUE_VALUES,
        })
    logger.debug(f"Manifest {path}: {len(entries)} datasets")
    return entries


def read_reference(path):
    """
    Read externally produced per-layer scores.

    Returns:
        dict mapping layer index -> score
    """
    df = _read_csv(path, REFERENCE_COLUMNS)
    reference = {}
    for row in df.to_dict(orient='records'):
        try:
            reference[int(row['layer'])] = float(row['score'])
        except ValueError:
            raise GraphFormatError(f"{path}: invalid reference row {row}") from None
    return reference
