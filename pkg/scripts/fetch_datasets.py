"""
Fetch Benchmark Networks
========================

Downloads the networks listed in datasets/sources.csv
(columns: name,url,format,directed) and registers them in
datasets/manifest.csv so the benchmark command picks them up.

Zip archives are unpacked to the member matching the listed format.
GML sources are converted to Pajek on the way in (weights from the
'value' attribute, 1 where absent). Networks already on disk are skipped.

Usage:
    python scripts/fetch_datasets.py [--sources datasets/sources.csv] [--only dolphins,jazz] [--force]
"""
import argparse
import io
import os
import re
import sys
import zipfile

import networkx as nx
import pandas as pd
import requests

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, BASE_DIR)

from services.errors import GraphFormatError  # noqa: E402
from services.graph_core import graph_from_networkx, write_pajek  # noqa: E402

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------
DATASETS_DIR = os.path.join(BASE_DIR, 'datasets')
SOURCES_FILE = os.path.join(DATASETS_DIR, 'sources.csv')
MANIFEST_FILE = os.path.join(DATASETS_DIR, 'manifest.csv')
SOURCE_EXTENSIONS = {'edgelist': '.txt', 'pajek': '.net', 'gml': '.gml'}
# Format each source format is stored in under datasets/
STORED_FORMATS = {'edgelist': 'edgelist', 'pajek': 'pajek', 'gml': 'pajek'}
TIMEOUT = 60


def _target_path(name, fmt):
    stored = STORED_FORMATS[fmt]
    return os.path.join(DATASETS_DIR, f"{name}{SOURCE_EXTENSIONS[stored]}")


def download(url):
    """Fetch one source into memory."""
    response = requests.get(url, timeout=TIMEOUT)
    response.raise_for_status()
    return response.content


def unpack(payload, url, fmt):
    """Return the archive member matching fmt, or the payload itself for plain files."""
    if not url.lower().endswith('.zip'):
        return payload
    suffix = SOURCE_EXTENSIONS[fmt]
    with zipfile.ZipFile(io.BytesIO(payload)) as archive:
        members = sorted(n for n in archive.namelist() if n.lower().endswith(suffix))
        if not members:
            raise ValueError(f"{url}: no {suffix} file in archive ({archive.namelist()})")
        return archive.read(members[0])


def gml_to_graph(payload):
    """Parse GML text; files with repeated edges are re-read as multigraphs."""
    text = payload.decode('latin-1')
    try:
        g = nx.parse_gml(text, label='id')
    except nx.NetworkXError:
        g = nx.parse_gml(re.sub(r'graph\s*\[', 'graph\n[\n  multigraph 1', text, count=1), label='id')
    return graph_from_networkx(g, weight='value')


def store(payload, path, fmt):
    if fmt == 'gml':
        write_pajek(gml_to_graph(payload), path)
        return
    tmp_path = f"{path}.part"
    with open(tmp_path, 'wb') as f:
        f.write(payload)
    os.replace(tmp_path, path)


def register(manifest, name, path, fmt, directed):
    """Add or replace one manifest row."""
    row = {
        'name': name,
        'path': os.path.relpath(path, DATASETS_DIR),
        'format': STORED_FORMATS[fmt],
        'directed': str(directed).lower(),
    }
    manifest = manifest[manifest['name'] != name]
    return pd.concat([manifest, pd.DataFrame([row])], ignore_index=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split('\n')[1])
    parser.add_argument('--sources', default=SOURCES_FILE)
    parser.add_argument('--only', default='', help='Comma-separated source names to fetch')
    parser.add_argument('--force', action='store_true', help='Download even if the file exists')
    args = parser.parse_args()

    sources = pd.read_csv(args.sources, dtype=str, keep_default_na=False)
    wanted = {name.strip() for name in args.only.split(',') if name.strip()}
    if wanted:
        sources = sources[sources['name'].str.strip().isin(wanted)]
    if sources.empty:
        print(f"No sources selected from {args.sources}")
        return 0

    if os.path.exists(MANIFEST_FILE):
        manifest = pd.read_csv(MANIFEST_FILE, dtype=str, keep_default_na=False)
    else:
        manifest = pd.DataFrame(columns=['name', 'path', 'format', 'directed'])

    failures = 0
    for row in sources.to_dict(orient='records'):
        name = row['name'].strip()
        url = row['url'].strip()
        fmt = (row.get('format') or 'edgelist').strip().lower()
        if fmt not in STORED_FORMATS:
            print(f"✗ {name}: unsupported source format '{fmt}'")
            failures += 1
            continue
        path = _target_path(name, fmt)
        if os.path.exists(path) and not args.force:
            print(f"✓ {name}: already present")
        else:
            print(f"⬇️  {name}: {url}")
            try:
                store(unpack(download(url), url, fmt), path, fmt)
            except (requests.RequestException, zipfile.BadZipFile, ValueError, nx.NetworkXError,
                    GraphFormatError) as e:
                print(f"✗ {name}: {e}")
                failures += 1
                continue
        manifest = register(manifest, name, path, fmt, row.get('directed', 'false').strip().lower() == 'true')

    manifest.to_csv(MANIFEST_FILE, index=False, lineterminator='\n')
    print(f"Manifest updated: {MANIFEST_FILE}")
    return 1 if failures else 0


if __name__ == '__main__':
    sys.exit(main())
