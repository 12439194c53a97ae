import os

from django.core.management.base import BaseCommand

from core.management.commands._common import comma_ints, exit_codes
from services.errors import ConfigError
from services.graph_core import write_edgelist, write_pajek
from services.reporting import write_table, write_truth
from services.sbm import DEFAULT_P_OUT, SbmSpec, derive_seeds, sbm_generate, sbm_series

EXTENSIONS = {'pajek': '.net', 'edgelist': '.txt'}


class Command(BaseCommand):
    help = 'Generate stochastic block model graphs with ground-truth files'

    def add_arguments(self, parser):
        parser.add_argument('kind', choices=['sbm', 'sbm-series'])
        parser.add_argument('--blocks', default='100,100,100', help='Comma-separated block sizes')
        parser.add_argument('--nu', type=float, default=3.0, help='p_in / p_out')
        parser.add_argument('--p-out', type=float, default=DEFAULT_P_OUT)
        parser.add_argument('--count', type=int, default=10, help='Number of graphs (sbm)')
        parser.add_argument('--layers', type=int, default=30, help='Number of layers (sbm-series)')
        parser.add_argument('--drift', type=float, default=0.05, help='Fraction of nodes moved per layer')
        parser.add_argument('--seed', type=int, default=None)
        parser.add_argument('--format', choices=sorted(EXTENSIONS), default='pajek')
        parser.add_argument('--out', required=True, help='Output directory')

    def handle(self, *args, **options):
        with exit_codes():
            spec = SbmSpec(
                block_sizes=comma_ints(options['blocks']),
                p_out=options['p_out'],
                nu=options['nu'],
                seed=options['seed'],
            )
            if options['count'] < 0:
                raise ConfigError(f"--count must be >= 0, got {options['count']}")
            out_dir = options['out']
            os.makedirs(out_dir, exist_ok=True)

            if options['kind'] == 'sbm':
                samples = []
                for k, seed in enumerate(derive_seeds(options['seed'], options['count'])):
                    sample = sbm_generate(SbmSpec(spec.block_sizes, spec.p_out, spec.nu, seed))
                    samples.append((f"sbm_nu{spec.nu:g}_{k:02d}", sample))
            else:
                series = sbm_series(spec, options['layers'], drift=options['drift'], seed=options['seed'])
                samples = [(f"layer_{k:03d}", sample) for k, sample in enumerate(series)]

            rows = [self._write(out_dir, name, sample, options['format']) for name, sample in samples]
            if rows:
                write_table(os.path.join(out_dir, 'manifest.csv'), rows)

        self.stdout.write(self.style.SUCCESS(f"Wrote {len(rows)} graphs to {out_dir}"))

    def _write(self, out_dir, name, sample, fmt):
        graph_file = f"{name}{EXTENSIONS[fmt]}"
        truth_file = f"{name}_truth.csv"
        writer = write_pajek if fmt == 'pajek' else write_edgelist
        writer(sample.graph, os.path.join(out_dir, graph_file))
        write_truth(os.path.join(out_dir, truth_file), sample.graph.node_labels, sample.truth)
        return {
            'name': name,
            'path': graph_file,
            'format': fmt,
            'directed': False,
            'truth': truth_file,
            'seed': sample.seed,
        }
