from django.conf import settings
from django.core.management.base import BaseCommand

from core.management.commands._common import add_engine_arguments, dataset_name, exit_codes
from services.benchmark_service import benchmark_service, parse_method
from services.errors import ConfigError
from services.graph_core import SUPPORTED_FORMATS


class Command(BaseCommand):
    help = 'Partition one graph file with GNNS or Louvain'

    def add_arguments(self, parser):
        parser.add_argument('--input', required=True, help='Graph file')
        parser.add_argument('--format', choices=SUPPORTED_FORMATS, default='edgelist')
        parser.add_argument('--directed', action='store_true', help='Read the file as a directed graph')
        parser.add_argument('--symmetrize', action='store_true',
                            help='Replace a directed graph by W + W^T before optimising')
        parser.add_argument('--method', default='gnns', help="'gnns', 'gnns<S>' or 'louvain'")
        parser.add_argument('--attempts', type=int, default=None,
                            help='Runs to keep the best of (default 1 for GNNS)')
        parser.add_argument('--name', default=None, help='Dataset name used in output files')
        add_engine_arguments(parser)

    def handle(self, *args, **options):
        with exit_codes():
            spec = parse_method(options['method'], options['samples'])
            attempts = options['attempts']
            if attempts is None:
                attempts = settings.GNNS_LOUVAIN_ATTEMPTS if spec.kind == 'louvain' else 1
            if attempts < 1:
                raise ConfigError(f"--attempts must be >= 1, got {attempts}")

            graph = benchmark_service.load_dataset(
                options['input'],
                format=options['format'],
                directed=options['directed'],
                directed_mode='symmetrize' if options['symmetrize'] else 'original',
            )
            report = benchmark_service.run_partition(
                graph,
                options['name'] or dataset_name(options['input']),
                spec.name,
                attempts=attempts,
                seed=options['seed'],
                out_dir=options['out'],
                samples=spec.samples,
                max_communities=options['max_communities'],
                n_jobs=options['n_jobs'],
                record=False if options['no_record'] else None,
            )

        self.stdout.write(self.style.SUCCESS(
            f"{report.dataset} / {report.method}: score={report.score:.6f} "
            f"communities={report.m} time={report.wall_time:.3f}s"
        ))
        self.stdout.write(f"Partition: {report.partition_path}")
