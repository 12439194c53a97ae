import pandas as pd
from django.core.management.base import BaseCommand

from core.management.commands._common import add_engine_arguments, comma_list, exit_codes
from services.benchmark_service import DIRECTED_MODES, benchmark_service


class Command(BaseCommand):
    help = 'Run several methods over a dataset manifest and write the comparison table'

    def add_arguments(self, parser):
        parser.add_argument('--manifest', required=True, help='CSV with name,path,format,directed')
        parser.add_argument('--methods', default='gnns100,louvain',
                            help="Comma-separated methods, e.g. gnns100,gnns2500,louvain")
        parser.add_argument('--attempts', type=int, default=None, help='Louvain attempts per dataset')
        parser.add_argument('--gnns-attempts', type=int, default=1, help='GNNS attempts per dataset')
        parser.add_argument('--directed-mode', choices=DIRECTED_MODES, default='symmetrize')
        add_engine_arguments(parser)

    def handle(self, *args, **options):
        with exit_codes():
            result = benchmark_service.run_benchmark(
                options['manifest'],
                comma_list(options['methods']),
                attempts=options['attempts'],
                out_dir=options['out'],
                seed=options['seed'],
                directed_mode=options['directed_mode'],
                gnns_attempts=options['gnns_attempts'],
                max_communities=options['max_communities'],
                n_jobs=options['n_jobs'],
                record=False if options['no_record'] else None,
            )

        df = pd.DataFrame(result['rows']).drop(columns=['error'])
        self.stdout.write(df.to_string(index=False, float_format=lambda v: f"{v:.6f}"))
        for failure in result['failures']:
            method = failure['method'] or 'load'
            self.stdout.write(self.style.WARNING(f"{failure['dataset']} / {method}: {failure['error']}"))
        self.stdout.write(self.style.SUCCESS(f"Table written to {result['table_path']}"))
