import glob

from django.core.management.base import BaseCommand

from core.management.commands._common import add_engine_arguments, dataset_name, exit_codes
from services.benchmark_service import benchmark_service, schedule_config
from services.errors import ConfigError
from services.graph_core import FILE_FORMATS, align_layers
from services.reporting import read_manifest, read_reference
from services.temporal import WarmupSpec


class Command(BaseCommand):
    help = 'Warm up on aggregated layers, then fine-tune the partition layer by layer'

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument('--layers-glob', help='Glob matching the layer files, sorted by name')
        source.add_argument('--manifest', help='CSV with name,path,format,directed in layer order')
        parser.add_argument('--format', choices=FILE_FORMATS, default='edgelist',
                            help='Layer format for --layers-glob')
        parser.add_argument('--directed', action='store_true', help='Read --layers-glob files as directed')
        parser.add_argument('--warmup', default='aggregate', help="'aggregate' or 'first:K'")
        parser.add_argument('--fine-tune-iters', type=int, default=None)
        parser.add_argument('--reference', default=None, help='CSV layer,score of a reference method')
        parser.add_argument('--name', default='temporal', help='Prefix of the output files')
        add_engine_arguments(parser)

    def handle(self, *args, **options):
        with exit_codes():
            warmup = WarmupSpec.parse(options['warmup'])
            layer_ids, layers = self._load_layers(options)
            reference = read_reference(options['reference']) if options['reference'] else None
            config = schedule_config(
                samples=options['samples'],
                max_communities=options['max_communities'],
                seed=options['seed'],
                n_jobs=options['n_jobs'],
            )
            report = benchmark_service.run_temporal(
                layers,
                layer_ids=layer_ids,
                config=config,
                warmup=warmup,
                fine_tune_iters=options['fine_tune_iters'],
                reference=reference,
                out_dir=options['out'],
                name=options['name'],
                seed=options['seed'],
                record=False if options['no_record'] else None,
            )

        summary = report.summary()
        self.stdout.write(self.style.SUCCESS(
            f"{summary['layers']} layers: mean score={summary['mean_score']:.6f} "
            f"total time={summary['total_time']:.3f}s"
        ))
        if summary['mean_ratio'] is not None:
            self.stdout.write(f"Mean ratio to reference: {summary['mean_ratio']:.4f} "
                              f"(beats reference on {100 * summary['beats_reference']:.1f}% of layers)")
        if summary.get('carried_layers'):
            self.stdout.write(self.style.WARNING(
                f"Fine-tuning scored below the carried partition on {summary['carried_layers']} layers"
            ))
        self.stdout.write(f"Timeline: {report.timeline_path}")

    def _load_layers(self, options):
        if options['layers_glob']:
            paths = sorted(glob.glob(options['layers_glob']))
            if not paths:
                raise ConfigError(f"No layer files match '{options['layers_glob']}'")
            entries = [
                {'name': dataset_name(p), 'path': p, 'format': options['format'],
                 'directed': options['directed']}
                for p in paths
            ]
        else:
            entries = read_manifest(options['manifest'])
        layers = [
            benchmark_service.load_dataset(e['path'], e['format'], e['directed'], 'original')
            for e in entries
        ]
        return [e['name'] for e in entries], align_layers(layers)
