from django.core.management.base import BaseCommand

from core.management.commands._common import exit_codes
from services.metrics import nmi
from services.reporting import align_partitions, read_partition_file


class Command(BaseCommand):
    help = 'Normalized mutual information between two partition CSV files'

    def add_arguments(self, parser):
        parser.add_argument('partition_a')
        parser.add_argument('partition_b')

    def handle(self, *args, **options):
        with exit_codes():
            nodes_a, labels_a = read_partition_file(options['partition_a'])
            nodes_b, labels_b = read_partition_file(options['partition_b'])
            labels_a, labels_b = align_partitions(nodes_a, labels_a, nodes_b, labels_b)
            score = nmi(labels_a, labels_b)
        self.stdout.write(f"{score:.6f}")
