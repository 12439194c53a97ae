"""Django ORM models for community detection run records."""
import json
from django.db import models
from django.utils import timezone


class PartitionRun(models.Model):
    """One optimisation of one dataset with one method (best of its attempts)."""
    dataset = models.CharField(max_length=200, db_index=True)
    method = models.CharField(max_length=50, db_index=True)
    score = models.FloatField()
    attempts = models.IntegerField(default=1)
    wall_time = models.FloatField()
    seed = models.BigIntegerField(null=True, blank=True)
    n_nodes = models.IntegerField(default=0)
    n_communities = models.IntegerField(default=0)
    partition_path = models.CharField(max_length=500, blank=True)
    scores = models.TextField(blank=True, null=True)  # JSON list of per-attempt scores
    peak_rss_mb = models.FloatField(null=True, blank=True)
    created_at = models.DateTimeField(default=timezone.now)

    class Meta:
        db_table = 'partition_runs'
        ordering = ['-created_at']

    @classmethod
    def from_report(cls, report):
        return cls.objects.create(
            dataset=report.dataset,
            method=report.method,
            score=report.score,
            attempts=report.attempts,
            wall_time=report.wall_time,
            seed=report.seed,
            n_nodes=report.n,
            n_communities=report.m,
            partition_path=str(report.partition_path or ''),
            scores=json.dumps(list(report.scores)),
            peak_rss_mb=report.peak_rss_mb,
        )

    def get_scores(self):
        return json.loads(self.scores) if self.scores else []

    def to_dict(self):
        return {
            'id': self.id,
            'dataset': self.dataset,
            'method': self.method,
            'score': round(self.score, 6),
            'attempts': self.attempts,
            'wall_time': self.wall_time,
            'seed': self.seed,
            'n_nodes': self.n_nodes,
            'n_communities': self.n_communities,
            'partition_path': self.partition_path,
            'scores': self.get_scores(),
            'peak_rss_mb': self.peak_rss_mb,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }

    def __str__(self):
        return f'{self.dataset}/{self.method}: {self.score:.6f}'


class TemporalRun(models.Model):
    """Warm-up plus per-layer fine-tuning over one layer series."""
    name = models.CharField(max_length=200, db_index=True)
    warmup = models.CharField(max_length=50, default='aggregate')
    layer_count = models.IntegerField(default=0)
    warmup_time = models.FloatField(default=0.0)
    total_time = models.FloatField(default=0.0)
    mean_score = models.FloatField(null=True, blank=True)
    mean_ratio = models.FloatField(null=True, blank=True)
    beats_reference = models.FloatField(null=True, blank=True)
    timeline_path = models.CharField(max_length=500, blank=True)
    created_at = models.DateTimeField(default=timezone.now)

    class Meta:
        db_table = 'temporal_runs'
        ordering = ['-created_at']

    @classmethod
    def from_report(cls, report):
        summary = report.summary()
        run = cls.objects.create(
            name=report.name,
            warmup=report.warmup,
            layer_count=summary['layers'],
            warmup_time=report.warmup_time,
            total_time=report.total_time,
            mean_score=summary['mean_score'],
            mean_ratio=summary['mean_ratio'],
            beats_reference=summary['beats_reference'],
            timeline_path=str(report.timeline_path or ''),
        )
        TemporalLayer.objects.bulk_create([
            TemporalLayer(
                run=run,
                position=k,
                layer_id=str(row['layer']),
                score=row['score'],
                communities=row['communities'],
                elapsed=row['time'],
                ratio=row.get('ratio'),
            )
            for k, row in enumerate(report.rows())
        ])
        return run

    def to_dict(self):
        return {
            'id': self.id,
            'name': self.name,
            'warmup': self.warmup,
            'layer_count': self.layer_count,
            'warmup_time': self.warmup_time,
            'total_time': self.total_time,
            'mean_score': self.mean_score,
            'mean_ratio': self.mean_ratio,
            'beats_reference': self.beats_reference,
            'timeline_path': self.timeline_path,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'layers': [layer.to_dict() for layer in self.layers.all()],
        }

    def __str__(self):
        return f'TemporalRun {self.id}: {self.name} ({self.layer_count} layers)'


class TemporalLayer(models.Model):
    run = models.ForeignKey(TemporalRun, on_delete=models.CASCADE, related_name='layers')
    position = models.IntegerField()
    layer_id = models.CharField(max_length=200)
    score = models.FloatField()
    communities = models.IntegerField()
    elapsed = models.FloatField()
    ratio = models.FloatField(null=True, blank=True)

    class Meta:
        db_table = 'temporal_layers'
        ordering = ['run', 'position']

    def to_dict(self):
        return {
            'position': self.position,
            'layer_id': self.layer_id,
            'score': self.score,
            'communities': self.communities,
            'elapsed': self.elapsed,
            'ratio': self.ratio,
        }
