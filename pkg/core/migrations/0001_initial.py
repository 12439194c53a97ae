# Generated by Django 5.0.6 on 2026-10-18 09:12

import django.db.models.deletion
import django.utils.timezone
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='PartitionRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('dataset', models.CharField(db_index=True, max_length=200)),
                ('method', models.CharField(db_index=True, max_length=50)),
                ('score', models.FloatField()),
                ('attempts', models.IntegerField(default=1)),
                ('wall_time', models.FloatField()),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('n_nodes', models.IntegerField(default=0)),
                ('n_communities', models.IntegerField(default=0)),
                ('partition_path', models.CharField(blank=True, max_length=500)),
                ('scores', models.TextField(blank=True, null=True)),
                ('peak_rss_mb', models.FloatField(blank=True, null=True)),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
            ],
            options={
                'db_table': 'partition_runs',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='TemporalRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(db_index=True, max_length=200)),
                ('warmup', models.CharField(default='aggregate', max_length=50)),
                ('layer_count', models.IntegerField(default=0)),
                ('warmup_time', models.FloatField(default=0.0)),
                ('total_time', models.FloatField(default=0.0)),
                ('mean_score', models.FloatField(blank=True, null=True)),
                ('mean_ratio', models.FloatField(blank=True, null=True)),
                ('beats_reference', models.FloatField(blank=True, null=True)),
                ('timeline_path', models.CharField(blank=True, max_length=500)),
                ('created_at', models.DateTimeField(default=django.utils.timezone.now)),
            ],
            options={
                'db_table': 'temporal_runs',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='TemporalLayer',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('position', models.IntegerField()),
                ('layer_id', models.CharField(max_length=200)),
                ('score', models.FloatField()),
                ('communities', models.IntegerField()),
                ('elapsed', models.FloatField()),
                ('ratio', models.FloatField(blank=True, null=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='layers', to='core.temporalrun')),
            ],
            options={
                'db_table': 'temporal_layers',
                'ordering': ['run', 'position'],
            },
        ),
    ]
