# Generated by Django 5.2.6

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
        ('pipeline', '0001_initial'),
    ]

    operations = [
        migrations.CreateModel(
            name='MetricRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('method', models.CharField(max_length=50)),
                ('split', models.CharField(max_length=50)),
                ('m', models.PositiveSmallIntegerField(help_text='Code length in bits')),
                ('metric', models.CharField(choices=[('ndcg', 'NDCG@k'), ('mrr', 'MRR')], max_length=10)),
                ('k', models.PositiveSmallIntegerField(blank=True, help_text='Cutoff; empty for MRR', null=True)),
                ('value', models.FloatField()),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('run', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.CASCADE, related_name='metrics', to='pipeline.pipelinerun')),
            ],
            options={
                'ordering': ['method', 'split', 'm', 'metric', 'k'],
                'indexes': [models.Index(fields=['method', 'split', 'm'], name='evaluation__method_8a2d31_idx')],
            },
        ),
    ]
