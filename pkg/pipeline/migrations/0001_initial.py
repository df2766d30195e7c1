# Generated by Django 5.2.6

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='PipelineRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('stage', models.CharField(choices=[('preprocess', 'Preprocess'), ('split', 'Split'), ('train', 'Train'), ('infer', 'Infer'), ('eval', 'Evaluate'), ('bench', 'Benchmark'), ('pipeline', 'Full pipeline')], max_length=20)),
                ('status', models.CharField(choices=[('running', 'Running'), ('succeeded', 'Succeeded'), ('failed', 'Failed')], default='running', max_length=20)),
                ('exit_code', models.PositiveSmallIntegerField(blank=True, null=True)),
                ('message', models.TextField(blank=True, default='')),
                ('config', models.JSONField(default=dict)),
                ('output_dir', models.CharField(blank=True, default='', max_length=500)),
                ('started_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'ordering': ['-started_at'],
                'indexes': [models.Index(fields=['stage', 'status'], name='pipeline_pi_stage_4c1f0e_idx')],
            },
        ),
    ]
