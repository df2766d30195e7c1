from django.db import models
from django.utils import timezone


class PipelineRun(models.Model):
    """
    One invocation of a pipeline stage.
    - config: the effective RunConfig, as echoed into the stage manifest
    - exit_code follows the command exit codes (0 ok, 1 config, 2 data, 3 numeric)
    """

    STAGES = [
        ('preprocess', 'Preprocess'),
        ('split', 'Split'),
        ('train', 'Train'),
        ('infer', 'Infer'),
        ('eval', 'Evaluate'),
        ('bench', 'Benchmark'),
        ('pipeline', 'Full pipeline'),
    ]

    STATUS = [
        ('running', 'Running'),
        ('succeeded', 'Succeeded'),
        ('failed', 'Failed'),
    ]

    stage = models.CharField(max_length=20, choices=STAGES)
    status = models.CharField(max_length=20, choices=STATUS, default='running')
    exit_code = models.PositiveSmallIntegerField(null=True, blank=True)
    message = models.TextField(blank=True, default='')
    config = models.JSONField(default=dict)
    output_dir = models.CharField(max_length=500, blank=True, default='')

    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-started_at']
        indexes = [
            models.Index(fields=['stage', 'status'], name='pipeline_pi_stage_4c1f0e_idx'),
        ]

    def __str__(self):
        return f"{self.stage} #{self.pk} ({self.status})"

    def finish(self, exit_code, message=''):
        self.exit_code = exit_code
        self.status = 'succeeded' if exit_code == 0 else 'failed'
        self.message = message
        self.finished_at = timezone.now()
        self.save(update_fields=['exit_code', 'status', 'message', 'finished_at'])
