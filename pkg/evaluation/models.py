from django.db import models


class MetricRecord(models.Model):
    """
    One aggregate metric of one evaluated model, mirroring a metrics.csv row
    so methods and code lengths can be compared across runs.
    """

    METRICS = [
        ('ndcg', 'NDCG@k'),
        ('mrr', 'MRR'),
    ]

    run = models.ForeignKey(
        'pipeline.PipelineRun',
        on_delete=models.CASCADE,
        null=True,
        blank=True,
        related_name='metrics'
    )
    method = models.CharField(max_length=50)
    split = models.CharField(max_length=50)
    m = models.PositiveSmallIntegerField(help_text="Code length in bits")
    metric = models.CharField(max_length=10, choices=METRICS)
    k = models.PositiveSmallIntegerField(null=True, blank=True, help_text="Cutoff; empty for MRR")
    value = models.FloatField()
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['method', 'split', 'm', 'metric', 'k']
        indexes = [
            models.Index(fields=['method', 'split', 'm'], name='evaluation__method_8a2d31_idx'),
        ]

    def __str__(self):
        label = f"NDCG@{self.k}" if self.metric == 'ndcg' else 'MRR'
        return f"{self.method} {self.split} m={self.m} {label}={self.value:.4f}"

    @classmethod
    def record_report(cls, report, method, split, m, run=None):
        records = [
            cls(run=run, method=method, split=split, m=m, metric='ndcg', k=k, value=value)
            for k, value in report.ndcg_at.items()
        ]
        records.append(cls(run=run, method=method, split=split, m=m, metric='mrr', value=report.mrr))
        return cls.objects.bulk_create(records)
