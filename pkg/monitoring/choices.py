"""
Enumerations shared across the monitoring package.

These are Django TextChoices so they render nicely in command output and
compare equal to their plain string values in serialized documents.
"""
from django.db import models


class ChartKind(models.TextChoices):
    BERNOULLI = 'bernoulli', 'Bernoulli CUSUM'
    BERNOULLI_LOWER = 'bernoulli_lower', 'Bernoulli CUSUM (lower)'
    BK = 'bk', 'BK-CUSUM'
    BK_LOWER = 'bk_lower', 'BK-CUSUM (lower)'
    CGR = 'cgr', 'CGR-CUSUM'

    @property
    def is_lower(self):
        return self in (ChartKind.BERNOULLI_LOWER, ChartKind.BK_LOWER)


class LimitKind(models.TextChoices):
    """Chart families the control limit engine can calibrate."""
    BERNOULLI = 'bernoulli', 'Bernoulli CUSUM'
    BK = 'bk', 'BK-CUSUM'
    CGR = 'cgr', 'CGR-CUSUM'


class ModelKind(models.TextChoices):
    LOGISTIC = 'logistic', 'Logistic regression'
    COX = 'cox', 'Cox proportional hazards'
    MANUAL = 'manual', 'Manually specified'


class Classification(models.TextChoices):
    WORSE = 'worse', 'Worse than expected'
    IN_CONTROL = 'in-control', 'In control'
    BETTER = 'better', 'Better than expected'


class CGRMethod(models.TextChoices):
    MATRIX = 'matrix', 'Precomputed intensity matrix'
    RESCAN = 'rescan', 'Recompute at every time point'
