class EvaluationError(ValueError):
    pass


class EmptyEvaluationError(EvaluationError):
    """No user has a non-empty test list."""
