class CodeDomainError(ValueError):
    """A code entry is not in {-1, +1}."""


class CodeLengthMismatch(ValueError):
    pass


class ResourceBudgetError(MemoryError):
    def __init__(self, required, budget):
        self.required = required
        self.budget = budget
        super().__init__(f"benchmark needs ~{required} bytes, budget is {budget}")


class CodeBookFormatError(ValueError):
    pass


class MissingCodeError(IndexError):
    """No code stored for the named user or item."""
