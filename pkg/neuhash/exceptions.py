class ShapeError(ValueError):
    pass


class NumericError(ArithmeticError):
    """Non-finite loss; `batch_index` names the offending mini-batch."""

    def __init__(self, message, batch_index=None):
        self.batch_index = batch_index
        if batch_index is not None:
            message = f"batch {batch_index}: {message}"
        super().__init__(message)


class UnknownUserError(IndexError):
    pass


class UnknownItemError(IndexError):
    pass


class CheckpointFormatError(ValueError):
    pass
