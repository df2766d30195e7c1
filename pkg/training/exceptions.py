from neuhash.exceptions import NumericError


class EmptyTrainingSetError(ValueError):
    pass


class TrainingAborted(NumericError):
    """Training hit a non-finite loss; `history` holds the completed epochs."""

    def __init__(self, message, history, batch_index=None):
        self.history = history
        super().__init__(message, batch_index=batch_index)
