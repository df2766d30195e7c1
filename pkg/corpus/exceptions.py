class CorpusError(Exception):
    """Base class for ingestion, filtering and splitting failures."""


class ParseError(CorpusError, ValueError):

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyInputError(CorpusError, ValueError):
    pass


class EmptyAfterFilterError(CorpusError, ValueError):
    pass


class SplitArgumentError(CorpusError, ValueError):
    pass


class MissingArtifactError(CorpusError, FileNotFoundError):
    """An upstream file (dataset, split) is missing from an artifact directory."""

    def __init__(self, path):
        self.path = path
        super().__init__(f"missing artifact: {path}")


class ArtifactFormatError(CorpusError, ValueError):
    pass
