"""Exception hierarchy shared across the engine."""


class TriageError(Exception):
    """Base class for all engine errors."""


class ConfigError(TriageError):
    """Invalid configuration value or unsatisfiable setting."""


class DataError(TriageError):
    """Malformed or contract-violating input data."""


class ShapeError(TriageError):
    """Array shapes incompatible with the requested operation."""


class EmptyCorpusError(TriageError):
    """No report survived ingestion filters."""


class DegenerateVectorError(TriageError):
    """A vector with zero norm where a direction is required."""


class IndexBuildError(TriageError):
    """Similarity index construction or loading failed."""


class ProviderError(TriageError):
    """An embedding provider failed; carries provider diagnostics."""


class RetrievalError(TriageError):
    """Similar-issue retrieval failed."""


class TrainingError(TriageError):
    """Training diverged or hit a non-finite loss."""

    def __init__(self, message: str, epoch: int | None = None, step: int | None = None):
        super().__init__(message)
        self.epoch = epoch
        self.step = step


class NumericError(TriageError):
    """Non-finite values encountered in a numeric computation."""


class UnknownLabelError(TriageError):
    """Queried label is not part of the trained label space."""


class AlignmentError(TriageError):
    """Score vectors or rankings cover different candidate sets."""


class TunerError(TriageError):
    """Hyperparameter search could not run."""


class EvalError(TriageError):
    """Evaluation harness received an empty or inconsistent input."""


class InputError(TriageError):
    """Bad request payload (HTTP 400 equivalent)."""


class ServiceUnavailableError(TriageError):
    """Required runtime artifact missing (HTTP 503 equivalent)."""
