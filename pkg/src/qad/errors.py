"""Exception hierarchy shared by every stage."""


class QADError(ValueError):
    """Base class for all errors raised by this package."""


class DataFormatError(QADError):
    """Malformed CSV input (ragged rows, non-numeric cells, too few samples)."""


class EncodingError(QADError):
    """A vector cannot be amplitude encoded (zero norm, bad length)."""


class RegisterError(QADError):
    """Unknown register, bad outcome index or inconsistent layout."""


class RotationError(QADError):
    """Controlled-rotation amplitude outside [-1, 1]."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class PostselectionError(QADError):
    """The post-selected branch has (numerically) zero probability."""


class DegenerateFeatureError(QADError):
    """A genuine feature has variance below the configured floor."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class RankDeficiencyError(QADError):
    """Covariance matrix singular beyond the eigenvalue floor."""


class SpectrumError(QADError):
    """Eigenvalues outside the interval an estimator can encode."""
