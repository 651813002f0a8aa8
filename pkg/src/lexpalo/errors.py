"""Exception types raised across the package.

Every error the library raises derives from :class:`LexpaloError`, so CLI and
embedding code can catch one base class. Names describe the condition they
signal, not the module that raises them.
"""


class LexpaloError(Exception):
    """Base class for all errors raised by lexpalo."""


class CorpusIoError(LexpaloError):
    """A corpus file could not be read or written."""


class FormatError(LexpaloError):
    """A record or file does not match the documented schema.

    Carries the 1-based line number when known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateIdError(LexpaloError):
    """Two records share the same id."""


class EmptyCorpusError(LexpaloError):
    """An operation produced or received a corpus with no records."""


class StratumTooSmallError(LexpaloError):
    """A palo has too few records to be split into train and validation."""


class EmptyDocumentError(LexpaloError):
    """A statistic was requested for a document or corpus with no tokens."""


class WindowTooLongError(LexpaloError):
    """A sampling window exceeds the document it is drawn from."""


class DegenerateFitError(LexpaloError):
    """A power-law fit has no information to fit (e.g. all counts equal)."""


class VocabularyMismatchError(LexpaloError):
    """A vector or matrix is not indexed by the expected vocabulary."""


class AlphaNonPositiveError(LexpaloError):
    """The smoothing parameter must be strictly positive."""


class LabelMismatchError(LexpaloError):
    """Labels do not align with the rows of the matrix being fitted."""


class UnknownClassError(LexpaloError):
    """A class label is not part of the fitted model."""


class InconsistentClassesError(LexpaloError):
    """Training runs being aggregated disagree on the class set."""


class NoThresholdError(LexpaloError):
    """No word was ever flagged at the smoothing floor, so no essential-word
    threshold exists."""


class NormError(LexpaloError):
    """A vector expected to be L2-normalized is not."""


class ZeroDistanceError(LexpaloError):
    """Two distinct genres have distance zero, so closeness centrality is
    undefined."""


class ModelFormatError(LexpaloError):
    """A persisted model file has an unknown version or invalid content."""
