"""Exception types shared across the package."""


class RejectedInputError(ValueError):
    """An argument violates an operation's precondition (shape, range, dtype)."""


class TrainingFaultError(ArithmeticError):
    """Non-finite values reached the optimizer; the run cannot continue."""


class RejectedThresholdError(ValueError):
    """A threshold leaves one side of the split empty."""


class DegenerateDistributionError(ValueError):
    """Too few distinct values to place a threshold between them."""


class DegenerateAgreementError(ValueError):
    """Elementwise probability product underflowed; renormalization impossible."""


class DegenerateTargetError(ValueError):
    """A soft-target row is all zero and cannot be renormalized."""


class MalformedFileError(ValueError):
    """A binary data file does not follow the expected record layout."""


class MalformedRecordError(MalformedFileError):
    """A single record inside a data file holds an invalid value."""


class LengthMismatchError(ValueError):
    """A label file's line count disagrees with the dataset it annotates."""


class MalformedLabelError(ValueError):
    """A label file line is not an integer in the valid class range."""
