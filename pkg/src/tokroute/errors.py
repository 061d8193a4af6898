"""Exception types shared across the package."""


class TokrouteError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(TokrouteError):
    """Operands have incompatible or unexpected shapes."""


class ConfigError(TokrouteError):
    """A configuration value or file is invalid."""


class FormatError(TokrouteError):
    """A serialized blob is malformed.

    Carries the byte offset at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ContractViolation(TokrouteError):
    """An internal invariant that callers rely on was broken."""


class CheckFailure(TokrouteError):
    """A runtime verification (e.g. an equivalence check) did not hold."""


class TrainingError(TokrouteError):
    """Training diverged or hit an unrecoverable state.

    Carries the epoch at which the failure occurred, when known.
    """

    def __init__(self, message, epoch=None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
        self.epoch = epoch
