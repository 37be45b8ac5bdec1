"""Exception hierarchy shared by all simulator modules."""


class CamCimError(Exception):
    """Base class for simulator errors."""


class ContractViolation(CamCimError, ValueError):
    """An argument violates an operation's precondition."""


class CodeRangeError(ContractViolation):
    """A weight or input value lies outside the code space."""


class CorruptCodeError(CamCimError, ValueError):
    """A stored weight code breaks the dual-block complement invariant."""


class UnsupportedConfiguration(CamCimError, ValueError):
    """The requested configuration is not modeled."""


class CapacityExceeded(CamCimError, ValueError):
    """The model does not fit in the plane."""


class StageConfigError(CamCimError, ValueError):
    """Ablation stage and configuration disagree."""


class ConfigError(CamCimError, ValueError):
    """A run configuration failed validation.

    ``field`` names the offending key (dotted path) when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ImageFormatError(CamCimError, ValueError):
    """A plane image could not be decoded."""


class TraceFormatError(CamCimError, ValueError):
    """A token trace file is malformed."""
