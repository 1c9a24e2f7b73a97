"""Exception hierarchy. Every error carries a short category used by the CLI."""


class ScaError(Exception):
    category = "error"


class ShapeError(ScaError, ValueError):
    category = "shape"


class DegenerateBandwidthError(ScaError, ValueError):
    category = "degenerate-bandwidth"


class SingularPencilError(ScaError, ArithmeticError):
    category = "singular-pencil"


class DegenerateProjectionError(ScaError, ArithmeticError):
    category = "degenerate-projection"


class DataError(ScaError, ValueError):
    category = "data"


class ProtocolError(ScaError, RuntimeError):
    """Raised when an experiment would violate the DA/DG protocol (e.g. label leakage)."""

    category = "protocol"


class ConfigError(ScaError, ValueError):
    category = "config"
