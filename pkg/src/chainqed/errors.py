"""Exception types raised by the model and the command-line front end."""


class ModelError(Exception):
    """Base class for all errors raised by chainqed."""


class SaturationError(ModelError):
    """A quantity diverges because an emitter fully extinguishes the guided light."""


class NoPhysicalAngle(ModelError):
    """An illumination angle condition has no real solution."""


class UnsupportedGeometry(ModelError):
    """The requested geometry/parameter combination is outside the model."""


class GridTruncation(ModelError):
    """A spectrum is not resolved by the frequency grid, even after widening."""


class ConfigError(ModelError):
    """A run configuration is malformed; ``field`` names the offending key."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
