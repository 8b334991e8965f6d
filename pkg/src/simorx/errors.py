"""Exception types shared across the package."""


class SimorxError(Exception):
    """Base class for everything raised deliberately by this package."""


class ConfigError(SimorxError, ValueError):
    """A configuration value or shape is inconsistent."""


class CheckpointError(SimorxError, ValueError):
    """A checkpoint file is malformed, truncated, or incompatible."""


class TrainingDiverged(SimorxError, RuntimeError):
    """Raised when a training step produces a non-finite loss or gradient.

    Carries the last consistent parameter snapshot so callers can persist it.
    """

    def __init__(self, message, iteration, checkpoint=None):
        super().__init__(message)
        self.iteration = iteration
        self.checkpoint = checkpoint
