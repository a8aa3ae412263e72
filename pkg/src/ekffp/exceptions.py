"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid game, scenario, learner or run configuration."""


class NumericError(ArithmeticError):
    """A numeric kernel received non-finite input or hit a singular system.

    ``condition`` carries the condition-number estimate of the offending
    matrix when one is available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NotStartedError(RuntimeError):
    """A learner was asked to act before ``fit`` bound it to a game."""
