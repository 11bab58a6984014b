"""Exception hierarchy shared by all modules."""


class DCEError(Exception):
    """Base class for every error raised by dcesim."""


class InvalidArgument(DCEError, ValueError):
    pass


class OutsideDomain(InvalidArgument):
    """A radius at or inside the Schwarzschild horizon was supplied."""


class UnsupportedTrajectory(InvalidArgument):
    """The requested method cannot handle this trajectory kind."""


class RemovableSingularity(InvalidArgument):
    """A closed form was evaluated on a pole without asking for the limit branch."""


class NumericalFailure(DCEError, RuntimeError):
    pass


class ConfigError(DCEError):
    """Scenario file failed to parse or validate.

    ``violations`` holds every problem found, not only the first.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
