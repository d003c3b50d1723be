"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ControllerFailure(RuntimeError):
    """A timestep controller could not produce an acceptable step.

    Attributes
    ----------
    best : StepOutcome or None
        Best candidate evaluated before giving up.
    history, record :
        Partial solution history and run record, attached by ``run`` when
        the failure aborts a whole integration.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
        self.history = None
        self.record = None
