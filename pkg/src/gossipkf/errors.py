"""Exception hierarchy shared across the package."""


class GossipKFError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(GossipKFError):
    """A model, topology, plan, or scenario violates a structural invariant.

    Carries the full list of violation messages when more than one was found.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ScenarioParseError(GossipKFError):
    """A scenario file could not be parsed; message includes the location."""


class NumericalError(GossipKFError):
    """A numerical routine hit a degenerate or singular input."""


class DivergenceError(NumericalError):
    """A fixed-point iteration diverged or exhausted its iteration budget."""


class UnschedulableNodeError(NumericalError):
    """No power-feasible sensor selection with a finite steady cost exists."""
