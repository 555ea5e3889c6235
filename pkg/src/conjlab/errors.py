"""Exception hierarchy shared by every conjlab module."""


class ConjlabError(Exception):
    """Base class for all library errors."""


class IntegrationError(ConjlabError):
    """The ODE integrator could not complete the requested span."""


class StepBudgetExceeded(IntegrationError):
    pass


class NonFiniteState(IntegrationError):
    pass


class StepSizeUnderflow(IntegrationError):
    pass


class ToleranceNotMet(ConjlabError):
    """Adaptive quadrature exhausted its refinement budget."""


class CertificateRejected(ConjlabError):
    """A user-supplied constant violates a structural inequality."""

    def __init__(self, message: str, inequality: str = "", value: float | None = None):
        super().__init__(message)
        self.inequality = inequality
        self.value = value


class MissingJacobian(ConjlabError):
    pass


class NoConvergence(ConjlabError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace


class NewtonDiverged(ConjlabError):
    pass


class ParseError(ConjlabError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
