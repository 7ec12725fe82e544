"""Exception hierarchy and the integer status codes returned by kernels."""

OK = 0
NONPHYSICAL = 1
DENOMINATOR = 2
INTEGRATION = 3
NO_CONVERGENCE = 4


class EpflowError(Exception):
    """Base class for every error raised by the solver."""


class SolverError(EpflowError):
    """A failure of the numerical pipeline (exit code 3 in the CLI)."""

    def __init__(self, msg, step=None, time=None):
        super().__init__(msg)
        self.step = step
        self.time = time

    def __str__(self):
        base = super().__str__()
        if self.step is None:
            return base
        return f"{base} (step {self.step}, t={self.time:.6e} s)"


class NonPhysicalState(SolverError):
    pass


class DenominatorSingular(NonPhysicalState):
    pass


class IntegrationFailure(SolverError):
    pass


class NoConvergence(SolverError):
    pass


class DegenerateCell(SolverError):
    pass


class DegenerateEigensystem(SolverError):
    pass


class MeshTangled(SolverError):
    pass


class SolverFailure(SolverError):
    pass


class DomainMismatch(EpflowError):
    pass


class ConfigError(EpflowError):
    pass


_BY_CODE = {
    NONPHYSICAL: NonPhysicalState,
    DENOMINATOR: DenominatorSingular,
    INTEGRATION: IntegrationFailure,
    NO_CONVERGENCE: NoConvergence,
}


def raise_status(code, what):
    """Raise the exception matching a non-zero kernel status code."""
    if code == OK:
        return
    raise _BY_CODE.get(int(code), SolverError)(what)
