"""Exception hierarchy shared across the package.

Solver-type failures all derive from SolverError so callers (and the CLI)
can distinguish "bad configuration" from "the numerics gave up".
"""


class CrowdContestError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(CrowdContestError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(CrowdContestError):
    """An experiment spec failed to parse or validate.

    Carries the offending field name when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        if field is not None:
            message = f"[{field}] {message}"
        super().__init__(message)


class SolverError(CrowdContestError):
    """Base class for numerical failures."""


class BracketError(SolverError):
    """Root bracketing failed: f has the same sign at both endpoints."""


class NoConvergence(SolverError):
    """Iteration budget exhausted before reaching tolerance.

    Attributes carry the last iterate and residual for post-mortems.
    """

    def __init__(self, message: str, last=None, residual: float | None = None,
                 iterations: int | None = None):
        self.last = last
        self.residual = residual
        self.iterations = iterations
        if residual is not None:
            message = f"{message} (residual={residual:.3e}, iterations={iterations})"
        super().__init__(message)


class NumericalError(SolverError):
    """A non-finite value appeared where a finite one is required."""


class MonteCarloNoise(SolverError):
    """Monte Carlo standard error too large relative to the estimate."""


class InfeasibleBudget(SolverError):
    """No admissible parameter makes the expected payment reach the budget."""


class EmptyTrace(CrowdContestError):
    """Trace ingestion produced no usable records."""


class MalformedRecord(CrowdContestError):
    """A trace line could not be parsed; reports the 1-based line number."""

    def __init__(self, line_no: int, line: str, reason: str):
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: {reason}: {line!r}")
