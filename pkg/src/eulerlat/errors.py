"""Exception hierarchy shared by every module."""


class EulerLatError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class NotEulerian(EulerLatError):
    pass


class NotSimplyConnected(EulerLatError):
    pass


class Disconnected(EulerLatError):
    pass


class ConstructionInvariantViolated(EulerLatError):
    pass


class NonTermination(EulerLatError):
    pass


class InconsistentPotential(EulerLatError):
    pass


class InvalidPotential(EulerLatError):
    pass


class GraphMismatch(EulerLatError):
    pass


class UnknownFace(EulerLatError):
    pass


class WalkDidNotTerminate(EulerLatError):
    pass


class NotAdjacent(EulerLatError):
    pass


class AuditFailed(EulerLatError):
    pass


class BudgetExceeded(EulerLatError):
    pass


class CapExceeded(EulerLatError):
    pass


class NoCentralFace(EulerLatError):
    pass


class InvalidArgs(EulerLatError, ValueError):
    pass


class InvalidTower(EulerLatError):
    pass


class NonSolid(EulerLatError):
    pass


class NonIntegerCoefficients(EulerLatError):
    pass


class OracleFailure(EulerLatError):
    pass


class ValidationError(EulerLatError):
    pass


class NonSolidWarning(UserWarning):
    """The mixing bound only covers solid regions; the sample may be far from uniform."""


class RatioFloorViolated(UserWarning):
    """An estimated peel ratio fell well below the assumed 1/4 floor."""


class ParseError(EulerLatError):
    """Input file is not valid JSON."""
