"""Exception hierarchy shared across the package."""


class ReluFemError(Exception):
    """Base class for all errors raised by this package."""


class DocumentError(ReluFemError):
    """A document (mesh/function/network file) is malformed or inconsistent."""


class MeshError(ReluFemError):
    """A mesh violates a structural requirement (unbounded cell, empty interior, ...)."""


class CompileError(ReluFemError):
    """Network construction failed (bad epsilon, rank-deficient cell, infeasible LP, ...)."""


class VerifyError(ReluFemError):
    """A verification run could not be carried out or a check failed hard."""


class ConditioningWarning(UserWarning):
    """Emitted when constructed weights become large enough to threaten accuracy."""
