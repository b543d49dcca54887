class ShiftlabError(Exception):
    """Base class for all errors raised by shiftlab."""


class InsufficientSupport(ShiftlabError):
    """A weight or series window is too short for the requested operation."""


class DomainError(ShiftlabError):
    """An argument lies outside the domain where the operation is defined
    (e.g. evaluation on the unit circle, |lambda| >= 1)."""


class NumericalError(ShiftlabError):
    """Two independent computational routes disagree, or a numerical
    certificate (aliasing, conditioning, branch tracking) failed."""


class ProfileTooShort(ShiftlabError):
    pass


class Unbounded(ShiftlabError):
    """A summability guard failed; the operator cannot be certified bounded."""


class PreconditionFailed(ShiftlabError):
    pass
