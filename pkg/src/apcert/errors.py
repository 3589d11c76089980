"""Exception hierarchy shared by every stage of the pipeline."""


class APCertError(Exception):
    """Base class for all errors raised by apcert."""


class InvalidInterval(APCertError, ValueError):
    pass


class DivisionByZeroInterval(APCertError, ZeroDivisionError):
    pass


class DegenerateSplit(APCertError):
    """The widest enclosure is already below the split floor."""


class OutOfDomain(APCertError):
    pass


class ParseError(APCertError, ValueError):
    pass


class InvariantViolation(APCertError, ValueError):
    pass


class NoUniqueSolution(APCertError):
    pass


class EmptySolution(APCertError):
    pass


class SingularImplicit(APCertError):
    """s1(y, x) may vanish, so the implicit map is not differentiable there."""


class ResourceLimit(APCertError):
    pass


class EmptyInvariantSet(APCertError):
    pass
