"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input lies outside an operation's documented domain."""


class NumericalFailure(RuntimeError):
    """A numerical routine failed to converge or returned garbage."""


class DegenerateProjection(DomainError):
    """A gentle projection would remove essentially all of the state's mass."""


class CertificateViolation(RuntimeError):
    """A certified inequality failed its post-hoc re-verification."""
