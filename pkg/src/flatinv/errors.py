"""Exception types shared across the toolkit."""


class FlatinvError(Exception):
    """Base class for all toolkit errors."""


class DomainError(FlatinvError):
    """A map was evaluated outside its mathematical domain."""


class NonFinite(FlatinvError):
    """A computation produced NaN or infinity."""


class EpsilonTooLarge(FlatinvError):
    """Approximation error bound meets or exceeds the input bound."""


class FormatError(FlatinvError):
    """A serialized file does not match the expected schema."""


class SchemaError(FlatinvError):
    """A run configuration does not match the documented schema."""


class EmptyUnion(FlatinvError):
    """No nonempty cell survived enumeration or gain substitution."""


class OriginExcluded(FlatinvError):
    """The origin is not strictly interior to any cell of the union."""


class SingularPencil(FlatinvError):
    """The Kronecker system of a Lyapunov solve is numerically singular."""


class NotControllable(FlatinvError):
    """Gain synthesis failed because the Gramian is numerically singular."""


class NotHurwitz(FlatinvError):
    """A closed-loop matrix required to be Hurwitz is not."""


class OriginOnBoundary(FlatinvError):
    """No positive invariant level exists (origin sits on the boundary)."""


class BigMTooSmall(FlatinvError):
    """Mixed-integer relaxation disagrees with enumeration beyond tolerance."""


class NodeBudget(FlatinvError):
    """Branch-and-bound exceeded its node limit."""


class InfeasibleFilter(FlatinvError):
    """The safety filter interval is empty at the queried state."""


class InfeasibleMPC(FlatinvError):
    """No admissible input sequence exists for the given horizon."""


class InvalidCertificate(FlatinvError):
    """A synthesized certificate failed its construction-time checks."""


class OutsideCertificateWarning(UserWarning):
    """The queried state lies outside the certified level set."""
