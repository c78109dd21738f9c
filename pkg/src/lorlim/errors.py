"""Exception and warning types shared across the toolkit."""


class LorlimError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LorlimError):
    """Malformed configuration: unknown preset, unparseable expression, bad field."""


class SignatureError(LorlimError):
    """Metric failed the Lorentzian signature check on the verification grid."""


class DomainError(LorlimError):
    """Empty or degenerate domain (no lattice nodes, zero-length interval, ...)."""


class ExcludedPointError(LorlimError):
    """A queried point lies in an excluded region (not part of the manifold)."""


class CausalityError(LorlimError):
    """A curve claimed causal has a chord or tangent outside the cone."""


class DivergenceError(LorlimError):
    """A quantity required finite (prefix arc length, ...) diverged."""


class MonotonicityError(LorlimError):
    """A time function is not strictly monotone along the given curve."""


class AcausalityError(LorlimError):
    """A surface required acausal has a causal chord."""


class RegularityError(LorlimError):
    """Cosmological-time regularity hypothesis failed (values unbounded or not
    tending to zero toward the past boundary)."""


class MarginError(LorlimError):
    """Finite-difference region touches the grid margin."""


class DisconnectedError(LorlimError):
    """Target node unreachable in the zigzag graph (separated by exclusions)."""


class StartPointError(LorlimError):
    """Curve-sequence start points do not converge to the prescribed point."""


class ExtractionFailure(LorlimError):
    """Limit-curve extraction could not select a convergent subsequence.

    Carries a ``diagnostics`` dict describing the failing stage.
    """

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CauchyViolationWarning(UserWarning):
    """Some lattice nodes have no causal relation to the surface.

    Carries the offending node indices in ``nodes``.
    """

    def __init__(self, message: str, nodes=None):
        super().__init__(message)
        self.nodes = list(nodes) if nodes is not None else []
