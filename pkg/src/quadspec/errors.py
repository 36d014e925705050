"""Exception hierarchy.

Two families matter to callers (and to the CLI exit status): input problems
(malformed files, bad shapes, out-of-range parameters) and analysis failures,
where the input is well formed but the mathematics says no.
"""


class QuadspecError(Exception):
    """Base class for every error raised by this package."""


class InputError(QuadspecError, ValueError):
    """Malformed input: schema violations, wrong shapes, empty grids."""


class AnalysisError(QuadspecError):
    """Well-formed input whose analysis cannot be completed."""


class RankAmbiguity(AnalysisError):
    """A singular value sits too close to the rank threshold to decide."""


class SplittingMismatch(AnalysisError):
    """Real-eigenvalue spaces do not add up to the singular space."""


class IndefiniteButNonzero(AnalysisError):
    """Im q restricted to S is indefinite, so ellipticity on S fails."""


class NotPartiallyElliptic(AnalysisError):
    """q is not elliptic on its singular space."""


class EllipticityRequired(AnalysisError):
    """An operation needs partial ellipticity and did not get it."""


class ClusterAmbiguity(AnalysisError):
    """Eigenvalue clusters overlap at the clustering scale."""


class NotSymplectic(AnalysisError):
    """A change of coordinates does not preserve the symplectic form."""


class QuadratureNoConvergence(AnalysisError):
    """Gauss-Legendre node doubling did not reach the requested tolerance."""


class OdeStepFailure(AnalysisError):
    """The Hamiltonian flow integrator gave up (step size underflow)."""


class NotCharacteristic(AnalysisError):
    """The symbol does not vanish at the point."""


class NotCritical(AnalysisError):
    """The differential of the symbol does not vanish at the point."""


class NewtonDiverged(AnalysisError):
    """Newton iteration from a seed did not converge."""


class FitFailure(AnalysisError):
    """No constant from the scan set makes a lower bound hold on the grid."""


class BasisCap(InputError):
    """The requested Hermite basis exceeds the configured size cap."""
