"""Quadratic and polynomial non-selfadjoint symbols: singular spaces, spectra,
escape weights and Hermite-Galerkin resolvent scans."""

__version__ = "0.1.0"

from .errors import AnalysisError, InputError, QuadspecError  # noqa: E402
from .symplectic import QuadraticForm, hamilton_map, quadratic_spectrum, singular_space  # noqa: E402

__all__ = [
    "__version__",
    "AnalysisError",
    "InputError",
    "QuadspecError",
    "QuadraticForm",
    "hamilton_map",
    "quadratic_spectrum",
    "singular_space",
]
