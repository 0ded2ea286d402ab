"""Relative homology of real Milnor fibres from Morse data on the Milnor sphere,
with an independent mesh-based check."""

__version__ = "0.1.0"

from .homology import (  # noqa: E402
    ChainComplex,
    HandleDecomposition,
    HomologyReport,
    chain_homology,
    handle_decomposition,
    relative_homology,
    smith_normal_form,
)
from .poly import Polynomial, PolynomialSyntaxError, parse, perturb  # noqa: E402
from .sphcrit import CriticalPoint, SolverConfig, find_critical_points  # noqa: E402

__all__ = [
    "__version__",
    "Polynomial",
    "PolynomialSyntaxError",
    "parse",
    "perturb",
    "SolverConfig",
    "CriticalPoint",
    "find_critical_points",
    "HandleDecomposition",
    "HomologyReport",
    "ChainComplex",
    "handle_decomposition",
    "relative_homology",
    "chain_homology",
    "smith_normal_form",
]
