"""Quantitative stability of finitely presented groups.

Compute defects and homomorphism distances of generator assignments into
bi-invariant metric groups, run the certified defect-halving iteration, and
estimate empirical stability-rate curves and their equivalence classes.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as kernel_backend
from .core import AlmostHom, DefectReport, HomDistResult, defect, dist
from .core import enumerate_homomorphisms, evaluate_word, homdist_exact, homdist_upper
from .core import transport_hom, trivial_homomorphism
from .metrics import GroupElement, MetricDescriptor, distance, identity, invert, multiply
from .words import Presentation, Word, parse_presentation, parse_word

__all__ = [
    "__version__",
    "kernel_backend",
    "AlmostHom",
    "DefectReport",
    "HomDistResult",
    "GroupElement",
    "MetricDescriptor",
    "Presentation",
    "Word",
    "defect",
    "dist",
    "distance",
    "enumerate_homomorphisms",
    "evaluate_word",
    "homdist_exact",
    "homdist_upper",
    "identity",
    "invert",
    "multiply",
    "parse_presentation",
    "parse_word",
    "transport_hom",
    "trivial_homomorphism",
]
