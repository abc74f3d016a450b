"""Length spectra and automorphism classification on nilmanifolds.

Exact rational Lie-algebra and lattice arithmetic, left-invariant geodesic
geometry, two-step closed-form lengths with a three-step reduction, and
marked-length-spectrum verdicts, all driven by a built-in example catalog.
"""

from .algebra import (
    StructureConstants,
    Subspace,
    center,
    check_jacobi,
    derived_series,
    is_strictly_nonsingular,
    quotient_algebra,
)
from .group import (
    CanonicalWord,
    GroupElement,
    LatticeSpec,
    bch_product,
    commutator,
    conjugate,
    inverse,
    LatticeContext,
    lattice_conjugacy_condition,
)
from .catalog import load_example, expected_matrix

__version__ = "0.1.0"
