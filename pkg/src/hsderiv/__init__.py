"""Exact truncated iterative derivations over finite fields.

The package models k-algebra maps r -> sum_i D_i(r) v^i on artinian
quotients k[x]/(x_i^(p^m)), iterative with respect to a formal group law,
together with the linear-algebra machinery their structure theory needs:
component matrices, constants towers, canonical basis search, field-side
rank tests, and a batch CLI.
"""

from .artinian import ArtinianModel, GradedIndexing
from .basis import (
    BasisCandidate,
    BasisReport,
    assemble_product_basis,
    find_x,
    find_y,
    one_dim_basis,
    verify_canonical_basis,
)
from .derivation import (
    HSDerivation,
    OperatorMatrix,
    canonical_derivation,
    evp_point,
    p_fold_evP,
    reconstruct_from_ppowers,
    truncate_derivation,
    twist_by_automorphism,
    witt2_pfold_expansion,
)
from .errors import HsderivError
from .fieldmodel import (
    FieldDerivationContext,
    dependence_test,
    p_independence_test,
    rank_over_field,
    wronskian_matrix,
)
from .gf import FqContext, FqScalar
from .grouplaw import (
    FormalGroupLaw,
    check_axioms,
    h_n,
    iterated_law,
    lambda_coeffs,
    make_additive,
    make_multiplicative,
    make_witt2,
    n_series,
    product_law,
    structure_constants,
    truncate_law,
)
from .lattice import (
    ConstantsTower,
    absolute_constants,
    constants,
    kernel_component,
    tower,
)
from .linalg import Subspace
from .poly import MultiPoly, RationalFunc
from .textform import format_poly, format_trunc, parse_poly, parse_trunc
from .truncated import TruncatedPoly, TruncatedRing, convert, invert_unit, \
    substitute

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
