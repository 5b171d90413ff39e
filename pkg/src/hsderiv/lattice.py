"""Constants subspaces of a derivation: component kernels, the constants
ring, the descending tower, and the kernel/image checks behind the basis
search.

All subspaces live on the graded monomial basis of the model and are held in
reduced echelon form, so equal spaces compare equal as matrices. Field
degrees from the function-field picture turn into k-dimension ratios here;
reports label them model degrees.
"""

from __future__ import annotations

import numpy as np

from .artinian import ArtinianModel
from .derivation import HSDerivation, OperatorMatrix
from .errors import HypothesisFailure
from .linalg import Subspace, image_space, kernel_space
from .linalg import preimage_solve as _vec_preimage_solve
from .truncated import TruncatedPoly


def kernel_component(D: HSDerivation, i) -> Subspace:
    """Kernel of one component as a subspace of the model."""
    return kernel_space(D.model.ctx, D.component(i).mat)


def _stacked_kernel(D: HSDerivation, idxs) -> Subspace:
    mats = [D.component(i).mat for i in idxs]
    if not mats:
        return Subspace.full(D.model.ctx, D.model.dim)
    return kernel_space(D.model.ctx, np.concatenate(mats, axis=0))


def constants(D: HSDerivation) -> Subspace:
    """Joint kernel of the components with every exponent below p."""
    p = D.model.ctx.p
    idxs = [i for i in D.model.xidx.monomials
            if any(i) and all(x < p for x in i)]
    return _stacked_kernel(D, idxs)


def absolute_constants(D: HSDerivation) -> Subspace:
    """Joint kernel of every component of positive weight."""
    idxs = [i for i in D.model.xidx.monomials if any(i)]
    return _stacked_kernel(D, idxs)


def subspace_polys(model: ArtinianModel, V: Subspace) -> list:
    """Echelon basis rows as model elements, for reports."""
    return [model.poly_from_vec(V.basis[r]) for r in range(V.dim)]


class ConstantsTower:
    """Descending chain ambient = F_{-1} >= F_0 >= ... >= F_{m-1}.

    Level s is the joint kernel of the components at p^j times a coordinate
    unit for all j <= s. Construction verifies the chain is descending and
    each level is closed under ring multiplication; the dimension-ratio
    hypothesis (each step has model degree p^e) is reported, not enforced,
    so degenerate inputs like the trivial derivation are flagged rather
    than rejected.
    """

    def __init__(self, model: ArtinianModel, levels):
        self.model = model
        self.levels = tuple(levels)
        prev = None
        for s, V in enumerate(self.levels):
            if prev is not None and not V.is_subspace_of(prev):
                raise HypothesisFailure("tower levels are not descending")
            if s > 0:
                self._check_closed(V, s - 1)
            prev = V

    def _check_closed(self, V: Subspace, s: int) -> None:
        model = self.model
        for a in range(V.dim):
            for b in range(a, V.dim):
                prod = model.vec_mul(V.basis[a], V.basis[b])
                if not V.contains(prod):
                    raise HypothesisFailure(
                        f"tower level {s} is not closed under multiplication"
                    )

    @property
    def dims(self) -> tuple:
        return tuple(V.dim for V in self.levels)

    @property
    def model_degrees(self) -> tuple:
        """Consecutive dimension ratios dim F_{s-1} / dim F_s, exact."""
        out = []
        for a, b in zip(self.levels, self.levels[1:]):
            out.append(a.dim // b.dim if b.dim and a.dim % b.dim == 0 else None)
        return tuple(out)

    @property
    def degree_hypothesis_ok(self) -> bool:
        """Whether every step drops by exactly p^e."""
        want = self.model.ctx.p ** self.model.e
        return all(r == want for r in self.model_degrees)

    def level(self, s: int) -> Subspace:
        """F_s, with s = -1 giving the ambient space."""
        return self.levels[s + 1]


def tower(D: HSDerivation) -> ConstantsTower:
    model = D.model
    p, e, m = model.ctx.p, model.e, model.m
    levels = [Subspace.full(model.ctx, model.dim)]
    idxs = []
    for s in range(m):
        for l in range(e):
            idxs.append(tuple(p**s if t == l else 0 for t in range(e)))
        levels.append(_stacked_kernel(D, idxs))
    return ConstantsTower(model, levels)


def zm_check(T: OperatorMatrix) -> dict:
    """Nilpotency of order p, and whether ker T^(p-1) equals im T."""
    ctx = T.model.ctx
    p = ctx.p
    return {
        "nilpotent_p": T.power(p).is_zero(),
        "ker_im_equal": kernel_space(ctx, T.power(p - 1).mat)
        == image_space(ctx, T.mat),
    }


def restrict_matrix(T: OperatorMatrix, V: Subspace) -> np.ndarray:
    """Matrix of T on V's echelon basis coordinates.

    T must map V into itself; a basis image escaping V is a hypothesis
    failure, not a recoverable condition, since every caller divides
    through the restricted operator.
    """
    ctx = T.model.ctx
    cols = []
    for r in range(V.dim):
        w = ctx.mat_vec(T.mat, V.basis[r])
        if not V.contains(w):
            raise HypothesisFailure("operator does not preserve the subspace")
        cols.append(V.coords_of(w))
    if not cols:
        return ctx.zeros((0, 0))
    return np.stack(cols, axis=1)


def preimage_solve(T: OperatorMatrix, target, within: Subspace | None = None):
    """Canonical witness z with T(z) = target, optionally inside a subspace.

    target may be a model element or a coefficient vector; the witness comes
    back as a model element. NoSolution when the target is not reached.
    """
    model = T.model
    if isinstance(target, TruncatedPoly):
        tvec = model.vec_from_poly(target)
    else:
        tvec = np.asarray(target, dtype=np.int64)
    sol = _vec_preimage_solve(model.ctx, [(T.mat, tvec)], within)
    return model.poly_from_vec(sol)
