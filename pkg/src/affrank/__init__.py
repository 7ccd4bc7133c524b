"""Exact affine subspaces of matrices over small prime fields with rank bounded below."""
from .field import GF, FieldElem, FieldSpec
from .matla import Matrix
from .spaces import AffineSubspace, CanonicalFamilySpec, make_subspace

__all__ = ["GF", "FieldElem", "FieldSpec", "Matrix", "AffineSubspace", "CanonicalFamilySpec", "make_subspace"]
