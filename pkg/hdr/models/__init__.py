"""Spline spaces: univariate, tensor-product and hierarchical."""

from hdr.models.hierarchy import HierarchicalBasis, HierarchicalSpace, RefinementDomains
from hdr.models.tensor import Element, ElementBox, MultiIndex, TensorSpace
from hdr.models.univariate import KnotVector, UnivariateSpace

__all__ = [
    "KnotVector",
    "UnivariateSpace",
    "MultiIndex",
    "Element",
    "ElementBox",
    "TensorSpace",
    "RefinementDomains",
    "HierarchicalBasis",
    "HierarchicalSpace",
]
