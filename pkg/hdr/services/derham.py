"""
Hierarchical de Rham complex H⁰ →grad H¹ →curl H² and its cohomology.

Every space is embedded in the level-L tensor spaces through the R_j
matrices; grad and curl act there. Dimension counts are basis independent,
so ranks are taken in coefficient space.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
import scipy.linalg

from hdr.core.config import get_settings
from hdr.core.constants import COMPLEX_RESIDUAL_TOLERANCE, ONE_FORM_PATTERNS, TWO_FORM, ZERO_FORM
from hdr.core.enums import BasisVariant, ScalarMode
from hdr.core.linalg import SparseMatrix, block_diag, hstack, rank, write_matrix_market
from hdr.models.hierarchy import HierarchicalBasis, HierarchicalSpace, RefinementDomains
from hdr.models.tensor import curl_matrix, grad_matrix

logger = logging.getLogger(__name__)


class ComplexPropertyError(RuntimeError):
    """Raised when grad(H⁰) does not lie in H¹."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class ComplexMatrices:
    domains: RefinementDomains
    variant: BasisVariant
    mode: ScalarMode
    bases: dict[tuple[int, int], HierarchicalBasis] = field(repr=False)
    r0: SparseMatrix = field(repr=False)
    r1: SparseMatrix = field(repr=False)
    r2: SparseMatrix = field(repr=False)
    grad: SparseMatrix = field(repr=False)
    curl: SparseMatrix = field(repr=False)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.r0.shape[1], self.r1.shape[1], self.r2.shape[1]

    @property
    def one_form_block_sizes(self) -> tuple[int, int]:
        return self.bases[ONE_FORM_PATTERNS[0]].size, self.bases[ONE_FORM_PATTERNS[1]].size


@dataclass(frozen=True)
class CohomologyReport:
    h0: int
    h1: int
    h2: int
    rank_grad: int
    rank_curl: int
    dims: tuple[int, int, int]
    mode: ScalarMode

    @property
    def betti(self) -> tuple[int, int, int]:
        return self.h0, self.h1, self.h2


def build_complex(
    domains: RefinementDomains,
    variant: BasisVariant = BasisVariant.THB,
    mode: ScalarMode = ScalarMode.RATIONAL,
    verify: bool = True,
) -> ComplexMatrices:
    """
    Embeddings R0, R1, R2 and the operators G = grad_L·R0, C = curl_L·R1.

    **Input (request):**
        - domains: refinement domains satisfying Assumption 1.
        - variant: HB or THB basis.
        - mode: exact rational or float matrices.
        - verify: check that the grad image lies in span(R1).

    **Output (response):** ComplexMatrices. Raises ComplexPropertyError if verification fails.
    """
    space = HierarchicalSpace(domains, variant)
    bases = {pattern: space.basis(pattern) for pattern in (ZERO_FORM, *ONE_FORM_PATTERNS, TWO_FORM)}
    r0 = bases[ZERO_FORM].embedding
    r1 = block_diag([bases[ONE_FORM_PATTERNS[0]].embedding, bases[ONE_FORM_PATTERNS[1]].embedding])
    r2 = bases[TWO_FORM].embedding
    if mode is ScalarMode.FLOAT:
        r0, r1, r2 = r0.to_float(), r1.to_float(), r2.to_float()

    triple = domains.spaces(domains.max_level)
    grad = grad_matrix(triple, mode) @ r0
    curl = curl_matrix(triple, mode) @ r1
    matrices = ComplexMatrices(domains, variant, mode, bases, r0, r1, r2, grad, curl)
    if verify:
        _verify_grad_image(matrices)
    logger.info(
        "Built %s complex (%s): dims %s, L = %s", variant.value, mode.value, matrices.dims, domains.max_level
    )
    return matrices


def _verify_grad_image(matrices: ComplexMatrices) -> None:
    if matrices.grad.shape[1] == 0:
        return
    if matrices.mode is ScalarMode.RATIONAL:
        n1 = matrices.r1.shape[1]
        if rank(hstack([matrices.r1, matrices.grad])) != n1:
            raise ComplexPropertyError("complex property violated: grad image not in span(R1)", float("inf"))
        return
    residual = _grad_projection_residual(matrices)
    if residual > COMPLEX_RESIDUAL_TOLERANCE:
        raise ComplexPropertyError(
            f"complex property violated: grad image residual {residual:.3e}", residual
        )


def grad_coefficients(matrices: ComplexMatrices) -> np.ndarray:
    """grad(H⁰) expressed in the H¹ basis (least squares against R1)."""
    r1 = matrices.r1.to_dense()
    g = matrices.grad.to_dense()
    coeffs, *_ = scipy.linalg.lstsq(r1, g)
    return coeffs


def _grad_projection_residual(matrices: ComplexMatrices) -> float:
    g = matrices.grad.to_dense()
    coeffs = grad_coefficients(matrices)
    scale = max(np.linalg.norm(g), 1.0)
    return float(np.linalg.norm(matrices.r1.to_dense() @ coeffs - g) / scale)


def cohomology(matrices: ComplexMatrices) -> CohomologyReport:
    """h0 = n0 − rank G, h1 = n1 − rank C − rank G, h2 = n2 − rank C."""
    n0, n1, n2 = matrices.dims
    rank_grad = rank(matrices.grad)
    rank_curl = rank(matrices.curl)
    report = CohomologyReport(
        h0=n0 - rank_grad,
        h1=n1 - rank_curl - rank_grad,
        h2=n2 - rank_curl,
        rank_grad=rank_grad,
        rank_curl=rank_curl,
        dims=(n0, n1, n2),
        mode=matrices.mode,
    )
    logger.info("Cohomology (%s): h = %s", matrices.mode.value, report.betti)
    return report


def harmonic_basis(matrices: ComplexMatrices) -> np.ndarray:
    """
    Orthonormal basis (columns, H¹ coefficients) of ker C ∩ (im G)^⊥.

    Uses the Euclidean coefficient inner product, so the vectors span the
    harmonic space but are not the L²-orthogonal representatives.
    """
    n1 = matrices.dims[1]
    tol = get_settings().RANK_TOLERANCE
    curl = matrices.curl.to_dense()
    kernel = scipy.linalg.null_space(curl, rcond=tol) if curl.size else np.eye(n1)
    if kernel.shape[1] == 0:
        return np.zeros((n1, 0))
    g = grad_coefficients(matrices) if matrices.dims[0] else np.zeros((n1, 0))
    if g.shape[1] == 0:
        return kernel
    inner = g.T @ kernel
    free = scipy.linalg.null_space(inner, rcond=tol)
    if free.shape[1] == 0:
        return np.zeros((n1, 0))
    return scipy.linalg.orth(kernel @ free, rcond=tol)


def harmonic_fields(matrices: ComplexMatrices) -> np.ndarray:
    """Harmonic basis lifted to level-L X¹ coefficients."""
    basis = harmonic_basis(matrices)
    return matrices.r1.to_scipy() @ basis


def export_complex(matrices: ComplexMatrices, directory: Union[str, Path]) -> dict[str, Path]:
    """Write R0, R1, R2, G, C as MatrixMarket files (float values)."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for name in ("r0", "r1", "r2", "grad", "curl"):
        path = out_dir / f"{name}.mtx"
        write_matrix_market(path, getattr(matrices, name), comment=f"{matrices.variant.value} {name}")
        written[name] = path
    return written
