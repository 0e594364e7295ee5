"""
Sparse linear algebra over exact rationals or floats.

Rational matrices wrap sympy's sparse DomainMatrix over QQ (arbitrary
precision, no silent overflow); float matrices wrap scipy.sparse CSR.
Dense eigen- and least-squares solves go through scipy.linalg.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from hdr.core.config import get_settings
from hdr.core.enums import ScalarMode

logger = logging.getLogger(__name__)

Scalar = Union[Fraction, int, float]


class DimensionMismatchError(ValueError):
    """Raised when matrix shapes do not fit together."""

    def __init__(self, message: str, shapes: Optional[Sequence[tuple[int, int]]] = None):
        super().__init__(message)
        self.shapes = list(shapes or [])


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix that must be SPD fails its Cholesky factorization."""


def _to_qq(value: Scalar):
    q = value if isinstance(value, Fraction) else Fraction(value)
    return QQ(q.numerator, q.denominator)


def _qq_to_fraction(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


def _qq_to_float(value) -> float:
    return int(value.numerator) / int(value.denominator)


class SparseMatrix:
    """
    Coefficient matrix (subdivision, truncation, derivative, embedding).

    The scalar mode is fixed at construction; operations between matrices of
    different modes are rejected. Explicit zeros are never stored.
    """

    __slots__ = ("_rep", "mode")

    def __init__(self, rep, mode: ScalarMode):
        self._rep = rep
        self.mode = mode

    # ---- construction ----

    @classmethod
    def from_entries(
        cls,
        entries: Mapping[tuple[int, int], Scalar],
        shape: tuple[int, int],
        mode: ScalarMode = ScalarMode.RATIONAL,
    ) -> "SparseMatrix":
        """Build from a {(row, col): value} mapping (0-based)."""
        n_rows, n_cols = shape
        for i, j in entries:
            if not (0 <= i < n_rows and 0 <= j < n_cols):
                raise DimensionMismatchError(f"entry ({i}, {j}) outside shape {shape}", [shape])
        if mode is ScalarMode.RATIONAL:
            dod: dict[int, dict[int, object]] = {}
            for (i, j), value in entries.items():
                if value:
                    dod.setdefault(i, {})[j] = _to_qq(value)
            return cls(DomainMatrix(dod, shape, QQ), mode)
        keys = [key for key, value in entries.items() if value]
        rows = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
        cols = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
        data = np.fromiter((float(entries[k]) for k in keys), dtype=float, count=len(keys))
        return cls(scipy.sparse.csr_matrix((data, (rows, cols)), shape=shape), mode)

    @classmethod
    def from_scipy(cls, matrix) -> "SparseMatrix":
        csr = scipy.sparse.csr_matrix(matrix, dtype=float)
        csr.eliminate_zeros()
        return cls(csr, ScalarMode.FLOAT)

    @classmethod
    def identity(cls, n: int, mode: ScalarMode = ScalarMode.RATIONAL) -> "SparseMatrix":
        return cls.from_entries({(i, i): 1 for i in range(n)}, (n, n), mode)

    @classmethod
    def zeros(cls, shape: tuple[int, int], mode: ScalarMode = ScalarMode.RATIONAL) -> "SparseMatrix":
        return cls.from_entries({}, shape, mode)

    @classmethod
    def diagonal(cls, values: Sequence[Scalar], mode: ScalarMode = ScalarMode.RATIONAL) -> "SparseMatrix":
        n = len(values)
        return cls.from_entries({(i, i): v for i, v in enumerate(values)}, (n, n), mode)

    # ---- shape / inspection ----

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(self._rep.shape)

    @property
    def nnz(self) -> int:
        if self.mode is ScalarMode.RATIONAL:
            return sum(len(row) for row in self._rep.to_dod().values())
        return int(self._rep.count_nonzero())

    def entries(self) -> dict[tuple[int, int], Scalar]:
        """Nonzero entries as {(row, col): Fraction | float}."""
        if self.mode is ScalarMode.RATIONAL:
            return {
                (i, j): _qq_to_fraction(v)
                for i, row in self._rep.to_dod().items()
                for j, v in row.items()
            }
        coo = self._rep.tocoo()
        return {(int(i), int(j)): float(v) for i, j, v in zip(coo.row, coo.col, coo.data) if v != 0.0}

    def is_zero(self) -> bool:
        if self.mode is ScalarMode.RATIONAL:
            return not any(self._rep.to_dod().values())
        return self._rep.count_nonzero() == 0

    def equals(self, other: "SparseMatrix") -> bool:
        """Exact entrywise equality (same mode and shape)."""
        return self.mode is other.mode and self.shape == other.shape and self.entries() == other.entries()

    def column(self, j: int) -> dict[int, Scalar]:
        return {i: v for (i, jj), v in self.entries().items() if jj == j}

    def pattern(self) -> scipy.sparse.csr_matrix:
        """Boolean nonzero pattern as a scipy CSR matrix."""
        csr = self.to_scipy()
        out = scipy.sparse.csr_matrix((np.ones(csr.nnz, dtype=bool), csr.indices, csr.indptr), shape=csr.shape)
        return out

    # ---- conversion ----

    def to_scipy(self) -> scipy.sparse.csr_matrix:
        if self.mode is ScalarMode.FLOAT:
            return self._rep
        rows: list[int] = []
        cols: list[int] = []
        data: list[float] = []
        for i, row in self._rep.to_dod().items():
            for j, v in row.items():
                rows.append(i)
                cols.append(j)
                data.append(_qq_to_float(v))
        return scipy.sparse.csr_matrix((data, (rows, cols)), shape=self.shape)

    def to_float(self) -> "SparseMatrix":
        if self.mode is ScalarMode.FLOAT:
            return self
        return SparseMatrix(self.to_scipy(), ScalarMode.FLOAT)

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def to_domain_matrix(self) -> DomainMatrix:
        if self.mode is not ScalarMode.RATIONAL:
            raise TypeError("only rational matrices have an exact DomainMatrix form")
        return self._rep

    # ---- algebra ----

    def _check_mode(self, other: "SparseMatrix") -> None:
        if self.mode is not other.mode:
            raise TypeError(f"cannot combine {self.mode.value} and {other.mode.value} matrices")

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        self._check_mode(other)
        if self.shape[1] != other.shape[0]:
            raise DimensionMismatchError("inner dimensions differ", [self.shape, other.shape])
        if self.mode is ScalarMode.RATIONAL:
            return SparseMatrix(self._rep.matmul(other._rep), self.mode)
        return SparseMatrix((self._rep @ other._rep).tocsr(), self.mode)

    def __add__(self, other: "SparseMatrix") -> "SparseMatrix":
        self._check_mode(other)
        if self.shape != other.shape:
            raise DimensionMismatchError("shapes differ", [self.shape, other.shape])
        return SparseMatrix(self._rep + other._rep, self.mode)

    def __sub__(self, other: "SparseMatrix") -> "SparseMatrix":
        self._check_mode(other)
        if self.shape != other.shape:
            raise DimensionMismatchError("shapes differ", [self.shape, other.shape])
        return SparseMatrix(self._rep - other._rep, self.mode)

    def __neg__(self) -> "SparseMatrix":
        return self.scale(-1)

    def scale(self, factor: Scalar) -> "SparseMatrix":
        if self.mode is ScalarMode.RATIONAL:
            q = _to_qq(factor)
            dod = {i: {j: v * q for j, v in row.items()} for i, row in self._rep.to_dod().items()} if q else {}
            return SparseMatrix(DomainMatrix(dod, self.shape, QQ), self.mode)
        return SparseMatrix((self._rep * float(factor)).tocsr(), self.mode)

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def transpose(self) -> "SparseMatrix":
        if self.mode is ScalarMode.RATIONAL:
            return SparseMatrix(self._rep.transpose(), self.mode)
        return SparseMatrix(self._rep.transpose().tocsr(), self.mode)

    def kron(self, other: "SparseMatrix") -> "SparseMatrix":
        """Kronecker product self ⊗ other."""
        self._check_mode(other)
        (ra, ca), (rb, cb) = self.shape, other.shape
        if self.mode is ScalarMode.FLOAT:
            return SparseMatrix(scipy.sparse.kron(self._rep, other._rep, format="csr"), self.mode)
        a, b = self._rep.to_dod(), other._rep.to_dod()
        dod: dict[int, dict[int, object]] = {}
        for ia, row_a in a.items():
            for ja, va in row_a.items():
                for ib, row_b in b.items():
                    target = dod.setdefault(ia * rb + ib, {})
                    for jb, vb in row_b.items():
                        target[ja * cb + jb] = va * vb
        return SparseMatrix(DomainMatrix(dod, (ra * rb, ca * cb), QQ), self.mode)

    def select_columns(self, columns: Sequence[int]) -> "SparseMatrix":
        if self.mode is ScalarMode.FLOAT:
            return SparseMatrix(self._rep[:, list(columns)].tocsr(), self.mode)
        position = {c: k for k, c in enumerate(columns)}
        dod = {}
        for i, row in self._rep.to_dod().items():
            kept = {position[j]: v for j, v in row.items() if j in position}
            if kept:
                dod[i] = kept
        return SparseMatrix(DomainMatrix(dod, (self.shape[0], len(columns)), QQ), self.mode)

    def select_rows(self, rows: Sequence[int]) -> "SparseMatrix":
        return self.transpose().select_columns(rows).transpose()

    def apply(self, vector: Sequence[Scalar]) -> list[Scalar]:
        """Matrix-vector product returned as a list (Fractions in rational mode)."""
        if len(vector) != self.shape[1]:
            raise DimensionMismatchError("vector length differs from column count", [self.shape])
        if self.mode is ScalarMode.FLOAT:
            return list(self._rep @ np.asarray(vector, dtype=float))
        out: list[Scalar] = [Fraction(0)] * self.shape[0]
        for (i, j), v in self.entries().items():
            out[i] += v * Fraction(vector[j])
        return out

    def __repr__(self) -> str:
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz}, mode={self.mode.value})"


def hstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    """Concatenate matrices with equal row counts side by side."""
    first = blocks[0]
    for block in blocks[1:]:
        first._check_mode(block)
        if block.shape[0] != first.shape[0]:
            raise DimensionMismatchError("row counts differ", [b.shape for b in blocks])
    if len(blocks) == 1:
        return first
    if first.mode is ScalarMode.RATIONAL:
        return SparseMatrix(first._rep.hstack(*[b._rep for b in blocks[1:]]), first.mode)
    return SparseMatrix(scipy.sparse.hstack([b._rep for b in blocks], format="csr"), first.mode)


def vstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    """Stack matrices with equal column counts on top of each other."""
    return hstack([b.transpose() for b in blocks]).transpose()


def block_diag(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    mode = blocks[0].mode
    if mode is ScalarMode.FLOAT:
        return SparseMatrix(scipy.sparse.block_diag([b._rep for b in blocks], format="csr"), mode)
    dod: dict[int, dict[int, object]] = {}
    row_offset = col_offset = 0
    for block in blocks:
        block_mode = block.mode
        if block_mode is not mode:
            raise TypeError("block_diag requires a single scalar mode")
        for i, row in block._rep.to_dod().items():
            dod[row_offset + i] = {col_offset + j: v for j, v in row.items()}
        row_offset += block.shape[0]
        col_offset += block.shape[1]
    return SparseMatrix(DomainMatrix(dod, (row_offset, col_offset), QQ), mode)


# -----------------------------------------------------------------------------
# Rank
# -----------------------------------------------------------------------------


def rank(matrix: SparseMatrix, tolerance: Optional[float] = None) -> int:
    """
    Rank of a matrix.

    **Input (request):**
        - matrix: SparseMatrix in either mode.
        - tolerance: relative singular-value cutoff for float mode. Default Settings.RANK_TOLERANCE.

    **Output (response):** integer rank. Rational mode is exact (sympy elimination over QQ);
    float mode counts singular values above tolerance·σ_max.
    """
    if min(matrix.shape) == 0 or matrix.is_zero():
        return 0
    if matrix.mode is ScalarMode.RATIONAL:
        return int(matrix.to_domain_matrix().rank())
    return float_rank(matrix.to_dense(), tolerance)


def float_rank(dense: np.ndarray, tolerance: Optional[float] = None) -> int:
    if dense.size == 0:
        return 0
    tol = get_settings().RANK_TOLERANCE if tolerance is None else tolerance
    singular_values = scipy.linalg.svdvals(dense)
    if singular_values[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular_values > tol * singular_values[0]))


# -----------------------------------------------------------------------------
# Dense symmetric generalized eigenproblem
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray
    vectors: np.ndarray
    max_residual: float


def _as_dense(matrix) -> np.ndarray:
    if isinstance(matrix, SparseMatrix):
        return matrix.to_dense()
    if scipy.sparse.issparse(matrix):
        return matrix.toarray()
    return np.asarray(matrix, dtype=float)


def sym_gen_eig(stiffness, mass) -> EigenPairs:
    """
    All eigenpairs of K x = λ M x, ascending.

    **Input (request):**
        - stiffness: symmetric K (SparseMatrix, scipy sparse or ndarray).
        - mass: symmetric positive definite M.

    **Output (response):** EigenPairs with M-orthonormal vectors and the largest relative residual
    ‖Kx − λMx‖ / ‖K‖ over all pairs.
    """
    k = _as_dense(stiffness)
    m = _as_dense(mass)
    if k.shape != m.shape or k.shape[0] != k.shape[1]:
        raise DimensionMismatchError("K and M must be square of equal size", [k.shape, m.shape])
    k = 0.5 * (k + k.T)
    m = 0.5 * (m + m.T)
    try:
        scipy.linalg.cholesky(m, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("mass matrix is not positive definite") from exc

    values, vectors = scipy.linalg.eigh(k, m)
    norm_k = max(np.linalg.norm(k, ord=2), np.finfo(float).tiny)
    residuals = np.linalg.norm(k @ vectors - (m @ vectors) * values, axis=0) / norm_k
    max_residual = float(residuals.max()) if residuals.size else 0.0
    if max_residual > 1e-8:
        logger.warning("Generalized eigen residual %.3e above 1e-8", max_residual)
    return EigenPairs(values=values, vectors=vectors, max_residual=max_residual)


# -----------------------------------------------------------------------------
# Saddle-point solve
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class SaddleSolution:
    blocks: list[np.ndarray]
    singular: bool
    residual: float


def solve_saddle(blocks: Sequence[Sequence], rhs: Sequence[np.ndarray], pivot_tolerance: Optional[float] = None) -> SaddleSolution:
    """
    Direct solve of a block system.

    **Input (request):**
        - blocks: square grid of scipy sparse matrices (None for zero blocks).
        - rhs: one right-hand-side vector per block row.
        - pivot_tolerance: relative pivot threshold below which the system counts as singular.

    **Output (response):** SaddleSolution with the solution split by block column. Singular systems
    fall back to the least-norm least-squares solution and are flagged.
    """
    n_blocks = len(blocks)
    if len(rhs) != n_blocks or any(len(row) != n_blocks for row in blocks):
        raise DimensionMismatchError("block grid and right-hand side do not match")

    sizes = []
    for k in range(n_blocks):
        diag = blocks[k][k]
        if diag is None:
            raise DimensionMismatchError(f"diagonal block {k} is missing")
        if diag.shape[0] != diag.shape[1] or diag.shape[0] != len(rhs[k]):
            raise DimensionMismatchError(f"diagonal block {k} does not match its right-hand side", [diag.shape])
        sizes.append(diag.shape[0])
    for r, row in enumerate(blocks):
        for c, block in enumerate(row):
            if block is not None and block.shape != (sizes[r], sizes[c]):
                raise DimensionMismatchError(f"block ({r}, {c}) has shape {block.shape}", [block.shape])

    system = scipy.sparse.bmat(blocks, format="csc")
    b = np.concatenate([np.asarray(v, dtype=float) for v in rhs])
    tol = get_settings().SADDLE_PIVOT_TOLERANCE if pivot_tolerance is None else pivot_tolerance

    singular = False
    solution: Optional[np.ndarray] = None
    try:
        lu = scipy.sparse.linalg.splu(system)
        pivots = np.abs(lu.U.diagonal())
        if pivots.size and pivots.min() <= tol * pivots.max():
            singular = True
        else:
            solution = lu.solve(b)
    except RuntimeError:
        singular = True

    if singular:
        logger.warning("Singular block system (size %s); using least-norm solution", system.shape[0])
        solution, *_ = scipy.linalg.lstsq(system.toarray(), b, cond=get_settings().RANK_TOLERANCE)

    residual = float(np.linalg.norm(system @ solution - b))
    split = np.split(solution, np.cumsum(sizes)[:-1])
    return SaddleSolution(blocks=list(split), singular=singular, residual=residual)


# -----------------------------------------------------------------------------
# MatrixMarket I/O
# -----------------------------------------------------------------------------


def write_matrix_market(path: Union[str, Path], matrix: SparseMatrix, comment: str = "") -> None:
    """Write in MatrixMarket coordinate format (values as floats)."""
    scipy.io.mmwrite(str(path), matrix.to_scipy().tocoo(), comment=comment)


def read_matrix_market(path: Union[str, Path]) -> SparseMatrix:
    return SparseMatrix.from_scipy(scipy.io.mmread(str(path)))
