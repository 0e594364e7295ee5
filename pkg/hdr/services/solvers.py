"""
Galerkin assembly over the hierarchical mesh, the mixed vector Laplace
problem and the Maxwell eigenvalue problem.

Basis values come from the level-L tensor design matrices times the R_j
embeddings, so HB and THB spaces share one code path. The reference
square [0,1]² is mapped to [0,s]²: 0-forms pull back as functions, 1-forms
covariantly (factor 1/s), 2-forms as densities (factor 1/s²).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse
import sympy

from hdr.core.config import get_settings
from hdr.core.constants import ONE_FORM_PATTERNS, SPURIOUS_EIGENVALUE_TOLERANCE, TWO_FORM, UNIT_SIDE, ZERO_FORM
from hdr.core.enums import BasisVariant, ScalarMode
from hdr.core.linalg import NotPositiveDefiniteError, solve_saddle, sym_gen_eig
from hdr.models.hierarchy import ActiveElement, RefinementDomains, hierarchical_mesh
from hdr.services.derham import ComplexMatrices, build_complex

logger = logging.getLogger(__name__)

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


class SolverError(RuntimeError):
    """Raised when an assembled system cannot be solved as posed."""


# -----------------------------------------------------------------------------
# Quadrature
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss rule on every active element (reference coordinates)."""

    elements: tuple[ActiveElement, ...]
    points: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    element_ids: np.ndarray = field(repr=False)
    order: int

    @classmethod
    def build(cls, domains: RefinementDomains, order: Optional[int] = None) -> "QuadratureRule":
        order = order or max(domains.degrees) + 1
        nodes, node_weights = np.polynomial.legendre.leggauss(order)
        unit = 0.5 * (nodes + 1.0)
        unit_w = 0.5 * node_weights
        gx, gy = np.meshgrid(unit, unit, indexing="xy")
        wx, wy = np.meshgrid(unit_w, unit_w, indexing="xy")
        local_points = np.column_stack([gx.ravel(), gy.ravel()])
        local_weights = (wx * wy).ravel()

        elements = hierarchical_mesh(domains)
        points, weights, ids = [], [], []
        for k, cell in enumerate(elements):
            (x0, x1), (y0, y1) = domains.mesh(cell.level).rectangle(cell.element)
            x0, x1, y0, y1 = float(x0), float(x1), float(y0), float(y1)
            points.append(local_points * [x1 - x0, y1 - y0] + [x0, y0])
            weights.append(local_weights * (x1 - x0) * (y1 - y0))
            ids.append(np.full(local_weights.size, k))
        return cls(
            elements=elements,
            points=np.vstack(points),
            weights=np.concatenate(weights),
            element_ids=np.concatenate(ids),
            order=order,
        )

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def per_element(self, values: np.ndarray) -> np.ndarray:
        """Integral of point values over each active element."""
        return np.bincount(self.element_ids, weights=self.weights * values, minlength=len(self.elements))


# -----------------------------------------------------------------------------
# Assembly
# -----------------------------------------------------------------------------


@dataclass
class AssembledSystem:
    """
    Mass, stiffness and coupling matrices on one hierarchical complex.

    Point-value matrices (`phi0`, `phi1x`, ...) map coefficients to values at
    the quadrature points on the reference square; physical scaling is
    applied in the assembled matrices and in `evaluate_*`.
    """

    complex: ComplexMatrices
    quadrature: QuadratureRule
    side: float
    phi0: scipy.sparse.csr_matrix = field(repr=False)
    grad0x: scipy.sparse.csr_matrix = field(repr=False)
    grad0y: scipy.sparse.csr_matrix = field(repr=False)
    phi1x: scipy.sparse.csr_matrix = field(repr=False)
    phi1y: scipy.sparse.csr_matrix = field(repr=False)
    curl1: scipy.sparse.csr_matrix = field(repr=False)
    phi2: scipy.sparse.csr_matrix = field(repr=False)

    def _gram(self, left, right, factor: float) -> scipy.sparse.csr_matrix:
        w = scipy.sparse.diags(self.quadrature.weights)
        return (factor * (left.T @ w @ right)).tocsr()

    @cached_property
    def m0(self) -> scipy.sparse.csr_matrix:
        return self._gram(self.phi0, self.phi0, self.side ** 2)

    @cached_property
    def m1(self) -> scipy.sparse.csr_matrix:
        return self._gram(self.phi1x, self.phi1x, 1.0) + self._gram(self.phi1y, self.phi1y, 1.0)

    @cached_property
    def m2(self) -> scipy.sparse.csr_matrix:
        return self._gram(self.phi2, self.phi2, self.side ** -2)

    @cached_property
    def stiffness(self) -> scipy.sparse.csr_matrix:
        """K = ⟨curl u, curl v⟩."""
        return self._gram(self.curl1, self.curl1, self.side ** -2)

    @cached_property
    def coupling(self) -> scipy.sparse.csr_matrix:
        """B[v, τ] = ⟨grad τ, v⟩, dim H¹ × dim H⁰."""
        return self._gram(self.phi1x, self.grad0x, 1.0) + self._gram(self.phi1y, self.grad0y, 1.0)

    @property
    def physical_points(self) -> np.ndarray:
        return self.quadrature.points * self.side

    def load_vector(self, f: Field) -> np.ndarray:
        """⟨f, v⟩ for a physical vector field f(x, y) → (2, N)."""
        x, y = self.physical_points.T
        values = np.asarray(f(x, y), dtype=float)
        w = self.quadrature.weights
        return self.side * (self.phi1x.T @ (w * values[0]) + self.phi1y.T @ (w * values[1]))

    def evaluate_one_form(self, coefficients: np.ndarray) -> np.ndarray:
        """Physical 1-form values (2, N) at the quadrature points."""
        return np.vstack([self.phi1x @ coefficients, self.phi1y @ coefficients]) / self.side

    def evaluate_curl(self, coefficients: np.ndarray) -> np.ndarray:
        return (self.curl1 @ coefficients) / self.side ** 2

    def evaluate_zero_form(self, coefficients: np.ndarray) -> np.ndarray:
        return self.phi0 @ coefficients

    @property
    def dofs(self) -> tuple[int, int, int]:
        return self.complex.dims


def assemble(
    domains: RefinementDomains,
    variant: BasisVariant = BasisVariant.THB,
    side: float = UNIT_SIDE,
    complex_matrices: Optional[ComplexMatrices] = None,
    quadrature: Optional[QuadratureRule] = None,
) -> AssembledSystem:
    """
    Point-value matrices for every form on the hierarchical mesh.

    **Input (request):**
        - domains: refinement domains.
        - variant: HB or THB.
        - side: s for the physical domain [0, s]².
        - complex_matrices / quadrature: reuse previously built pieces.

    **Output (response):** AssembledSystem; matrices are assembled lazily on first access.
    """
    cx = complex_matrices or build_complex(domains, variant, ScalarMode.FLOAT, verify=False)
    quad = quadrature or QuadratureRule.build(domains)
    level_spaces = domains.spaces(domains.max_level)
    points = quad.points

    def design(pattern):
        return level_spaces.space(pattern).design_matrix(points)

    r0 = cx.r0.to_scipy()
    grad = cx.grad.to_scipy()
    curl = cx.curl.to_scipy()
    n10 = level_spaces.space(ONE_FORM_PATTERNS[0]).dimension
    psi10, psi01 = design(ONE_FORM_PATTERNS[0]), design(ONE_FORM_PATTERNS[1])
    r1 = cx.r1.to_scipy()
    psi11 = design(TWO_FORM)

    system = AssembledSystem(
        complex=cx,
        quadrature=quad,
        side=side,
        phi0=(design(ZERO_FORM) @ r0).tocsr(),
        grad0x=(psi10 @ grad[:n10]).tocsr(),
        grad0y=(psi01 @ grad[n10:]).tocsr(),
        phi1x=(psi10 @ r1[:n10]).tocsr(),
        phi1y=(psi01 @ r1[n10:]).tocsr(),
        curl1=(psi11 @ curl).tocsr(),
        phi2=(psi11 @ cx.r2.to_scipy()).tocsr(),
    )
    logger.info(
        "Assembled %s system: %s element(s), %s point(s), dofs %s",
        variant.value, len(quad.elements), points.shape[0], cx.dims,
    )
    return system


# -----------------------------------------------------------------------------
# Manufactured solutions
# -----------------------------------------------------------------------------


_X, _Y = sympy.symbols("x y", real=True)


def _lambdify(expr) -> Field:
    fn = sympy.lambdify((_X, _Y), expr, modules="numpy")

    def evaluate(x, y):
        return np.broadcast_to(np.asarray(fn(x, y), dtype=float), np.shape(x)).copy()

    return evaluate


def _lambdify_vector(exprs) -> Field:
    parts = [_lambdify(e) for e in exprs]
    return lambda x, y: np.vstack([p(x, y) for p in parts])


@dataclass(frozen=True)
class ManufacturedSolution:
    """u with σ = −div u, curl u and f = grad σ + rot curl u, as numpy callables."""

    name: str
    expressions: tuple
    u: Field = field(repr=False)
    sigma: Field = field(repr=False)
    curl_u: Field = field(repr=False)
    f: Field = field(repr=False)

    @classmethod
    def from_expressions(cls, u1: Union[str, sympy.Expr], u2: Union[str, sympy.Expr], name: str = "custom"):
        locals_ = {"x": _X, "y": _Y}
        e1 = sympy.sympify(u1, locals=locals_)
        e2 = sympy.sympify(u2, locals=locals_)
        sigma = -(sympy.diff(e1, _X) + sympy.diff(e2, _Y))
        curl = sympy.diff(e2, _X) - sympy.diff(e1, _Y)
        f1 = sympy.diff(sigma, _X) + sympy.diff(curl, _Y)
        f2 = sympy.diff(sigma, _Y) - sympy.diff(curl, _X)
        return cls(
            name=name,
            expressions=(e1, e2),
            u=_lambdify_vector((e1, e2)),
            sigma=_lambdify(sigma),
            curl_u=_lambdify(curl),
            f=_lambdify_vector((sympy.simplify(f1), sympy.simplify(f2))),
        )


def polynomial_field() -> ManufacturedSolution:
    """u = (x(1−x), 0); lies in the p ≥ 2 Open spaces."""
    return ManufacturedSolution.from_expressions("x*(1 - x)", "0", name="polynomial")


def circular_front_field() -> ManufacturedSolution:
    """u = (sin(πx)·t, sin(πy)·t), t = tanh(100((x−½)² + (y−½)² − 0.3²))."""
    front = "tanh(100*((x - 1/2)**2 + (y - 1/2)**2 - 9/100))"
    return ManufacturedSolution.from_expressions(f"sin(pi*x)*{front}", f"sin(pi*y)*{front}", name="circular_front")


# -----------------------------------------------------------------------------
# Vector Laplace
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class LaplaceResult:
    sigma: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)
    l2_error: float
    curl_error: float
    element_errors: np.ndarray = field(repr=False)
    singular: bool
    residual: float


def solve_vector_laplace(system: AssembledSystem, solution: ManufacturedSolution) -> LaplaceResult:
    """
    Mixed Hodge Laplacian: find σ_h ∈ H⁰, u_h ∈ H¹ with
    ⟨σ,τ⟩ − ⟨u, grad τ⟩ = 0 and ⟨grad σ, v⟩ + ⟨curl u, curl v⟩ = ⟨f, v⟩.

    **Output (response):** LaplaceResult with the L² error of u_h, the L² norm of
    curl(u_h − u), per-element squared errors and the singular flag of the saddle solve.
    """
    b = system.coupling
    rhs = system.load_vector(solution.f)
    saddle = solve_saddle(
        [[-system.m0, b.T.tocsr()], [b, system.stiffness]],
        [np.zeros(system.m0.shape[0]), rhs],
    )
    sigma_h, u_h = saddle.blocks
    if saddle.singular:
        logger.warning("Vector Laplace system singular (harmonic fields present); least-norm solution used")

    x, y = system.physical_points.T
    jacobian = system.side ** 2
    diff = system.evaluate_one_form(u_h) - solution.u(x, y)
    squared = jacobian * np.sum(diff ** 2, axis=0)
    element_errors = system.quadrature.per_element(squared)
    curl_diff = system.evaluate_curl(u_h) - solution.curl_u(x, y)
    curl_error = math.sqrt(max(system.quadrature.integrate(jacobian * curl_diff ** 2), 0.0))
    l2_error = math.sqrt(max(float(element_errors.sum()), 0.0))
    logger.info("Vector Laplace (%s): L2 error %.6e, singular=%s", solution.name, l2_error, saddle.singular)
    return LaplaceResult(
        sigma=sigma_h,
        u=u_h,
        l2_error=l2_error,
        curl_error=curl_error,
        element_errors=element_errors,
        singular=saddle.singular,
        residual=saddle.residual,
    )


# -----------------------------------------------------------------------------
# Maxwell eigenproblem
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class EigenResult:
    values: np.ndarray = field(repr=False)
    zero_threshold: float
    zero_count: int
    max_residual: float

    @property
    def nonzero(self) -> np.ndarray:
        return self.values[self.zero_count:]


def solve_maxwell(system: AssembledSystem, zero_tolerance: Optional[float] = None) -> EigenResult:
    """
    All eigenvalues ω² of ⟨curl u, curl v⟩ = ω² ⟨u, v⟩ on H¹.

    Values at or below zero_tolerance·λ_max count as numerical zeros.
    """
    tol = get_settings().EIGEN_ZERO_TOLERANCE if zero_tolerance is None else zero_tolerance
    try:
        pairs = sym_gen_eig(system.stiffness, system.m1)
    except NotPositiveDefiniteError as exc:
        raise SolverError("1-form mass matrix is not positive definite") from exc
    values = np.sort(pairs.values)
    lam_max = float(np.max(np.abs(values))) if values.size else 0.0
    threshold = tol * lam_max
    zero_count = int(np.count_nonzero(values <= threshold))
    logger.info("Maxwell: %s eigenvalue(s), %s numerical zero(s)", values.size, zero_count)
    return EigenResult(values=values, zero_threshold=threshold, zero_count=zero_count, max_residual=pairs.max_residual)


def spurious_eigenvalues(values: np.ndarray, tol: float = SPURIOUS_EIGENVALUE_TOLERANCE) -> np.ndarray:
    """Values farther than tol from every m² + n² (m, n ≥ 0, not both zero)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values
    top = int(math.isqrt(int(math.ceil(values.max()))) + 2)
    exact = np.array(sorted({m * m + n * n for m in range(top + 1) for n in range(top + 1)} - {0}), dtype=float)
    distance = np.min(np.abs(values[:, None] - exact[None, :]), axis=1)
    return values[distance > tol]
