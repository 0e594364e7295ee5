"""Tests for quadrature, assembly, the vector Laplace solve and the Maxwell eigenproblem."""

import math

import numpy as np
import numpy.testing as nptest
import pytest
from scipy import integrate

from hdr.core.constants import MAXWELL_SIDE
from hdr.core.enums import BoundaryMode, ScalarMode
from hdr.models.hierarchy import RefinementDomains, build_thb_basis
from hdr.models.tensor import MultiIndex
from hdr.services.derham import build_complex, cohomology, grad_coefficients
from hdr.services.mesh_io import document_to_domains, load_document, refine_domains
from hdr.services.solvers import (
    ManufacturedSolution,
    QuadratureRule,
    assemble,
    circular_front_field,
    polynomial_field,
    solve_maxwell,
    solve_vector_laplace,
    spurious_eigenvalues,
)


def _exact_mesh(data_dir, name: str) -> RefinementDomains:
    document = load_document(data_dir / name)
    domains, _ = refine_domains(document_to_domains(document), document.marks(), exact=True)
    return domains


class TestQuadrature:
    def test_weights_cover_the_square(self, two_function) -> None:
        rule = QuadratureRule.build(two_function)
        assert rule.integrate(np.ones(rule.weights.size)) == pytest.approx(1.0)
        assert len(rule.elements) == 52
        assert rule.per_element(np.ones(rule.weights.size)).sum() == pytest.approx(1.0)

    def test_polynomials_are_integrated_exactly(self, uniform_homogeneous) -> None:
        rule = QuadratureRule.build(uniform_homogeneous)
        x, y = rule.points.T
        assert rule.integrate(x ** 2 * y) == pytest.approx(1 / 6)


class TestAssembly:
    def test_partition_of_unity_at_points(self) -> None:
        domains = RefinementDomains.uniform(2, 4, BoundaryMode.OPEN)
        system = assemble(domains)
        nptest.assert_allclose(system.evaluate_zero_form(np.ones(system.dofs[0])), 1.0, atol=1e-12)

    def test_mass_matrices_are_symmetric_positive_definite(self, two_function) -> None:
        system = assemble(two_function)
        for mass in (system.m0, system.m1, system.m2):
            dense = mass.toarray()
            nptest.assert_allclose(dense, dense.T, atol=1e-12)
            assert np.linalg.eigvalsh(dense).min() > 0

    def test_gradients_are_curl_free(self, two_function) -> None:
        cx = build_complex(two_function, mode=ScalarMode.FLOAT)
        system = assemble(two_function, complex_matrices=cx)
        coefficients = grad_coefficients(cx)
        nptest.assert_allclose(system.curl1 @ coefficients, 0.0, atol=1e-9)

    def test_side_scales_the_mass_matrix(self, uniform_homogeneous) -> None:
        unit = assemble(uniform_homogeneous)
        scaled = assemble(uniform_homogeneous, side=2.0)
        nptest.assert_allclose(scaled.m0.toarray(), 4.0 * unit.m0.toarray(), rtol=1e-12)
        nptest.assert_allclose(scaled.m1.toarray(), unit.m1.toarray(), rtol=1e-12, atol=1e-14)

    @pytest.mark.slow
    def test_mass_matrix_matches_adaptive_quadrature(self, two_function) -> None:
        system = assemble(two_function)
        basis = build_thb_basis(two_function)
        fine = basis.finest_space()
        mesh = two_function.mesh(two_function.max_level)
        m0 = system.m0.toarray()

        def restriction(k: int) -> dict[MultiIndex, float]:
            return {fine.multi_index(r): float(v) for r, v in basis.embedding.column(k).items()}

        def value(terms: dict[MultiIndex, float], x: float, y: float) -> float:
            return sum(c * fine.evaluate(index, x, y) for index, c in terms.items())

        last = basis.size - 1
        neighbour = int(np.argmax(np.abs(m0[0, 1:]))) + 1
        for a, b in ((0, 0), (0, neighbour), (last, last)):
            fa, fb = restriction(a), restriction(b)
            cells = set().union(*(fine.box(i).elements() for i in fa))
            cells &= set().union(*(fine.box(i).elements() for i in fb))
            total = 0.0
            for cell in cells:
                (x0, x1), (y0, y1) = mesh.rectangle(cell)
                part, _ = integrate.dblquad(
                    lambda y, x: value(fa, x, y) * value(fb, x, y),
                    float(x0), float(x1), float(y0), float(y1),
                    epsabs=1e-15, epsrel=1e-13,
                )
                total += part
            assert m0[a, b] == pytest.approx(total, rel=1e-10)


class TestManufacturedSolutions:
    def test_polynomial_field_derivatives(self) -> None:
        solution = polynomial_field()
        x = np.array([0.0, 0.25, 1.0])
        y = np.array([0.5, 0.5, 0.5])
        nptest.assert_allclose(solution.u(x, y), [[0.0, 0.1875, 0.0], [0.0, 0.0, 0.0]])
        nptest.assert_allclose(solution.sigma(x, y), 2 * x - 1)
        nptest.assert_allclose(solution.curl_u(x, y), 0.0)
        nptest.assert_allclose(solution.f(x, y), [[2.0, 2.0, 2.0], [0.0, 0.0, 0.0]])

    def test_expressions_from_strings(self) -> None:
        solution = ManufacturedSolution.from_expressions("-y", "x", name="rotation")
        x = np.array([0.3])
        nptest.assert_allclose(solution.curl_u(x, x), 2.0)
        nptest.assert_allclose(solution.sigma(x, x), 0.0)

    def test_circular_front_vanishes_on_the_boundary(self) -> None:
        solution = circular_front_field()
        t = np.linspace(0.0, 1.0, 5)
        nptest.assert_allclose(solution.u(np.zeros(5), t)[0], 0.0, atol=1e-12)


class TestVectorLaplace:
    def test_uniform_mesh_reproduces_the_field(self) -> None:
        domains = RefinementDomains.uniform(3, 4, BoundaryMode.OPEN)
        result = solve_vector_laplace(assemble(domains), polynomial_field())
        assert not result.singular
        assert result.l2_error < 1e-8
        assert result.element_errors.shape == (16,)

    def test_exact_mesh_reproduces_the_field(self, data_dir) -> None:
        domains = _exact_mesh(data_dir, "laplace_marked.json")
        result = solve_vector_laplace(assemble(domains), polynomial_field())
        assert not result.singular
        assert result.l2_error <= 1e-10

    def test_problematic_mesh_is_singular(self, data_dir) -> None:
        domains = document_to_domains(load_document(data_dir / "laplace_problematic.json"))
        result = solve_vector_laplace(assemble(domains), polynomial_field())
        assert result.singular
        assert result.l2_error >= 1e-3
        assert result.curl_error <= 1e-8


class TestMaxwell:
    def test_uniform_spectrum(self) -> None:
        domains = RefinementDomains.uniform(3, 8)
        result = solve_maxwell(assemble(domains, side=MAXWELL_SIDE))
        assert result.zero_count == 81
        nptest.assert_allclose(result.nonzero[:5], [1, 1, 2, 4, 4], rtol=1e-2)
        assert spurious_eigenvalues(result.nonzero[:8]).size == 0

    def test_harmonic_fields_add_zero_eigenvalues(self, two_function) -> None:
        h1 = cohomology(build_complex(two_function, mode=ScalarMode.FLOAT)).h1
        system = assemble(two_function, side=MAXWELL_SIDE)
        result = solve_maxwell(system)
        assert h1 > 0
        assert result.zero_count == system.dofs[0] + h1

    @pytest.mark.slow
    def test_exact_mesh_has_no_extra_zeros(self, data_dir) -> None:
        domains = _exact_mesh(data_dir, "maxwell_marked.json")
        system = assemble(domains, side=MAXWELL_SIDE)
        result = solve_maxwell(system)
        assert result.zero_count == system.dofs[0]
        nptest.assert_allclose(result.nonzero[:8], [1, 1, 2, 4, 4, 5, 5, 8], atol=1e-5)
        assert spurious_eigenvalues(result.nonzero[:8]).size == 0

    @pytest.mark.slow
    def test_problematic_mesh_has_one_zero_per_pair(self, data_dir) -> None:
        domains = document_to_domains(load_document(data_dir / "maxwell_problematic.json"))
        system = assemble(domains, side=MAXWELL_SIDE)
        result = solve_maxwell(system)
        assert result.zero_count - system.dofs[0] == 4


class TestSpuriousEigenvalues:
    def test_flags_values_far_from_sums_of_squares(self) -> None:
        nptest.assert_array_equal(spurious_eigenvalues(np.array([1.0, 2.05, 3.0, 4.5])), [3.0, 4.5])

    def test_empty_input(self) -> None:
        assert spurious_eigenvalues(np.array([])).size == 0

    def test_tolerance(self) -> None:
        assert spurious_eigenvalues(np.array([5.2]), tol=0.5).size == 0
        assert math.isclose(float(spurious_eigenvalues(np.array([5.2]), tol=0.1)[0]), 5.2)
