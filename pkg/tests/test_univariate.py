"""Tests for knot vectors, univariate bases, subdivision and differentiation."""

from fractions import Fraction

import numpy as np
import numpy.testing as nptest
import pytest

from hdr.core.enums import BoundaryMode, ScalarMode
from hdr.models.univariate import (
    BasisIndexError,
    KnotVector,
    KnotVectorError,
    NotNestedError,
    UnivariateSpace,
    derivative_matrix,
    dyadic_refine,
    level_subdivision,
    subdivision_matrix,
)

RNG_POINTS = np.random.default_rng(7).uniform(0.01, 0.99, 50)


class TestKnotVector:
    def test_uniform_homogeneous(self) -> None:
        kv = KnotVector.uniform(2, 4)
        assert kv.knots == (0, 0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1, 1)
        assert kv.m == 4
        assert kv.breakpoints.num_intervals == 4

    def test_open_repeats_ends_p_plus_one_times(self) -> None:
        kv = KnotVector.uniform(3, 2, BoundaryMode.OPEN)
        assert kv.knots.count(Fraction(0)) == 4
        assert kv.knots.count(Fraction(1)) == 4

    def test_wrong_end_multiplicity(self) -> None:
        with pytest.raises(KnotVectorError, match="homogeneous mode needs exactly 2 copies"):
            KnotVector((0, 0, 0, 1, 1, 1), 2, BoundaryMode.HOMOGENEOUS)

    def test_decreasing_knots(self) -> None:
        with pytest.raises(KnotVectorError, match="non-decreasing"):
            KnotVector((0, 0, Fraction(1, 2), Fraction(1, 4), 1, 1), 2)

    def test_interior_multiplicity_bound(self) -> None:
        with pytest.raises(KnotVectorError, match="repeated more than 2"):
            KnotVector.from_breakpoints(2, [0, Fraction(1, 2), 1], multiplicities=[3])

    def test_dyadic_refine_inserts_midpoints(self) -> None:
        fine = dyadic_refine(KnotVector.uniform(2, 4))
        assert fine == KnotVector.uniform(2, 8)
        assert fine.contains(KnotVector.uniform(2, 4))


class TestUnivariateSpace:
    @pytest.mark.parametrize(
        ("degree", "intervals", "mode", "dim0", "dim1"),
        [
            (2, 4, BoundaryMode.HOMOGENEOUS, 4, 5),
            (3, 10, BoundaryMode.HOMOGENEOUS, 11, 12),
            (3, 10, BoundaryMode.OPEN, 13, 12),
            (4, 20, BoundaryMode.OPEN, 24, 23),
        ],
    )
    def test_dimensions(self, degree, intervals, mode, dim0, dim1) -> None:
        kv = KnotVector.uniform(degree, intervals, mode)
        assert UnivariateSpace(kv, 0).dimension == dim0
        assert UnivariateSpace(kv, 1).dimension == dim1

    def test_support_of_index_three(self) -> None:
        s = UnivariateSpace(KnotVector.uniform(2, 4), 0).support(3)
        assert (s.lo, s.hi) == (Fraction(1, 4), 1)
        assert list(s.intervals) == [2, 3, 4]

    def test_index_out_of_range(self) -> None:
        space = UnivariateSpace(KnotVector.uniform(2, 4), 0)
        with pytest.raises(BasisIndexError):
            space.support(0)
        with pytest.raises(IndexError):
            space.evaluate(5, 0.5)

    def test_open_partition_of_unity(self) -> None:
        space = UnivariateSpace(KnotVector.uniform(3, 5, BoundaryMode.OPEN), 0)
        nptest.assert_allclose(space.evaluate_all(RNG_POINTS).sum(axis=1), 1.0, atol=1e-13)

    def test_open_one_forms_partition_of_unity(self) -> None:
        space = UnivariateSpace(KnotVector.uniform(3, 5, BoundaryMode.OPEN), 1)
        nptest.assert_allclose(space.evaluate_all(RNG_POINTS).sum(axis=1), 1.0, atol=1e-13)

    def test_homogeneous_zero_forms_vanish_at_boundary(self) -> None:
        space = UnivariateSpace(KnotVector.uniform(2, 4), 0)
        assert np.abs(space.evaluate_all([0.0, 1.0])).max() == 0.0

    def test_evaluate_is_left_continuous_at_one(self) -> None:
        space = UnivariateSpace(KnotVector.uniform(2, 4, BoundaryMode.OPEN), 0)
        assert space.evaluate(space.dimension, 1.0) == pytest.approx(1.0)

    def test_functions_on_interval(self) -> None:
        space = UnivariateSpace(KnotVector.uniform(2, 4), 0)
        assert space.functions_on(1) == (1, 2)
        assert space.functions_on(4) == (3, 4)


class TestSubdivision:
    def test_interior_quadratic_column(self) -> None:
        matrix = level_subdivision(KnotVector.uniform(2, 4), 0)
        assert matrix.column(1) == {
            1: Fraction(1, 4), 2: Fraction(3, 4), 3: Fraction(3, 4), 4: Fraction(1, 4)
        }

    @pytest.mark.parametrize("mode", list(BoundaryMode))
    @pytest.mark.parametrize("form_degree", [0, 1])
    def test_subdivision_reproduces_coarse_functions(self, mode, form_degree) -> None:
        coarse_kv = KnotVector.uniform(3, 5, mode)
        coarse = UnivariateSpace(coarse_kv, form_degree)
        fine = UnivariateSpace(dyadic_refine(coarse_kv), form_degree)
        matrix = level_subdivision(coarse_kv, form_degree).to_dense()
        nptest.assert_allclose(
            fine.evaluate_all(RNG_POINTS) @ matrix, coarse.evaluate_all(RNG_POINTS), atol=1e-12
        )

    def test_entries_are_non_negative(self) -> None:
        entries = level_subdivision(KnotVector.uniform(3, 6, BoundaryMode.OPEN), 0).entries()
        assert all(v > 0 for v in entries.values())

    def test_float_mode(self) -> None:
        kv = KnotVector.uniform(2, 4)
        coarse, fine = UnivariateSpace(kv, 0), UnivariateSpace(dyadic_refine(kv), 0)
        assert subdivision_matrix(coarse, fine, ScalarMode.FLOAT).mode is ScalarMode.FLOAT

    def test_not_nested(self) -> None:
        a = UnivariateSpace(KnotVector.uniform(2, 3), 0)
        b = UnivariateSpace(KnotVector.uniform(2, 4), 0)
        with pytest.raises(NotNestedError, match="does not contain"):
            subdivision_matrix(a, b)


class TestDerivative:
    @pytest.mark.parametrize("mode", list(BoundaryMode))
    def test_matches_central_differences(self, mode) -> None:
        kv = KnotVector.uniform(3, 5, mode)
        s0, s1 = UnivariateSpace(kv, 0), UnivariateSpace(kv, 1)
        d = derivative_matrix(kv).to_dense()
        assert d.shape == (s1.dimension, s0.dimension)
        h = 1e-6
        numeric = (s0.evaluate_all(RNG_POINTS + h) - s0.evaluate_all(RNG_POINTS - h)) / (2 * h)
        nptest.assert_allclose(s1.evaluate_all(RNG_POINTS) @ d, numeric, atol=1e-5)

    def test_constants_have_zero_derivative(self) -> None:
        kv = KnotVector.uniform(2, 4, BoundaryMode.OPEN)
        ones = [1] * UnivariateSpace(kv, 0).dimension
        assert all(v == 0 for v in derivative_matrix(kv).apply(ones))
