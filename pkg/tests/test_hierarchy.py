"""Tests for refinement domains, the hierarchical mesh, Assumption 1 and the HB / THB bases."""

from fractions import Fraction

import numpy as np
import pytest

from hdr.core.constants import ONE_FORM_PATTERNS, TWO_FORM, ZERO_FORM
from hdr.core.enums import BasisVariant, BoundaryMode
from hdr.models.hierarchy import (
    InactiveFunctionError,
    NestednessError,
    RefinementDomains,
    build_basis,
    build_hb_basis,
    build_thb_basis,
    check_assumption1,
    children,
    contained_functions,
    greedy_generators,
    hierarchical_mesh,
    parents,
    refine_mesh,
    refine_supports,
    support_elements,
    truncate,
)
from hdr.models.tensor import Element, MultiIndex
from tests import oracles
from tests.conftest import random_domains


class TestRefinementDomains:
    def test_trailing_empty_levels_are_dropped(self, uniform_homogeneous) -> None:
        domains = RefinementDomains(uniform_homogeneous.base, (frozenset({Element(1, 1)}), frozenset()))
        assert domains.max_level == 1

    def test_omega_is_children_of_refined(self, two_function) -> None:
        assert len(two_function.refined_at(0)) == 12
        assert len(two_function.omega(1)) == 48
        assert two_function.omega(2) == frozenset()

    def test_refine_mesh_rejects_elements_outside_omega(self, two_function) -> None:
        with pytest.raises(NestednessError, match="outside") as info:
            refine_mesh(two_function, 1, [Element(8, 1)])
        assert info.value.elements == [Element(8, 1)]

    def test_refine_mesh_rejects_missing_elements(self, uniform_homogeneous) -> None:
        with pytest.raises(NestednessError, match="do not exist"):
            refine_mesh(uniform_homogeneous, 0, [Element(5, 1)])

    def test_non_strict_refinement_is_accepted(self, two_function) -> None:
        out = refine_mesh(two_function, 1, [Element(8, 1)], strict=False)
        assert out.max_level == 2

    def test_input_is_unchanged(self, uniform_homogeneous) -> None:
        refine_mesh(uniform_homogeneous, 0, [Element(1, 1)])
        assert uniform_homogeneous.max_level == 0


class TestHierarchicalMesh:
    def test_two_function_mesh(self, two_function) -> None:
        cells = hierarchical_mesh(two_function)
        assert sum(1 for c in cells if c.level == 0) == 4
        assert sum(1 for c in cells if c.level == 1) == 48

    def test_matches_descent_oracle(self, make_random_domains) -> None:
        for seed in range(5):
            domains = make_random_domains(seed)
            cells = hierarchical_mesh(domains)
            assert set(cells) == oracles.active_elements(domains)
            assert oracles.mesh_area(domains, cells) == Fraction(1)


class TestAssumption1:
    def test_union_of_supports_passes(self, two_function) -> None:
        assert check_assumption1(two_function) == []

    def test_single_element_is_not_a_support(self, uniform_homogeneous) -> None:
        domains = RefinementDomains(uniform_homogeneous.base, (frozenset({Element(1, 1)}),))
        [violation] = check_assumption1(domains)
        assert violation.level == 0
        assert violation.uncovered == frozenset({Element(1, 1)})

    def test_stale_generator_is_reported(self, two_function) -> None:
        domains = two_function.with_generators(0, [MultiIndex(2, 2)])
        [violation] = check_assumption1(domains)
        assert violation.stale_generators == frozenset({MultiIndex(2, 2)})

    def test_random_corpus_satisfies_assumption1(self, make_random_domains) -> None:
        for seed in range(5):
            assert check_assumption1(make_random_domains(seed)) == []

    def test_greedy_generators_cover_omega(self, two_function) -> None:
        generators = greedy_generators(two_function, 0)
        assert support_elements(two_function, 0, generators) == set(two_function.refined_at(0))


class TestParentsChildren:
    def test_interior_quadratic_has_four_parents(self) -> None:
        domains = RefinementDomains.uniform(2, 8)
        assert len(parents(domains, 1, MultiIndex(6, 6))) == 4

    def test_interior_quadratic_has_sixteen_children(self) -> None:
        domains = RefinementDomains.uniform(2, 8)
        assert len(children(domains, 0, MultiIndex(4, 4))) == 16

    def test_level_zero_has_no_parents(self) -> None:
        assert parents(RefinementDomains.uniform(2, 4), 0, MultiIndex(1, 1)) == frozenset()

    def test_parent_child_symmetry(self) -> None:
        domains = RefinementDomains.uniform(3, 5, BoundaryMode.OPEN)
        for child in children(domains, 0, MultiIndex(3, 2)):
            assert MultiIndex(3, 2) in parents(domains, 1, child)


class TestBases:
    def test_members_of_two_function_level(self, two_function) -> None:
        assert contained_functions(two_function, 0) == frozenset(
            MultiIndex(*i) for i in [(1, 1), (3, 3), (3, 4), (4, 3), (4, 4)]
        )

    def test_full_refinement_equals_next_tensor_space(self, uniform_homogeneous) -> None:
        domains = refine_mesh(uniform_homogeneous, 0, uniform_homogeneous.mesh(0).elements())
        for variant in BasisVariant:
            basis = build_basis(domains, ZERO_FORM, variant)
            assert basis.active[0] == ()
            assert basis.size == domains.tensor_space(1).dimension

    def test_thb_partition_of_unity(self) -> None:
        domains = refine_supports(
            RefinementDomains.uniform(2, 4, BoundaryMode.OPEN), 0, [MultiIndex(2, 2), MultiIndex(3, 3)]
        )
        basis = build_thb_basis(domains)
        assert basis.embedding.apply([1] * basis.size) == [1] * basis.finest_space().dimension

    def test_hb_and_thb_share_active_sets(self, two_function) -> None:
        hb, thb = build_hb_basis(two_function), build_thb_basis(two_function)
        assert hb.active == thb.active
        assert hb.embedding.shape == thb.embedding.shape

    def test_truncation_drops_fine_coefficients(self, two_function) -> None:
        hb, thb = build_hb_basis(two_function), build_thb_basis(two_function)
        level, index = 0, hb.active[0][0]
        assert len(thb.coefficients(level, index)) <= len(hb.coefficients(level, index))

    def test_truncate_zeroes_contained_functions(self, two_function) -> None:
        space = two_function.tensor_space(1)
        coefficients = truncate([1] * space.dimension, two_function, 1)
        inside = space.flat_index(MultiIndex(2, 2))
        assert coefficients[inside] == 0
        assert sum(coefficients) < space.dimension

    def test_inactive_function(self, two_function) -> None:
        basis = build_thb_basis(two_function)
        with pytest.raises(InactiveFunctionError):
            basis.column_of(0, MultiIndex(1, 1))
        assert basis.mother(1, MultiIndex(2, 2)) == (1, MultiIndex(2, 2))


ALL_PATTERNS = [ZERO_FORM, *ONE_FORM_PATTERNS, TWO_FORM]


class TestTruncationInvariants:
    """THB columns re-expand in the HB basis and never widen a mother's support."""

    @pytest.fixture(params=["two_function", "cubic"])
    def domains(self, request, two_function) -> RefinementDomains:
        if request.param == "two_function":
            return two_function
        return random_domains(1, degree=3, intervals=10, levels=2)

    @pytest.mark.parametrize("pattern", ALL_PATTERNS)
    def test_thb_columns_lie_in_the_hb_span(self, domains, pattern) -> None:
        hb = build_hb_basis(domains, pattern).embedding.to_dense()
        thb = build_thb_basis(domains, pattern).embedding.to_dense()
        for source, target in ((hb, thb), (thb, hb)):
            weights, *_ = np.linalg.lstsq(source, target, rcond=None)
            assert np.abs(source @ weights - target).max() <= 1e-10

    @pytest.mark.parametrize("pattern", ALL_PATTERNS)
    def test_thb_support_inside_mother_support(self, domains, pattern) -> None:
        hb = build_hb_basis(domains, pattern).row_pattern.toarray()
        thb = build_thb_basis(domains, pattern).row_pattern.toarray()
        assert not (thb & ~hb).any()
