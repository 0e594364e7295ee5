"""Tests for Dörfler marking and the adaptive refinement loop."""

import numpy as np
import numpy.testing as nptest
import pytest

from hdr.core.config import get_settings
from hdr.models.hierarchy import ActiveElement
from hdr.models.tensor import Element, MultiIndex
from hdr.services.adaptive import (
    AdaptiveConfig,
    adaptive_loop,
    dorfler_mark,
    marked_supports,
    refine_marked,
)
from hdr.services.exactness import find_problematic_pairs

M = MultiIndex


class TestDorflerMark:
    def test_largest_errors_first(self) -> None:
        nptest.assert_array_equal(dorfler_mark(np.array([1.0, 4.0, 2.0, 3.0]), 0.5), [1, 3])

    def test_theta_one_marks_everything(self) -> None:
        nptest.assert_array_equal(dorfler_mark(np.array([1.0, 4.0, 2.0, 3.0]), 1.0), [0, 1, 2, 3])

    def test_zero_errors_mark_nothing(self) -> None:
        assert dorfler_mark(np.zeros(5), 0.5).size == 0
        assert dorfler_mark(np.array([]), 0.5).size == 0


class TestAdaptiveConfig:
    @pytest.mark.parametrize("theta", [0.0, -0.1, 1.5])
    def test_rejects_theta(self, theta) -> None:
        with pytest.raises(ValueError, match="Dörfler"):
            AdaptiveConfig(theta=theta)

    def test_rejects_zero_steps(self) -> None:
        with pytest.raises(ValueError, match="max_steps"):
            AdaptiveConfig(max_steps=0)

    def test_defaults_come_from_settings(self, monkeypatch) -> None:
        monkeypatch.setenv("DORFLER_THETA", "0.3")
        monkeypatch.setenv("MAX_LEVEL", "2")
        get_settings.cache_clear()
        config = AdaptiveConfig()
        assert config.theta == 0.3
        assert config.max_level == 2


class TestMarking:
    def test_supports_of_active_functions(self, uniform_homogeneous) -> None:
        cells = [ActiveElement(0, Element(1, 1))]
        assert marked_supports(uniform_homogeneous, cells) == {0: {M(1, 1), M(2, 1), M(1, 2), M(2, 2)}}

    def test_level_cap(self, uniform_homogeneous) -> None:
        assert marked_supports(uniform_homogeneous, [ActiveElement(0, Element(1, 1))], max_level=0) == {}

    def test_plain_and_exact_refinement(self, uniform_homogeneous) -> None:
        functions = {0: {M(1, 1), M(3, 3)}}
        plain = refine_marked(uniform_homogeneous, functions, exact=False)
        exact = refine_marked(uniform_homogeneous, functions, exact=True)
        assert find_problematic_pairs(plain)
        assert find_problematic_pairs(exact) == []
        assert plain.refined_at(0) < exact.refined_at(0)


class TestAdaptiveLoop:
    def test_two_exact_steps(self) -> None:
        config = AdaptiveConfig(theta=0.3, max_steps=2, degree=2, base_intervals=4)
        history = adaptive_loop(config)
        assert [s.step for s in history] == [0, 1]
        assert history[1].dofs > history[0].dofs
        assert all(s.h1 == 0 for s in history)
        assert history[0].marked_elements > 0

    def test_error_target_stops_early(self) -> None:
        config = AdaptiveConfig(max_steps=3, degree=2, base_intervals=4, error_target=1e6)
        assert len(adaptive_loop(config)) == 1

    def test_level_cap_stops_the_loop(self) -> None:
        config = AdaptiveConfig(theta=0.3, max_steps=3, degree=2, base_intervals=4, max_level=0)
        assert len(adaptive_loop(config)) == 1

    @pytest.mark.slow
    def test_exact_loop_keeps_cohomology_trivial(self) -> None:
        history = adaptive_loop(AdaptiveConfig(theta=0.06, max_steps=4, base_intervals=8, exact=True))
        assert all(s.h1 == 0 and not s.singular for s in history)
        assert history[-1].l2_error < history[0].l2_error


@pytest.fixture(scope="module")
def front_histories() -> dict[bool, list]:
    """Plain and exact runs on the circular front, θ = 0.06, p = 3 on 8×8."""
    return {exact: adaptive_loop(AdaptiveConfig(theta=0.06, max_steps=5, exact=exact)) for exact in (False, True)}


@pytest.mark.slow
class TestPlainVersusExact:
    def test_plain_loop_creates_harmonic_fields(self, front_histories) -> None:
        assert any(s.h1 > 0 for s in front_histories[False])

    def test_exact_errors_decrease(self, front_histories) -> None:
        errors = [s.l2_error for s in front_histories[True]]
        assert len(errors) >= 4
        assert all(later < earlier for earlier, later in zip(errors, errors[1:]))

    def test_exact_loop_is_no_slower(self, front_histories) -> None:
        plain, exact = front_histories[False], front_histories[True]
        target = plain[-1].l2_error
        reached = next(s.step for s in exact if s.l2_error <= target)
        assert reached <= plain[-1].step
