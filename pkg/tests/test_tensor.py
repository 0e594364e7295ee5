"""Tests for tensor-product spaces, index bookkeeping and the single-level grad / curl."""

import numpy as np
import numpy.testing as nptest
import pytest

from hdr.core.enums import BoundaryMode, ScalarMode
from hdr.models.tensor import (
    AmbiguousPointError,
    Element,
    ElementBox,
    MultiIndex,
    curl_matrix,
    element_of,
    grad_matrix,
    level_spaces,
    tensor_subdivision,
)
from hdr.models.univariate import KnotVector


def _base(degree=2, intervals=4, mode=BoundaryMode.HOMOGENEOUS):
    kv = KnotVector.uniform(degree, intervals, mode)
    return kv, kv


class TestIndices:
    def test_flat_index_first_direction_fastest(self) -> None:
        space = level_spaces(_base(), 0).x0
        assert space.shape == (4, 4)
        assert space.flat_index(MultiIndex(2, 1)) == 1
        assert space.flat_index(MultiIndex(1, 2)) == 4
        assert space.multi_index(13) == MultiIndex(2, 4)

    def test_element_hierarchy(self) -> None:
        e = Element(2, 3)
        assert set(e.children()) == {Element(3, 5), Element(4, 5), Element(3, 6), Element(4, 6)}
        assert all(child.parent() == e for child in e.children())
        assert Element(7, 12).ancestor(2) == Element(2, 3)

    def test_box_coarsen_refine(self) -> None:
        box = ElementBox(3, 4, 5, 8)
        assert box.coarsen(1) == ElementBox(2, 2, 3, 4)
        assert box.refine(1) == ElementBox(5, 8, 9, 16)
        assert box.size == 8
        assert box.intersects(ElementBox(4, 9, 1, 5))
        assert not box.intersects(ElementBox(5, 9, 1, 5))

    def test_support_box(self) -> None:
        space = level_spaces(_base(), 0).x0
        assert space.box(MultiIndex(1, 3)) == ElementBox(1, 2, 2, 4)
        assert sorted(space.functions_on(Element(1, 1))) == [
            MultiIndex(1, 1), MultiIndex(1, 2), MultiIndex(2, 1), MultiIndex(2, 2)
        ]


class TestFormSpaces:
    def test_one_form_block_sizes(self) -> None:
        triple = level_spaces(_base(), 0)
        assert triple.x1_block_sizes == (20, 20)
        assert triple.x2.dimension == 25

    @pytest.mark.parametrize("mode", list(BoundaryMode))
    def test_curl_of_grad_vanishes(self, mode) -> None:
        triple = level_spaces(_base(3, 5, mode), 1)
        assert (curl_matrix(triple) @ grad_matrix(triple)).is_zero()

    def test_float_operators(self) -> None:
        triple = level_spaces(_base(), 0)
        assert grad_matrix(triple, ScalarMode.FLOAT).mode is ScalarMode.FLOAT
        assert curl_matrix(triple, ScalarMode.FLOAT).shape == (25, 40)

    def test_open_design_matrix_partition_of_unity(self) -> None:
        space = level_spaces(_base(2, 3, BoundaryMode.OPEN), 0).x0
        points = np.random.default_rng(3).uniform(0.0, 1.0, (40, 2))
        nptest.assert_allclose(np.asarray(space.design_matrix(points).sum(axis=1)).ravel(), 1.0, atol=1e-13)

    def test_design_matrix_matches_evaluate(self) -> None:
        space = level_spaces(_base(), 0).x0
        row = space.design_matrix(np.array([[0.3, 0.6]])).toarray()[0]
        index = MultiIndex(2, 3)
        assert row[space.flat_index(index)] == pytest.approx(space.evaluate(index, 0.3, 0.6))

    def test_tensor_subdivision_shape(self) -> None:
        matrix = tensor_subdivision(_base(), 0, (1, 0))
        assert matrix.shape == (9 * 8, 5 * 4)


class TestMesh:
    def test_element_of(self) -> None:
        mesh = level_spaces(_base(), 1).mesh
        assert mesh.shape == (8, 8)
        assert element_of(mesh, (0.3, 0.9)) == Element(3, 8)

    def test_point_on_mesh_line_is_ambiguous(self) -> None:
        mesh = level_spaces(_base(), 0).mesh
        with pytest.raises(AmbiguousPointError):
            element_of(mesh, (0.25, 0.6))
