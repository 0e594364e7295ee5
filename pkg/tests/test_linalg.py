"""Tests for exact/float sparse matrices, ranks and the dense solvers."""

from fractions import Fraction

import numpy as np
import numpy.testing as nptest
import pytest
import scipy.sparse

from hdr.core.enums import ScalarMode
from hdr.core.linalg import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    SparseMatrix,
    block_diag,
    hstack,
    rank,
    read_matrix_market,
    solve_saddle,
    sym_gen_eig,
    vstack,
    write_matrix_market,
)


def _dense(rows, mode=ScalarMode.RATIONAL) -> SparseMatrix:
    entries = {(i, j): v for i, row in enumerate(rows) for j, v in enumerate(row)}
    return SparseMatrix.from_entries(entries, (len(rows), len(rows[0])), mode)


class TestSparseMatrix:
    def test_rational_entries_stay_exact(self) -> None:
        m = _dense([[Fraction(1, 3), 0], [0, Fraction(2, 7)]])
        assert m.entries() == {(0, 0): Fraction(1, 3), (1, 1): Fraction(2, 7)}
        assert m.nnz == 2

    def test_entry_outside_shape_is_rejected(self) -> None:
        with pytest.raises(DimensionMismatchError, match="outside shape"):
            SparseMatrix.from_entries({(2, 0): 1}, (2, 2))

    def test_matmul_checks_inner_dimension(self) -> None:
        with pytest.raises(DimensionMismatchError, match="inner dimensions"):
            _dense([[1, 2]]) @ _dense([[1, 2]])

    def test_modes_do_not_mix(self) -> None:
        with pytest.raises(TypeError, match="cannot combine"):
            _dense([[1]]) + _dense([[1]], ScalarMode.FLOAT)

    @pytest.mark.parametrize("mode", list(ScalarMode))
    def test_kron_matches_numpy(self, mode: ScalarMode) -> None:
        a = [[1, 2], [0, 3]]
        b = [[0, 1], [1, Fraction(1, 2)]]
        expected = np.kron(np.array(a, dtype=float), np.array(b, dtype=float))
        nptest.assert_allclose(_dense(a, mode).kron(_dense(b, mode)).to_dense(), expected)

    def test_stacking_and_block_diag(self) -> None:
        a = _dense([[1, 0], [0, 1]])
        b = _dense([[2], [3]])
        assert hstack([a, b]).shape == (2, 3)
        assert vstack([a, a]).shape == (4, 2)
        d = block_diag([a, b])
        assert d.shape == (4, 3)
        assert d.entries()[(3, 2)] == 3
        with pytest.raises(DimensionMismatchError, match="row counts"):
            hstack([a, _dense([[1]])])

    def test_select_and_apply(self) -> None:
        m = _dense([[1, 2, 3], [4, 5, 6]])
        assert m.select_columns([2, 0]).to_dense().tolist() == [[3, 1], [6, 4]]
        assert m.select_rows([1]).to_dense().tolist() == [[4, 5, 6]]
        assert m.apply([1, 0, Fraction(1, 2)]) == [Fraction(5, 2), Fraction(7)]

    def test_transpose_and_scale(self) -> None:
        m = _dense([[1, 2], [0, 0]])
        assert m.T.entries() == {(0, 0): 1, (1, 0): 2}
        assert m.scale(0).is_zero()
        assert (-m).entries()[(0, 1)] == -2


class TestRank:
    def test_rank_deficient(self) -> None:
        rows = [[1, 2], [2, 4]]
        assert rank(_dense(rows)) == 1
        assert rank(_dense(rows, ScalarMode.FLOAT)) == 1

    def test_hilbert_matrix_rank_is_exact(self) -> None:
        n = 10
        hilbert = [[Fraction(1, i + j + 1) for j in range(n)] for i in range(n)]
        assert rank(_dense(hilbert)) == n

    def test_empty_and_zero(self) -> None:
        assert rank(SparseMatrix.zeros((3, 0))) == 0
        assert rank(SparseMatrix.zeros((3, 3), ScalarMode.FLOAT)) == 0


class TestDenseSolvers:
    def test_generalized_eigenvalues(self) -> None:
        k = np.diag([2.0, 3.0])
        m = np.diag([1.0, 2.0])
        pairs = sym_gen_eig(k, m)
        nptest.assert_allclose(pairs.values, [1.5, 2.0])
        assert pairs.max_residual < 1e-12

    def test_indefinite_mass_is_rejected(self) -> None:
        with pytest.raises(NotPositiveDefiniteError):
            sym_gen_eig(np.eye(2), np.diag([1.0, -1.0]))

    def test_saddle_solve(self) -> None:
        m0 = scipy.sparse.identity(2, format="csr")
        b = scipy.sparse.csr_matrix([[1.0, 0.0]])
        k = scipy.sparse.csr_matrix([[1.0]])
        out = solve_saddle([[-m0, b.T.tocsr()], [b, k]], [np.zeros(2), np.array([2.0])])
        assert not out.singular
        nptest.assert_allclose(out.blocks[0], [1.0, 0.0], atol=1e-12)
        nptest.assert_allclose(out.blocks[1], [1.0], atol=1e-12)

    def test_singular_saddle_is_flagged(self) -> None:
        m0 = scipy.sparse.identity(2, format="csr")
        b = scipy.sparse.csr_matrix((1, 2))
        k = scipy.sparse.csr_matrix((1, 1))
        out = solve_saddle([[-m0, b.T.tocsr()], [b, k]], [np.array([1.0, 0.0]), np.zeros(1)])
        assert out.singular
        nptest.assert_allclose(np.concatenate(out.blocks), [-1.0, 0.0, 0.0], atol=1e-12)

    def test_block_grid_must_match_rhs(self) -> None:
        with pytest.raises(DimensionMismatchError):
            solve_saddle([[scipy.sparse.identity(2)]], [np.zeros(3)])


def test_matrix_market_roundtrip(tmp_path) -> None:
    m = _dense([[1, 0], [Fraction(1, 4), 2]])
    path = tmp_path / "m.mtx"
    write_matrix_market(path, m, comment="test")
    back = read_matrix_market(path)
    assert back.mode is ScalarMode.FLOAT
    nptest.assert_allclose(back.to_dense(), m.to_dense())
