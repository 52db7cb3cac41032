from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from operad_forge.qlinalg import (
    EigenSplit,
    Matrix,
    Subspace,
    char_poly,
    image,
    kernel,
    poly_eval_matrix,
    rank,
    rational_eigen_split,
    rational_roots,
    rref,
    solve,
    solve_matrix,
)


def M(rows):
    return Matrix.from_rows(rows)


small_entries = st.integers(min_value=-4, max_value=4)


def matrices(max_dim=4):
    return st.integers(1, max_dim).flatmap(
        lambda r: st.integers(1, max_dim).flatmap(
            lambda c: st.lists(
                st.lists(small_entries, min_size=c, max_size=c),
                min_size=r, max_size=r).map(M)))


class TestRref:
    def test_identity(self):
        m = Matrix.identity(3)
        red, pivots, rk = rref(m)
        assert red == m
        assert rk == 3
        assert pivots == (0, 1, 2)

    def test_zero(self):
        m = Matrix.zeros(2, 4)
        red, pivots, rk = rref(m)
        assert red == m
        assert rk == 0

    def test_rank_one(self):
        # hand row reduction: R2 <- R2 - 2 R1
        red, pivots, rk = rref(M([[1, 2], [2, 4]]))
        assert red == M([[1, 2], [0, 0]])
        assert rk == 1
        assert pivots == (0,)

    @given(matrices())
    @settings(max_examples=60, deadline=None)
    def test_rank_nullity(self, m):
        assert kernel(m).dim + rank(m) == m.cols

    @given(matrices())
    @settings(max_examples=60, deadline=None)
    def test_kernel_vectors_annihilated(self, m):
        ker = kernel(m)
        for j in range(ker.dim):
            assert all(x == 0 for x in m.apply(ker.basis.col(j)))


class TestKernel:
    def test_identity_kernel_zero(self):
        assert kernel(Matrix.identity(4)).dim == 0

    def test_zero_map_full_kernel(self):
        k = kernel(Matrix.zeros(2, 3))
        assert k == Subspace.full(3)

    def test_one_equation(self):
        # x + y = 0 has solution line spanned by (1, -1)
        k = kernel(M([[1, 1]]))
        assert k.dim == 1
        assert k.contains((1, -1))
        assert k.contains((Fraction(-3), Fraction(3)))
        assert not k.contains((1, 1))


class TestSolve:
    def test_identity(self):
        assert solve(Matrix.identity(3), (1, 2, 3)) == (1, 2, 3)

    def test_zero_map_inconsistent(self):
        assert solve(Matrix.zeros(2, 2), (1, 0)) is None

    def test_one_dimensional(self):
        assert solve(M([[2]]), (3,)) == (Fraction(3, 2),)

    def test_solve_matrix_roundtrip(self):
        m = M([[1, 2], [0, 1]])
        b = M([[3, 0], [1, 1]])
        x = solve_matrix(m, b)
        assert m * x == b

    def test_solve_matrix_inconsistent(self):
        assert solve_matrix(Matrix.zeros(2, 2), Matrix.identity(2)) is None

    @given(matrices())
    @settings(max_examples=40, deadline=None)
    def test_solution_exact(self, m):
        b = m.apply(tuple(Fraction(1) for _ in range(m.cols)))
        x = solve(m, b)
        assert x is not None
        assert m.apply(x) == tuple(b)


class TestCharPoly:
    def test_diagonal(self):
        # (t-2)(t-3) = 6 - 5t + t^2
        assert char_poly(Matrix.diagonal([2, 3])) == (6, -5, 1)

    def test_zero_matrix(self):
        assert char_poly(Matrix.zeros(3, 3)) == (0, 0, 0, 1)

    def test_rotation(self):
        # 2x2 determinant oracle: det(tI - m) = t^2 + 1
        assert char_poly(M([[0, -1], [1, 0]])) == (1, 0, 1)

    @given(matrices(max_dim=4).filter(lambda m: m.rows == m.cols))
    @settings(max_examples=40, deadline=None)
    def test_cayley_hamilton(self, m):
        assert poly_eval_matrix(char_poly(m), m).is_zero()


class TestRationalRoots:
    def test_simple(self):
        # (t-2)(t-3)
        assert rational_roots((6, -5, 1)) == {Fraction(2): 1, Fraction(3): 1}

    def test_multiplicity_and_fraction(self):
        # (2t-1)^2 (t) = t(4t^2 -4t + 1) = 4t^3 - 4t^2 + t
        assert rational_roots((0, 1, -4, 4)) == {Fraction(0): 1, Fraction(1, 2): 2}

    def test_irrational(self):
        assert rational_roots((1, 0, 1)) == {}


class TestEigenSplit:
    def test_diagonal(self):
        split = rational_eigen_split(Matrix.diagonal([2, 2, 5]))
        assert [(lam, s.dim) for lam, s in split.pairs] == [(2, 2), (5, 1)]
        assert split.residual.dim == 0

    def test_rotation_all_residual(self):
        split = rational_eigen_split(M([[0, -1], [1, 0]]))
        assert split.pairs == ()
        assert split.residual == Subspace.full(2)

    def test_jordan_block(self):
        split = rational_eigen_split(M([[3, 1], [0, 3]]))
        assert [(lam, s.dim) for lam, s in split.pairs] == [(3, 2)]
        assert split.residual.dim == 0

    @given(matrices(max_dim=4).filter(lambda m: m.rows == m.cols))
    @settings(max_examples=40, deadline=None)
    def test_direct_sum_and_invariance(self, m):
        split = rational_eigen_split(m)
        spaces = [s for _, s in split.pairs] + [split.residual]
        # dimensions fill the ambient and stack to full rank
        vectors = [s.basis.col(j) for s in spaces for j in range(s.dim)]
        assert len(vectors) == m.rows
        if vectors:
            assert rank(Matrix.from_cols(vectors, rows=m.rows)) == m.rows
        # each generalized eigenspace is m-invariant
        for _, s in split.pairs:
            for j in range(s.dim):
                assert s.contains(m.apply(s.basis.col(j)))


class TestSubspace:
    def test_canonical_equality(self):
        a = Subspace.from_spanning(3, [(1, 0, 1), (0, 1, 1)])
        b = Subspace.from_spanning(3, [(1, 1, 2), (1, -1, 0)])
        assert a == b
        assert a.basis == b.basis

    def test_sum(self):
        a = Subspace.from_spanning(3, [(1, 0, 0)])
        b = Subspace.from_spanning(3, [(0, 1, 0)])
        assert a.sum(b).dim == 2

    def test_rationals_stay_exact(self):
        s = Subspace.from_spanning(2, [(Fraction(1, 3), Fraction(1, 7))])
        v = (Fraction(1), Fraction(3, 7))
        assert s.contains(v)
