from fractions import Fraction

import hypothesis.strategies as st
import pytest
from hypothesis import given

from realmilnor.homology import (
    ChainComplex,
    HandleDecomposition,
    IllFormedComplexError,
    chain_homology,
    euler_rel,
    handle_decomposition,
    relative_homology,
    smith_normal_form,
)
from realmilnor.poly import parse
from realmilnor.sphcrit import find_critical_points


def matmul(A, B):
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


def inverse(M):
    """Exact inverse over Q (entries come back integral for unimodular M)."""
    n = len(M)
    A = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(M)]
    for c in range(n):
        piv = next(r for r in range(c, n) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        p = A[c][c]
        A[c] = [x / p for x in A[c]]
        for r in range(n):
            if r != c and A[r][c] != 0:
                q = A[r][c]
                A[r] = [x - q * y for x, y in zip(A[r], A[c])]
    return [row[n:] for row in A]


def diagonal(D):
    return [D[i][i] for i in range(min(len(D), len(D[0]) if D else 0))]


def homology_table(cx, **kw):
    return {k: v for k, v in chain_homology(cx, **kw).items() if v != (0, ())}


# small complexes, boundary matrices as dense row-major lists (rows = faces)

CIRCLE = ChainComplex.from_dense({1: [[-1, 1], [1, -1]]})


def disc_rel_boundary():
    # one triangle [0,1,2]; everything on the boundary circle is divided out
    return ChainComplex([0, 0, 1], {1: {}, 2: {}})


def disc_rel_boundary_subdivided():
    # cone on the boundary triangle from an interior vertex 3; relative complex
    # keeps vertex 3, edges [0,3],[1,3],[2,3] and triangles [0,1,3],[1,2,3],[0,2,3]
    d1 = [[1, 1, 1]]
    d2 = [[-1, 0, 1], [1, -1, 0], [0, 1, -1]]
    return ChainComplex.from_dense({1: d1, 2: d2})


def klein_bottle():
    # one vertex, edges a, b, one face with boundary a + b - a + b = 2b
    return ChainComplex.from_dense({1: [[0, 0]], 2: [[0], [2]]})


def torus():
    return ChainComplex.from_dense({1: [[0, 0]], 2: [[0], [0]]})


def rp2():
    return ChainComplex.from_dense({1: [[0]], 2: [[2]]})


class TestSNF:
    @pytest.mark.parametrize("A,diag", [
        ([[2, 0], [0, 3]], [1, 6]),
        ([[0, 0], [0, 0]], [0, 0]),
        ([[1, 1], [1, 1]], [1, 0]),
        ([[2, 4, 4], [-6, 6, 12], [10, -4, -16]], [2, 6, 12]),
    ])
    def test_examples(self, A, diag):
        U, D, V = smith_normal_form(A)
        assert diagonal(D) == diag
        assert matmul(matmul(U, A), V) == D

    @given(st.integers(1, 5).flatmap(lambda m: st.integers(1, 5).flatmap(
        lambda n: st.lists(st.lists(st.integers(-20, 20), min_size=n, max_size=n), min_size=m, max_size=m))))
    def test_reconstruction_and_divisibility(self, A):
        U, D, V = smith_normal_form(A)
        assert matmul(matmul(inverse(U), D), inverse(V)) == A
        assert all(x.denominator == 1 for row in inverse(U) + inverse(V) for x in row)
        d = diagonal(D)
        for i in range(len(D)):
            for j in range(len(D[0])):
                if i != j:
                    assert D[i][j] == 0
        nz = [x for x in d if x]
        assert all(x > 0 for x in nz)
        assert d[:len(nz)] == nz
        assert all(b % a == 0 for a, b in zip(nz, nz[1:]))

    def test_big_integers(self):
        A = [[2 ** 70, 3 ** 40], [5 ** 30, 7 ** 25]]
        U, D, V = smith_normal_form(A)
        assert matmul(matmul(U, A), V) == D


class TestChainHomology:
    def test_circle(self):
        assert homology_table(CIRCLE) == {0: (1, ()), 1: (1, ())}

    def test_disc_rel_boundary(self):
        assert homology_table(disc_rel_boundary()) == {2: (1, ())}

    def test_subdivision_invariance(self):
        assert homology_table(disc_rel_boundary_subdivided()) == homology_table(disc_rel_boundary())

    def test_klein_bottle(self):
        assert homology_table(klein_bottle()) == {0: (1, ()), 1: (1, (2,))}

    def test_torus_and_rp2(self):
        assert homology_table(torus()) == {0: (1, ()), 1: (2, ()), 2: (1, ())}
        assert homology_table(rp2()) == {0: (1, ()), 1: (0, (2,))}

    def test_circle_subdivided(self):
        n = 7
        d1 = [[0] * n for _ in range(n)]
        for e in range(n):
            d1[e][e] -= 1
            d1[(e + 1) % n][e] += 1
        assert homology_table(ChainComplex.from_dense({1: d1})) == homology_table(CIRCLE)

    def test_ill_formed(self):
        with pytest.raises(IllFormedComplexError):
            chain_homology(ChainComplex.from_dense({1: [[1, 0], [0, 1]], 2: [[1], [0]]}))

    @pytest.mark.parametrize("cx", [CIRCLE, klein_bottle(), torus(), rp2(), disc_rel_boundary_subdivided()])
    def test_reduce_matches_dense(self, cx):
        assert chain_homology(cx, reduce=True) == chain_homology(cx, reduce=False)

    @given(st.integers(2, 9), st.integers(0, 2 ** 16))
    def test_random_graph_reduction(self, n, seed):
        import random

        rnd = random.Random(seed)
        edges = [(a, b) for a in range(n) for b in range(a + 1, n) if rnd.random() < 0.4]
        d1 = [[0] * len(edges) for _ in range(n)]
        for j, (a, b) in enumerate(edges):
            d1[a][j] -= 1
            d1[b][j] += 1
        cx = ChainComplex.from_dense({1: d1}, dims=[n, len(edges)])
        H = chain_homology(cx)
        assert H == chain_homology(cx, reduce=False)
        assert H[0][0] - H[1][0] == n - len(edges)


class TestMorseSide:
    def test_cusp(self):
        pts = find_critical_points(parse("x^3 - y^2 + 3*x", ("x", "y")), 1.0)
        h = handle_decomposition([p for p in pts if p.value > 0.01])
        assert h.indices == (1,) and h.m == 1
        assert h.describe() == "Φ ∼ ∂Φ ∪ D^1"
        r = relative_homology(h)
        assert r.ranks == {1: 1} and r.rank(0) == 0
        assert r.euler_rel == -1 and not r.caveats

    def test_examples(self):
        assert relative_homology(HandleDecomposition((1, 2))).ranks == {1: 1, 2: 1}
        assert relative_homology(HandleDecomposition((1, 1, 1))).ranks == {1: 3}
        empty = HandleDecomposition(())
        assert empty.m == 0 and empty.describe() == "Φ ∼ ∂Φ"
        assert relative_homology(empty).ranks == {}

    def test_euler(self):
        assert euler_rel(HandleDecomposition((1,))) == -1
        assert euler_rel(HandleDecomposition((1, 2))) == 0
        assert euler_rel(HandleDecomposition(())) == 0

    def test_index_zero_flagged(self):
        r = relative_homology(HandleDecomposition((0, 1)))
        assert "index_zero_handle" in r.caveats
        assert r.extrapolated_degrees == (0,)
        assert r.ranks == {0: 1, 1: 1}

    def test_group_text(self):
        r = relative_homology(HandleDecomposition((1, 1, 2)))
        assert r.group(1) == "Z^2" and r.group(2) == "Z" and r.group(0) == "0"

    @given(st.lists(st.integers(0, 4), max_size=10))
    def test_rank_sum_and_euler(self, indices):
        h = HandleDecomposition(tuple(indices))
        r = relative_homology(h)
        assert sum(r.ranks.values()) == h.m
        assert r.euler_rel == sum((-1) ** k * v for k, v in r.ranks.items())
        assert euler_rel(h) == r.euler_rel
