from fractions import Fraction

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given

from realmilnor.poly import (
    NumericPolynomial,
    Polynomial,
    PolynomialSyntaxError,
    evaluate,
    gradient,
    hessian,
    parse,
    perturb,
)

XY = ("x", "y")
NAMES = ("x", "y", "z", "w")


@st.composite
def polynomials(draw, max_vars=4, max_degree=6, max_terms=6):
    nv = draw(st.integers(1, max_vars))
    variables = NAMES[:nv]
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        total = draw(st.integers(0, max_degree))
        exp = [0] * nv
        for _ in range(total):
            exp[draw(st.integers(0, nv - 1))] += 1
        num = draw(st.integers(-50, 50))
        den = draw(st.integers(1, 12))
        terms[tuple(exp)] = Fraction(num, den)
    return Polynomial(variables, terms)


@st.composite
def poly_and_point(draw):
    p = draw(polynomials())
    x = draw(st.lists(st.floats(-2, 2, allow_nan=False), min_size=p.nvars, max_size=p.nvars))
    return p, np.array(x)


class TestParse:
    def test_cusp(self):
        p = parse("x^3 - y^2", XY)
        assert p.terms == {(3, 0): 1, (0, 2): -1}

    def test_zero(self):
        assert parse("0", XY).terms == {}
        assert parse("0", XY).is_zero()

    def test_dangling_caret_offset(self):
        with pytest.raises(PolynomialSyntaxError) as info:
            parse("x^", XY)
        assert info.value.offset == 2

    @pytest.mark.parametrize("text", ["x^-1", "x^(1/2)", "x^1.5", "x^y"])
    def test_bad_exponents(self, text):
        with pytest.raises(PolynomialSyntaxError):
            parse(text, XY)

    def test_unknown_identifier(self):
        with pytest.raises(PolynomialSyntaxError) as info:
            parse("x + q", XY)
        assert info.value.offset == 4

    @pytest.mark.parametrize("text", ["2x", "x y", "(x)(y)", "x(y+1)"])
    def test_implicit_multiplication_rejected(self, text):
        with pytest.raises(PolynomialSyntaxError):
            parse(text, XY)

    @pytest.mark.parametrize("text", ["", "x +", "(x", "x)", "1/0", "x**2"])
    def test_malformed(self, text):
        with pytest.raises(PolynomialSyntaxError):
            parse(text, XY)

    def test_rationals_and_parentheses(self):
        p = parse("-(x - 1/2)^2 + 0.25", XY)
        assert p.terms == {(2, 0): -1, (1, 0): 1}

    def test_leading_sign(self):
        assert parse("-x^2", XY) == -parse("x^2", XY)
        assert parse("+x", XY) == parse("x", XY)

    def test_printing(self):
        assert str(parse("x^3 - y^2", XY)) == "x^3 - y^2"
        assert str(perturb(parse("x^2 - y^2", XY), [Fraction(1, 10), 0])) == "x^2 - y^2 - 1/10*x"


class TestEvaluate:
    @pytest.mark.parametrize("point,value", [((1, 0), 1.0), ((0, 0), 0.0)])
    def test_cusp(self, point, value):
        assert evaluate(parse("x^3 - y^2", XY), point) == value

    def test_perturbed_cusp(self):
        assert evaluate(parse("x^3 - y^2 + 3*x", XY), (1, 0)) == 4.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            evaluate(parse("x", XY), (1.0,))

    @given(poly_and_point())
    def test_numeric_matches_exact(self, pp):
        p, x = pp
        F = NumericPolynomial(p)
        exact = float(sum(c * np.prod([Fraction(float(xi)) ** e for xi, e in zip(x, exp)])
                          for exp, c in p.terms.items()))
        assert F.value(x[None, :])[0] == pytest.approx(exact, rel=1e-9, abs=1e-9)


class TestDerivatives:
    def test_gradient_examples(self):
        g = gradient(parse("x^3 - y^2", XY))
        assert list(g) == [parse("3*x^2", XY), parse("-2*y", XY)]
        assert list(gradient(parse("5", XY))) == [parse("0", XY)] * 2
        assert list(gradient(parse("x^3 - y^2 + 3*x", XY))) == [parse("3*x^2 + 3", XY), parse("-2*y", XY)]

    def test_hessian_examples(self):
        H = hessian(parse("x^3 - y^2", XY))
        assert [[H[i, j] for j in range(2)] for i in range(2)] == [
            [parse("6*x", XY), parse("0", XY)],
            [parse("0", XY), parse("-2", XY)],
        ]
        assert all(hessian(parse("3*x - y", XY))[i, j].is_zero() for i in range(2) for j in range(2))
        xyz = ("x", "y", "z")
        H = hessian(parse("x^2 + y^2 - z^2", xyz))
        for i in range(3):
            for j in range(3):
                assert H[i, j] == Polynomial.constant(xyz, [2, 2, -2][i] if i == j else 0)

    @given(poly_and_point())
    def test_gradient_finite_difference(self, pp):
        p, x = pp
        F = NumericPolynomial(p)
        h = 1e-5 * (1 + np.linalg.norm(x))
        g = F.grad(x[None, :])[0]
        for i in range(p.nvars):
            e = np.zeros(p.nvars)
            e[i] = h
            fd = (evaluate(p, x + e) - evaluate(p, x - e)) / (2 * h)
            # relative to the magnitude of the terms, since the gradient itself may vanish
            scale = float(sum(abs(c) * np.prod(np.abs(x) ** np.array(exp)) for exp, c in p.terms.items())) + 1
            assert abs(fd - g[i]) <= 1e-6 * scale
            assert evaluate(gradient(p)[i], x) == pytest.approx(g[i], rel=1e-9, abs=1e-9)

    @given(poly_and_point())
    def test_hessian_finite_difference(self, pp):
        p, x = pp
        F = NumericPolynomial(p)
        h = 1e-5 * (1 + np.linalg.norm(x))
        H = F.hess(x[None, :])[0]
        for i in range(p.nvars):
            e = np.zeros(p.nvars)
            e[i] = h
            fd = (F.grad((x + e)[None, :])[0] - F.grad((x - e)[None, :])[0]) / (2 * h)
            scale = float(sum(abs(c) * np.prod(np.abs(x) ** np.array(exp)) for exp, c in p.terms.items())) + 1
            assert np.max(np.abs(fd - H[:, i])) <= 1e-6 * scale

    @given(polynomials())
    def test_hessian_symmetric(self, p):
        assert hessian(p).is_symmetric()


class TestPerturb:
    def test_cusp(self):
        assert perturb(parse("x^3 - y^2", XY), [-3, 0]) == parse("x^3 - y^2 + 3*x", XY)

    def test_definition(self):
        assert perturb(parse("x^2 - y^2", XY), [Fraction(1, 10), 0]) == parse("x^2 - y^2 - 1/10*x", XY)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            perturb(parse("x", XY), [1])

    @given(polynomials())
    def test_zero_is_identity(self, p):
        assert perturb(p, [0] * p.nvars) == p

    @given(polynomials(), st.data())
    def test_gradient_shift(self, p, data):
        t = data.draw(st.lists(st.fractions(-5, 5, max_denominator=20), min_size=p.nvars, max_size=p.nvars))
        for gi, gti, ti in zip(gradient(p), gradient(perturb(p, t)), t):
            assert gti == gi - ti


@given(polynomials())
def test_round_trip(p):
    assert parse(str(p), p.variables) == p


@given(polynomials(), polynomials())
def test_ring_identities(p, q):
    if p.variables != q.variables:
        return
    assert p + q == q + p
    assert p * q == q * p
    assert (p - q) + q == p
    assert p ** 2 == p * p
