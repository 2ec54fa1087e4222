import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gevrey_tori import (EpsSeries, InvariantError, ScalarSeries, SeriesMatrix, TrigPoly, ValidationError,
                         compose_perturbation, eval_series, series_add, series_mul, window)
from gevrey_tori.epsseries import Composer

from conftest import random_trig

G = TrigPoly.from_cos_sin([0.2, 0.5, 0.3], [0, 1.0, -0.4])


def random_series(rng, order, degree=3, zero_first=False):
    c = [random_trig(rng, degree, zero_mean=False) for _ in range(order + 1)]
    if zero_first:
        c[0] = TrigPoly.zero()
    return EpsSeries(c)


def series_dist(x, y):
    return max(float((a - b).norm()) for a, b in zip(x.coeffs, y.coeffs))


def test_structure_and_lead(rng):
    x = random_series(rng, 5)
    assert x.order == 5 and len(x.coeffs) == 6
    assert EpsSeries.zeros(4).lead == math.inf
    w = window(x, 2, 4)
    assert w.lead == 3
    assert w.order == 5


def test_mul_examples(rng):
    x = random_series(rng, 4)
    one = EpsSeries.constant(TrigPoly.constant(1.0), 4)
    assert series_dist(series_mul(x, one, 4), x) == 0
    e = EpsSeries([TrigPoly.zero(), TrigPoly.constant(1.0)])
    sq = series_mul(e, e, 1)
    assert sq.order == 1 and all(c.is_zero() for c in sq.coeffs)


@pytest.mark.parametrize("alpha", [1, 2, 3, 5])
def test_lambda_times_neumann_inverse_is_one(alpha):
    lam = ScalarSeries.lam(alpha, 30)
    inv = lam.inverse(30)
    prod = lam.mul(inv, 30)
    assert prod[0] == 1
    assert all(v == 0 for v in prod.coeffs[1:])
    # as a series with theta-constant coefficients too
    L = lam.as_eps_series()
    P = series_mul(L, L.inverse(30), 30)
    assert float((P[0] - TrigPoly.constant(1.0)).norm()) == 0
    assert all(c.is_zero() for c in P.coeffs[1:])


def test_inverse_needs_constant_leading_coefficient(rng):
    x = random_series(rng, 3)
    with pytest.raises(InvariantError):
        x.inverse(3)


def test_window_examples(rng):
    N = 4
    x = random_series(rng, 3 * N, zero_first=True)
    assert window(x, 0, x.order) == x
    assert window(x, N, N).lead == math.inf
    parts = window(x, N, 2 * N) + window(x, 2 * N, x.order) + window(x, -1, N)
    assert parts == x
    assert window(window(x, 2, 7), 2, 7) == window(x, 2, 7)
    with pytest.raises(ValidationError):
        window(x, 3, x.order + 1)


def test_cauchy_product_commutative_associative(rng):
    x, y, z = (random_series(rng, 6) for _ in range(3))
    assert series_dist(series_mul(x, y, 6), series_mul(y, x, 6)) < 1e-13
    a = series_mul(series_mul(x, y, 6), z, 6)
    b = series_mul(x, series_mul(y, z, 6), 6)
    assert series_dist(a, b) < 1e-11
    # distributive and consistent with add
    assert series_dist(series_mul(x, series_add(y, z), 6),
                       series_mul(x, y, 6) + series_mul(x, z, 6)) < 1e-12


def test_cauchy_product_matches_pointwise(rng):
    x = random_series(rng, 5)
    y = random_series(rng, 5)
    p = series_mul(x, y, 10)  # full product, no truncation loss
    th = np.linspace(0, 1, 9)
    for eps in (0.1, -0.3):
        np.testing.assert_allclose(eval_series(p, eps, th),
                                   eval_series(x, eps, th) * eval_series(y, eps, th), atol=1e-11)


def test_eval_series_examples(rng):
    x = random_series(rng, 4)
    th = np.linspace(0, 1, 5)
    np.testing.assert_array_equal(eval_series(x, 0.0, th), x[0].eval(th))
    assert np.all(eval_series(EpsSeries.zeros(3), 0.4, th) == 0)
    p = random_trig(rng, 3)
    lin = EpsSeries([TrigPoly.zero(), p])
    np.testing.assert_allclose(eval_series(lin, 0.3, th), 0.3 * p.eval(th), atol=1e-15)


# composition ------------------------------------------------------------------

def test_compose_with_zero_u_is_constant():
    u = EpsSeries.zeros(5)
    S = compose_perturbation(u, G, 5)
    assert S[0] == G
    assert all(c.is_zero() for c in S.coeffs[1:])


def test_compose_requires_u0_zero(rng):
    with pytest.raises(ValidationError):
        compose_perturbation(random_series(rng, 3), G, 3)


def test_compose_order_one_is_chain_rule(rng):
    u = random_series(rng, 4, zero_first=True)
    S = compose_perturbation(u, G, 4)
    assert float((S[1] - u[1] * G.derivative()).norm()) < 1e-13


def test_compose_numeric_oracle(rng):
    """Sum of the series at small eps vs g evaluated at theta + u_eps(theta)."""
    order = 10
    u = random_series(rng, order, degree=2, zero_first=True)
    S = compose_perturbation(u, G, order)
    th = np.linspace(0, 1, 41, endpoint=False)
    errs = []
    for eps in (0.02, 0.04, 0.08):
        direct = G.eval(th + eval_series(u, eps, th))
        errs.append(float(np.max(np.abs(eval_series(S, eps, th) - direct))))
    # remainder is O(eps^{order+1}): halving eps divides it by about 2^11
    slopes = np.diff(np.log2(errs))
    assert np.all(np.abs(slopes - (order + 1)) < 0.6), slopes
    small = G.eval(th + eval_series(u, 1e-3, th))
    assert float(np.max(np.abs(eval_series(S, 1e-3, th) - small))) < 1e-14


def test_compose_degree_bound(rng):
    u = EpsSeries([TrigPoly.zero()] + [random_trig(rng, n) for n in range(1, 9)])
    S = compose_perturbation(u, G, 8)
    a = G.degree
    for n, c in enumerate(S.coeffs):
        assert c.degree <= a * (n + 1)


def test_compose_derivative_cross_check(rng):
    """d/deps g(theta + u) = g'(theta + u) du/deps, coefficient by coefficient."""
    order = 8
    u = random_series(rng, order, degree=2, zero_first=True)
    S = compose_perturbation(u, G, order)
    Sp = compose_perturbation(u, G.derivative(), order)
    du = EpsSeries([u[n + 1] * (n + 1) for n in range(order)] + [TrigPoly.zero()])
    rhs = series_mul(Sp, du, order - 1)
    for n in range(order):
        lhs = S[n + 1] * (n + 1)
        assert float((lhs - rhs[n]).norm()) <= 1e-11 * max(float(lhs.norm()), 1.0)


def test_compose_summation_orders_agree(rng):
    u = random_series(rng, 8, zero_first=True)
    a = compose_perturbation(u, G, 8, "ascending")
    b = compose_perturbation(u, G, 8, "descending")
    for x, y in zip(a.coeffs, b.coeffs):
        assert float((x - y).norm()) <= 1e-13 * max(float(x.norm()), 1.0)


def test_composer_refuses_missing_u():
    c = Composer(G)
    with pytest.raises(ValidationError):
        c.layer(1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compose_single_order_u_is_taylor(seed):
    """u = eps u_1: S_j = g^{(j)} u_1^j / j! (Taylor expansion of g(theta + eps u_1))."""
    rng = np.random.default_rng(seed)
    u1 = random_trig(rng, 2)
    u = EpsSeries([TrigPoly.zero(), u1, TrigPoly.zero(), TrigPoly.zero(), TrigPoly.zero()])
    g = TrigPoly.from_cos_sin([0], [0, 1])
    S = compose_perturbation(u, g, 4)
    d = g
    pw = TrigPoly.constant(1.0)
    for j in range(5):
        expect = d * pw / math.factorial(j)
        assert float((S[j] - expect).norm()) <= 1e-12 * max(float(expect.norm()), 1.0)
        d = d.derivative()
        pw = pw * u1


# series matrices -------------------------------------------------------------

def test_series_matrix_inverse_routes_agree(rng):
    order = 6
    e = [[random_series(rng, order, 2) for _ in range(2)] for _ in range(2)]
    # constant, well-conditioned leading block
    lead = [[1.3, 0.4], [-0.2, 0.9]]
    for i in range(2):
        for j in range(2):
            e[i][j] = EpsSeries([TrigPoly.constant(lead[i][j])] + list(e[i][j].coeffs[1:]))
    M = SeriesMatrix(e)
    A = M.inverse(order)
    B = M.adjugate_inverse(order)
    for i in range(2):
        for j in range(2):
            assert series_dist(A[i, j], B[i, j]) < 1e-10
    Id = M.matmul(A, order)
    for i in range(2):
        for j in range(2):
            target = EpsSeries.constant(TrigPoly.constant(float(i == j)), order)
            assert series_dist(Id[i, j], target) < 1e-10


def test_series_matrix_singular_leading_block():
    z = EpsSeries.zeros(2)
    one = EpsSeries.constant(TrigPoly.constant(1.0), 2)
    with pytest.raises(ArithmeticError):
        SeriesMatrix([[one, one], [one, one]]).inverse()
    assert SeriesMatrix([[one, z], [z, one]]).inverse()[0, 0] == one
