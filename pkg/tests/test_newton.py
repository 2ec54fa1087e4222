import math

import numpy as np
import pytest

from gevrey_tori import (Frequency, InvariantError, MapSpec, NewtonState, TrigPoly, ValidationError,
                         build_reducibility, direct_expansion, hull_to_embedding, invariance_error,
                         newton_step, run_doubling)
from gevrey_tori import newton as nt
from gevrey_tori.epsseries import EpsSeries
from gevrey_tori.lindstedt import LindstedtSolver


def rel_diff(a, b):
    s = float(b.norm())
    return float((a - b).norm()) / s if s > 0 else float(a.norm())


def state_of(m, N):
    return NewtonState.from_expansion(direct_expansion(m, N))


def test_flat_circle_has_zero_error(golden_small):
    m = MapSpec(TrigPoly.from_cos_sin([0], [0, 1]), 3, golden_small)
    s = state_of(m, 0)
    Ex, Ey, _ = nt.invariance_profile(s, 0)
    assert Ex[0].is_zero() and Ey[0].is_zero()


def test_direct_state_error_vanishes_through_N(sin_map):
    s = state_of(sin_map, 12)
    rel = nt.defect_relative(s)
    assert np.all(rel[:13] <= 1e-10)
    assert rel[13] > 1e-6  # the first neglected order is really there
    Ex, Ey = invariance_error(s)
    assert Ex.lead >= 13 and Ey.lead >= 13


@pytest.mark.parametrize("N", [5, 8, 11])
def test_first_error_coefficient_is_lindstedt_obstruction(sin_map, N):
    """E_{N+1} (both rows) equals minus the direct right-hand side of order N+1."""
    sol = LindstedtSolver(sin_map)
    for _ in range(N):
        sol.step()
    obstruction = sol.obstruction()
    Ex, Ey = invariance_error(NewtonState.from_expansion(sol.expansion()))
    assert rel_diff(Ex[N + 1], -obstruction) < 1e-12
    assert rel_diff(Ey[N + 1], -obstruction) < 1e-12


def test_corrupted_state_is_rejected(sin_map):
    s = state_of(sin_map, 8)
    X = list(s.X.coeffs)
    X[4] = X[4] + TrigPoly.from_cos_sin([0, 1e-3])
    bad = NewtonState(8, EpsSeries(X), s.Y, s.mu, sin_map)
    with pytest.raises(InvariantError) as exc:
        invariance_error(bad)
    assert exc.value.invariant == "invariance defect lead"


def test_reducibility_pack_leading_order(sin_map):
    pack = build_reducibility(state_of(sin_map, 8))
    M0 = pack.M.coefficient(0)
    for i in range(2):
        for j in range(2):
            assert M0[i][j] == TrigPoly.constant(float(i == j))
    assert pack.S[0] == TrigPoly.constant(1.0)
    assert pack.Ncal[0] == TrigPoly.constant(1.0)
    assert pack.reducibility_lead >= 9
    np.testing.assert_array_equal(pack.J, [[0, 1], [-1, 0]])


def test_reducibility_defect_order_each_step(sin_map):
    for st in nt.iterate_doubling(sin_map, 4, 2):
        assert build_reducibility(st).reducibility_lead >= st.N + 1


def test_one_step_matches_direct(sin_map):
    new = newton_step(state_of(sin_map, 4))
    ref = hull_to_embedding(direct_expansion(sin_map, 8))
    for n in range(5, 9):
        assert rel_diff(new.X[n], ref[0][n]) <= 1e-9
        assert rel_diff(new.Y[n], ref[1][n]) <= 1e-9


def test_step_keeps_lower_orders_bit_identical(sin_map):
    s = state_of(sin_map, 4)
    new = newton_step(s)
    for n in range(5):
        assert new.X[n] == s.X[n] and new.Y[n] == s.Y[n]
        assert new.mu[n] == s.mu[n]


def test_integrable_case_zero_correction(golden_small):
    m = MapSpec(TrigPoly.zero(), 3, golden_small)
    s = state_of(m, 4)
    sol = nt.solve_step(s)
    assert all(c.is_zero() for d in sol.Delta for c in d.coeffs)
    assert all(v == 0 for v in sol.sigma.coeffs)
    new = newton_step(s)
    assert all(c.is_zero() for c in new.X.coeffs)


def test_step_reports(sin_map):
    st = run_doubling(sin_map, 4, 3)
    assert st.N == 32
    assert [r.defect_lead >= 2 * r.N_in + 1 for r in st.reports] == [True] * 3
    assert all(r.linear_audit <= 1e-11 for r in st.reports)
    assert all(r.normalization <= 1e-12 for r in st.reports)
    assert [r.reducibility_lead >= r.N_in + 1 for r in st.reports] == [True] * 3


def test_h_zero_is_direct_embedding(sin_map):
    st = run_doubling(sin_map, 6, 0)
    X, Y = hull_to_embedding(direct_expansion(sin_map, 6))
    assert st.X == X and st.Y == Y


@pytest.mark.parametrize("alpha", [1, 2, 3, 5])
def test_matches_direct_for_several_alpha(golden_small, alpha):
    g = TrigPoly.from_cos_sin([0.3, 0.7, 0.2], [0, 1.0, 0.4])
    m = MapSpec(g, alpha, golden_small)
    st = run_doubling(m, 3, 2)
    h = direct_expansion(m, 12)
    X, Y = hull_to_embedding(h)
    for n in range(1, 13):
        assert rel_diff(st.X[n], X[n]) <= 1e-9
        assert abs(float(st.mu[n] - h.mu[n])) <= 1e-9 * max(abs(float(h.mu[n])), 1.0)


def test_multiprecision_agreement():
    f = Frequency("golden", K_max=200, precision="mp30")
    m = MapSpec(TrigPoly.from_cos_sin(["0"], ["0", "1"], "mp30"), 3, f)
    st = run_doubling(m, 4, 2)
    X, _ = hull_to_embedding(direct_expansion(m, 16))
    worst = max(float(rel_diff(st.X[n], X[n])) for n in range(5, 17))
    assert worst < 1e-25


def test_opposite_sign_of_eps_alpha_breaks_audit(golden_small, monkeypatch):
    """The averaged row-2 coefficient must be lambda - 1 = -eps^alpha."""
    m = MapSpec(TrigPoly.from_cos_sin([0], [0, 1]), 1, golden_small)
    s = state_of(m, 4)
    assert nt.solve_step(s).audit < 1e-13
    orig = nt.lambda_minus_one
    monkeypatch.setattr(nt, "lambda_minus_one", lambda a, P, prec: -orig(a, P, prec))
    assert nt.solve_step(s).audit > 1e-4


def test_schedule(sin_map):
    st = run_doubling(sin_map, 4, 3, rho0=0.05)
    gam = [r.gamma for r in st.reports] + [st.gamma]
    ratio = 2.0 ** (-1 / 3)
    for a, b in zip(gam, gam[1:]):
        assert b / a == pytest.approx(ratio, rel=1e-15)
    rhos = [r.rho for r in st.reports] + [st.rho]
    assert rhos == nt.rho_schedule(0.05, 3)
    assert all(r >= 0.025 for r in nt.rho_schedule(0.05, 40))
    assert nt.gamma_schedule(sin_map, 4, 3)[0] == pytest.approx(gam[0], rel=1e-15)


def test_argument_errors(sin_map):
    with pytest.raises(ValidationError):
        run_doubling(sin_map, 0, 1)
    with pytest.raises(ValidationError):
        run_doubling(sin_map, 2, -1)
    with pytest.raises(ValidationError):
        newton_step(state_of(sin_map, 0))


def test_series_norm_helpers(sin_map):
    st = state_of(sin_map, 4)
    v = nt.series_norm(st.X, 0.05, 0.1)
    manual = sum(float(st.X[n].norm(0.05)) * 0.1 ** n for n in range(5))
    assert v == pytest.approx(manual, rel=1e-14)
    assert math.isfinite(nt.scalar_norm(st.mu, 0.3))
