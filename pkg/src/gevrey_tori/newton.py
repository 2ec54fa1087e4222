"""Coefficient-doubling quasi-Newton step based on automatic reducibility.

The embedding is stored as K(theta) = (theta + X(theta), Y(theta)) with X, Y
series in eps.  Given (K, mu) exact up to order N, one step solves the
linearised invariance equation

    (M o T) ([[1, S], [0, lambda]] W - W o T) + (1, 1)^T sigma + E^{(N,2N]} = 0

for (W, sigma) as series, sets Delta = M W and keeps orders N+1..2N of
Delta and sigma.  Orders <= N are never touched.

After every step three checks run: the new invariance error vanishes through
order 2N (relative to the size of its terms), the reducibility defect of the
frame M has lead >= N+1, and (W, sigma) satisfy the linear equation above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from .cohomology import solve_parametric_formal, solve_standard
from .epsseries import (EpsSeries, ScalarSeries, SeriesMatrix, compose_perturbation,
                        series_mul)
from .errors import InvariantError, ValidationError
from .fourier import TrigPoly
from .lindstedt import HullExpansion, MapSpec, direct_expansion, hull_to_embedding

DEFECT_RTOL = 1e-10
AUDIT_RTOL = 1e-11
NORMALIZATION_RTOL = 1e-12


def _fl(prec, x) -> float:
    return float(prec.to_float(x))


def _shift(x: EpsSeries, k: int = 1) -> EpsSeries:
    """eps^k x, keeping the order."""
    z = TrigPoly.zero(x.prec)
    return EpsSeries([z] * k + list(x.coeffs[: len(x) - k]), x.prec)


def _const_series(s: ScalarSeries) -> EpsSeries:
    return s.as_eps_series()


def _majorants(x: EpsSeries) -> np.ndarray:
    return np.array([_fl(x.prec, c.norm()) for c in x.coeffs])


def _rel_profile(defect: list[EpsSeries], terms: list[EpsSeries]) -> tuple[np.ndarray, np.ndarray]:
    """Per order: max defect majorant and max term majorant."""
    d = np.max(np.vstack([_majorants(x) for x in defect]), axis=0)
    s = np.max(np.vstack([_majorants(x) for x in terms]), axis=0)
    return d, np.maximum(s, 1e-300)


def gamma_schedule(map: MapSpec, N0: int, h: int) -> list[float]:
    """gamma_0 = (nu/2)^(1/alpha) (a N0)^(-tau/alpha), then gamma_{j+1} = 2^(-tau/alpha) gamma_j."""
    f = map.freq
    a = max(map.a, 1)
    g = (f.nu / 2) ** (1.0 / map.alpha) * float(a * N0) ** (-f.tau / map.alpha)
    ratio = 2.0 ** (-f.tau / map.alpha)
    out = [g]
    for _ in range(h):
        out.append(out[-1] * ratio)
    return out


def rho_schedule(rho0: float, h: int) -> list[float]:
    """rho_{j+1} = rho_j - delta_j with delta_j = rho0 / 2^(j+2)."""
    out = [rho0]
    for j in range(h):
        out.append(out[-1] - rho0 / 2 ** (j + 2))
    return out


def series_norm(x: EpsSeries, rho: float, gamma: float) -> float:
    """sum_n ||x_n||_rho gamma^n (Fourier majorant)."""
    tot = 0.0
    for n, c in enumerate(x.coeffs):
        if not c.is_zero():
            tot += _fl(x.prec, c.norm(rho)) * gamma ** n
    return tot


def scalar_norm(s: ScalarSeries, gamma: float) -> float:
    return float(sum(abs(_fl(s.prec, v)) * gamma ** n for n, v in enumerate(s.coeffs)))


@dataclass(frozen=True)
class StepReport:
    h: int
    N_in: int
    N_out: int
    rho: float
    gamma: float
    defect_lead: float
    max_rel_defect: float
    reducibility_lead: float
    linear_audit: float
    normalization: float
    hnd_cond: float
    e_norm: float
    delta_norm: float
    sigma_norm: float


@dataclass(frozen=True)
class NewtonState:
    """(K, mu) through order N plus schedule bookkeeping."""

    N: int
    X: EpsSeries
    Y: EpsSeries
    mu: ScalarSeries
    map: MapSpec
    h: int = 0
    rho0: float = 0.05
    rho: float = 0.05
    gamma: float = float("nan")
    reports: tuple = ()
    _error: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for s in (self.X, self.Y, self.mu):
            if s.order != self.N:
                raise ValidationError(f"series of order {s.order} in a state of order {self.N}")
        if not self.X[0].is_zero():
            raise ValidationError("X_0 must vanish (graph over the flat circle)")

    @classmethod
    def from_expansion(cls, h: HullExpansion, rho0: float = 0.05) -> "NewtonState":
        X, Y = hull_to_embedding(h)
        m = h.map
        N = h.order
        gam = gamma_schedule(m, max(N, 1), 0)[0]
        return cls(N, X, Y, h.mu, m, 0, rho0, rho0, gam)

    def hull(self) -> HullExpansion:
        return HullExpansion(self.X, self.mu, self.map)


def invariance_profile(state: NewtonState, out_order: int | None = None):
    """Invariance error f o K - K o T through ``out_order`` (default 2N).

    Returns ``(Ex, Ey, scale)``; ``scale[n]`` is the largest majorant among the
    terms making up order n.
    """
    P = 2 * state.N if out_order is None else out_order
    if (state._error is not None and out_order is None):
        return state._error
    m = state.map
    prec = m.prec
    X = state.X.extend(P)
    Y = state.Y.extend(P)
    G = compose_perturbation(state.X, m.g, P)
    epsG = _shift(G)
    lamY = Y.mul(m.lam_series(P))
    F = lamY.add_scalar_series(state.mu.extend(P)) - epsG
    XT = X.rotate(m.freq, 1)
    YT = Y.rotate(m.freq, 1)
    om = EpsSeries.constant(TrigPoly.constant(m.omega, prec), P)
    Ex = X - XT + F - om
    Ey = F - YT
    muS = _const_series(state.mu.extend(P))
    _, scale = _rel_profile([Ex], [X, XT, lamY, muS, epsG, om, YT])
    return Ex, Ey, scale


def defect_relative(state: NewtonState, out_order: int | None = None) -> np.ndarray:
    """Per-order relative invariance defect."""
    Ex, Ey, scale = invariance_profile(state, out_order)
    d = np.maximum(_majorants(Ex), _majorants(Ey))
    return d / scale


def invariance_error(state: NewtonState, rtol: float = DEFECT_RTOL) -> tuple[EpsSeries, EpsSeries]:
    """E^{(N, 2N]}: the invariance error of order 2N with orders <= N checked and removed."""
    Ex, Ey, scale = invariance_profile(state)
    N = state.N
    rel = np.maximum(_majorants(Ex), _majorants(Ey)) / scale
    bad = np.nonzero(rel[: N + 1] > rtol)[0]
    if bad.size:
        n = int(bad[0])
        raise InvariantError("invariance defect lead",
                             f"order {n} <= N={N} has relative defect {rel[n]:.3g}")
    return Ex.window(N, 2 * N), Ey.window(N, 2 * N)


@dataclass(frozen=True)
class ReducibilityPack:
    M: SeriesMatrix
    Minv_shift: SeriesMatrix
    S: EpsSeries
    Atilde: tuple
    Ncal: EpsSeries
    alpha_vec: tuple
    V: tuple
    DfK: SeriesMatrix
    J: np.ndarray
    reducibility_lead: float


def build_reducibility(state: NewtonState, out_order: int | None = None,
                       rtol: float = DEFECT_RTOL) -> ReducibilityPack:
    """Frame M = [DK | J^{-1} DK N], its shifted inverse, S and Atilde through order 2N."""
    P = 2 * state.N if out_order is None else out_order
    m = state.map
    prec = m.prec
    one = EpsSeries.constant(TrigPoly.constant(1, prec), P)
    a1 = one + state.X.derivative().extend(P)
    a2 = state.Y.derivative().extend(P)
    nsq = series_mul(a1, a1, P) + series_mul(a2, a2, P)
    Ncal = nsq.inverse(P)
    # J^{-1} (a, b) = (-b, a)
    V = (-series_mul(a2, Ncal, P), series_mul(a1, Ncal, P))
    M = SeriesMatrix([[a1, V[0]], [a2, V[1]]])
    try:
        MT = M.rotate(m.freq, 1)
        beta = MT.inverse(P)
    except InvariantError as exc:
        raise InvariantError("leading-order frame", exc.detail) from exc
    # Df o K = [[1 - eps g'(x), lambda], [-eps g'(x), lambda]]
    gp = _shift(compose_perturbation(state.X, m.g_prime, P))
    lam = m.lam_series(P).as_eps_series()
    DfK = SeriesMatrix([[one - gp, lam], [-gp, lam]])
    Pv = (series_mul(a1, Ncal, P), series_mul(a2, Ncal, P))
    JiP = (-Pv[1], Pv[0])
    w = DfK.matvec(JiP, P)
    S = series_mul(Pv[0].rotate(m.freq, 1), w[0], P) + series_mul(Pv[1].rotate(m.freq, 1), w[1], P)
    Atilde = (beta[0, 0] + beta[0, 1], beta[1, 0] + beta[1, 1])
    # reducibility defect R = Df o K M - (M o T) [[1, S], [0, lambda]]
    zero = EpsSeries.zeros(P, prec)
    tri = SeriesMatrix([[one, S], [zero, lam]])
    lhs = DfK.matmul(M, P)
    rhs = MT.matmul(tri, P)
    R = lhs - rhs
    d, s = _rel_profile([R[i, j] for i in range(2) for j in range(2)],
                        [lhs[i, j] for i in range(2) for j in range(2)]
                        + [rhs[i, j] for i in range(2) for j in range(2)])
    rel = d / s
    over = np.nonzero(rel > rtol)[0]
    lead = float(over[0]) if over.size else math.inf
    if lead < state.N + 1:
        raise InvariantError("reducibility defect lead",
                             f"order {int(lead)} <= N={state.N} has relative defect {rel[int(lead)]:.3g}")
    J = np.array([[0, 1], [-1, 0]])
    return ReducibilityPack(M, beta, S, Atilde, Ncal, (a1, a2), V, DfK, J, lead)


def lambda_minus_one(alpha: int, order: int, prec) -> ScalarSeries:
    """lambda - 1 = -eps^alpha, the coefficient of W2bar in the mean of row 2."""
    return ScalarSeries.lam(alpha, order, prec).window(0, order)


def _scalar_block_inverse(A, P: int, prec):
    """Inverse of a 2x2 matrix of ScalarSeries by leading inverse + Neumann recursion."""
    a0 = [[A[i][j].coeffs[0] for j in range(2)] for i in range(2)]
    det = a0[0][0] * a0[1][1] - a0[0][1] * a0[1][0]
    if det == 0:
        raise InvariantError("HND", "averaged block is singular at leading order")
    inv0 = [[a0[1][1] / det, -a0[0][1] / det], [-a0[1][0] / det, a0[0][0] / det]]
    B = [[[inv0[i][j]] for j in range(2)] for i in range(2)]
    for n in range(1, P + 1):
        C = [[sum((A[i][l].coeffs[jj] * B[l][j][n - jj]
                   for jj in range(1, n + 1) for l in range(2)), prec.zero)
              for j in range(2)] for i in range(2)]
        for i in range(2):
            for j in range(2):
                B[i][j].append(-(inv0[i][0] * C[0][j] + inv0[i][1] * C[1][j]))
    a0f = np.array([[float(prec.to_float(v)) for v in row] for row in a0])
    cond = float(np.linalg.cond(a0f))
    return [[ScalarSeries(B[i][j], prec) for j in range(2)] for i in range(2)], cond


@dataclass(frozen=True)
class StepSolution:
    """Intermediate objects of one step (kept for audits and tests)."""

    W: tuple
    sigma: ScalarSeries
    Delta: tuple
    E: tuple
    pack: ReducibilityPack
    hnd_cond: float
    audit: float


def solve_step(state: NewtonState) -> StepSolution:
    """Solve the linearised equation for (W, sigma) through order 2N."""
    N = state.N
    P = 2 * N
    m = state.map
    f = m.freq
    prec = m.prec
    Ex, Ey = invariance_error(state)
    pack = build_reducibility(state, P)
    beta = pack.Minv_shift
    Et1, Et2 = beta.matvec((Ex, Ey), P)
    At1, At2 = pack.Atilde
    S = pack.S
    Ba = solve_parametric_formal(-Et2.mean_free(), m.alpha, f)
    Bb = solve_parametric_formal(-At2.mean_free(), m.alpha, f)
    # averaged block for (W2bar, sigma):
    #   Sbar W2bar + (<S Bb> + A1bar) sigma = -<S Ba> - E1bar
    #   -eps^alpha W2bar + A2bar sigma      = -E2bar
    A11 = S.mean()
    A12 = series_mul(S, Bb, P).mean() + At1.mean()
    A21 = lambda_minus_one(m.alpha, P, prec)
    A22 = At2.mean()
    b1 = -(series_mul(S, Ba, P).mean() + Et1.mean())
    b2 = -Et2.mean()
    Ainv, cond = _scalar_block_inverse([[A11, A12], [A21, A22]], P, prec)
    W2bar = Ainv[0][0].mul(b1, P) + Ainv[0][1].mul(b2, P)
    sigma = Ainv[1][0].mul(b1, P) + Ainv[1][1].mul(b2, P)
    W2 = Ba + Bb.mul(sigma, P)
    W2 = W2.add_scalar_series(W2bar)
    rhs1 = -(series_mul(S, W2, P).mean_free() + Et1.mean_free() + At1.mean_free().mul(sigma, P))
    W1c = EpsSeries([solve_standard(c, f) for c in rhs1.coeffs], prec)
    # normalisation: mean of row 1 of M_0^{-1} (alpha W1 + V W2) vanishes
    m0 = pack.M.leading_constant()
    det0 = m0[0][0] * m0[1][1] - m0[0][1] * m0[1][0]
    r = (m0[1][1] / det0, -m0[0][1] / det0)
    a1, a2 = pack.alpha_vec
    V1, V2 = pack.V
    c = (a1.scale(r[0]) + a2.scale(r[1])).mean()
    dvec1 = series_mul(a1, W1c, P) + series_mul(V1, W2, P)
    dvec2 = series_mul(a2, W1c, P) + series_mul(V2, W2, P)
    d = (dvec1.scale(r[0]) + dvec2.scale(r[1])).mean()
    W1bar = -(c.inverse(P).mul(d, P))
    W1 = W1c.add_scalar_series(W1bar)
    W = (W1, W2)
    Delta = pack.M.matvec(W, P)
    audit = linear_audit(state, pack, W, sigma, (Ex, Ey))
    return StepSolution(W, sigma, Delta, (Ex, Ey), pack, cond, audit)


def linear_audit(state: NewtonState, pack: ReducibilityPack, W, sigma: ScalarSeries, E) -> float:
    """Max relative defect of (M o T)([[1,S],[0,lambda]] W - W o T) + (1,1) sigma + E."""
    P = 2 * state.N
    f = state.map.freq
    lam = state.map.lam_series(P)
    W1, W2 = W
    inner = (W1 + series_mul(pack.S, W2, P) - W1.rotate(f, 1),
             W2.mul(lam, P) - W2.rotate(f, 1))
    MT = pack.M.rotate(f, 1)
    lin = MT.matvec(inner, P)
    sig = _const_series(sigma)
    res = (lin[0] + sig + E[0], lin[1] + sig + E[1])
    d, s = _rel_profile(list(res), [lin[0], lin[1], sig, E[0], E[1]])
    return float(np.max(d / s))


def newton_step(state: NewtonState, rtol: float = DEFECT_RTOL,
                audit_rtol: float = AUDIT_RTOL) -> NewtonState:
    """Orders N+1..2N from an order-N state; orders <= N are copied unchanged."""
    N = state.N
    if N < 1:
        raise ValidationError("a Newton step needs N >= 1")
    P = 2 * N
    m = state.map
    sol = solve_step(state)
    if sol.audit > audit_rtol:
        raise InvariantError("linearized residual", f"relative defect {sol.audit:.3g}")
    D1 = sol.Delta[0]
    D2 = sol.Delta[1]
    X = EpsSeries(list(state.X.coeffs) + list(D1.coeffs[N + 1: P + 1]), m.prec)
    Y = EpsSeries(list(state.Y.coeffs) + list(D2.coeffs[N + 1: P + 1]), m.prec)
    mu = ScalarSeries(np.concatenate([state.mu.coeffs, sol.sigma.coeffs[N + 1: P + 1]]), m.prec)
    h = state.h + 1
    rho = state.rho - state.rho0 / 2 ** (state.h + 2)
    gamma = state.gamma * 2.0 ** (-m.freq.tau / m.alpha)
    new = NewtonState(P, X, Y, mu, m, h, state.rho0, rho, gamma, state.reports)
    # quadratic defect: the new error vanishes through order 2N
    prof = invariance_profile(new, 2 * P)
    rel = np.maximum(_majorants(prof[0]), _majorants(prof[1])) / prof[2]
    over = np.nonzero(rel > rtol)[0]
    lead = float(over[0]) if over.size else math.inf
    if lead < P + 1:
        raise InvariantError("quadratic defect order",
                             f"order {int(lead)} <= 2N={P} has relative defect {rel[int(lead)]:.3g}")
    norm_def = normalization_defect(new, N + 1)
    if norm_def > NORMALIZATION_RTOL:
        raise InvariantError("normalization", f"relative mean {norm_def:.3g}")
    Dw = (D1.window(N, P), D2.window(N, P))
    rep = StepReport(
        h=state.h, N_in=N, N_out=P, rho=state.rho, gamma=state.gamma,
        defect_lead=lead, max_rel_defect=float(np.max(rel[: P + 1])),
        reducibility_lead=sol.pack.reducibility_lead, linear_audit=sol.audit,
        normalization=norm_def, hnd_cond=sol.hnd_cond,
        e_norm=max(series_norm(e, state.rho, state.gamma) for e in sol.E),
        delta_norm=max(series_norm(x, state.rho, state.gamma) for x in Dw),
        sigma_norm=scalar_norm(sol.sigma.window(N, P), state.gamma))
    return replace(new, reports=state.reports + (rep,), _error=prof)


def normalization_defect(state: NewtonState, n_from: int = 1) -> float:
    """max_n |mean([M_0^{-1} K_n]_1)| / ||K_n|| over n >= n_from (M_0 = identity here)."""
    prec = state.map.prec
    worst = 0.0
    for n in range(max(n_from, 1), state.N + 1):
        x = state.X[n]
        scale = max(_fl(prec, x.norm()), _fl(prec, state.Y[n].norm()), 1e-300)
        worst = max(worst, abs(_fl(prec, x.mean())) / scale)
    return worst


def iterate_doubling(map: MapSpec, N0: int, h: int, rho0: float = 0.05) -> Iterator[NewtonState]:
    """Yield the seed state and the state after each of ``h`` steps."""
    if N0 < 1:
        raise ValidationError("N0 must be at least 1")
    if h < 0:
        raise ValidationError("h must be nonnegative")
    state = NewtonState.from_expansion(direct_expansion(map, N0), rho0)
    yield state
    for _ in range(h):
        state = newton_step(state)
        yield state


def run_doubling(map: MapSpec, N0: int, h: int, rho0: float = 0.05) -> NewtonState:
    """Seed from the direct expansion of order N0 and apply ``h`` Newton steps."""
    state = None
    for state in iterate_doubling(map, N0, h, rho0):
        pass
    return state
