"""Direct order-by-order Lindstedt expansion of the dissipative standard map.

The map is

    y' = lambda(eps) y + mu - eps g(x),    x' = x + y',    lambda = 1 - eps^alpha,

and the torus is sought as x = theta + u_eps(theta).  Eliminating y gives the
hull equation

    L u + eps^alpha (u - u(. - omega)) + eps^alpha omega - mu + eps g(theta + u) = 0,

with L u = u(. + omega) - 2u + u(. - omega).  Order n of it reads

    L u_n + (u_{n-alpha} - u_{n-alpha}(. - omega)) + omega [n = alpha] - mu_n + S_{n-1} = 0,

where S_m is the eps^m coefficient of g(theta + u).  mu_n removes the mean,
and u_n is the zero-mean solution of the second-difference equation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cohomology import solve_second_difference
from .epsseries import Composer, EpsSeries, ScalarSeries, compose_perturbation
from .errors import ValidationError
from .fourier import Frequency, TrigPoly
from .precision import Precision


@dataclass(frozen=True)
class MapSpec:
    """Dissipative standard map with perturbation ``g`` and lambda = 1 - eps^alpha."""

    g: TrigPoly
    alpha: int
    freq: Frequency
    g_prime: TrigPoly = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.g.prec is not self.freq.prec:
            raise ValidationError("g and the frequency must share a precision backend")
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise ValidationError(f"alpha must be a positive integer, got {self.alpha}")
        if self.g.degree < 1 and not self.g.is_zero():
            raise ValidationError("g must have degree at least 1 (or vanish identically)")
        object.__setattr__(self, "g_prime", self.g.derivative())

    @property
    def a(self) -> int:
        """Degree of g."""
        return self.g.degree

    @property
    def prec(self) -> Precision:
        return self.freq.prec

    @property
    def omega(self):
        return self.freq.omega

    def lam(self, eps):
        return 1 - eps ** self.alpha

    def lam_series(self, order: int) -> ScalarSeries:
        return ScalarSeries.lam(self.alpha, order, self.prec)

    def apply(self, x, y, eps, mu):
        """One iterate (x, y) -> (x', y').  Complex x is allowed (analytic continuation)."""
        gx = self.g.eval(x)
        y1 = self.lam(eps) * y + mu - eps * gx
        return x + y1, y1

    def jacobian(self, x, eps):
        """Df = [[1 - eps g'(x), lambda], [-eps g'(x), lambda]]."""
        gp = self.g_prime.eval(x)
        lam = self.lam(eps)
        return np.array([[1 - eps * gp, lam], [-eps * gp, lam]])


@dataclass(frozen=True)
class HullExpansion:
    """Coefficients u_n (with u_0 = 0) and mu_n of the Lindstedt series."""

    u: EpsSeries
    mu: ScalarSeries
    map: MapSpec

    @property
    def order(self) -> int:
        return self.u.order


class LindstedtSolver:
    """Incremental direct expansion: each :meth:`step` adds one order."""

    def __init__(self, map: MapSpec, k_order: str = "ascending"):
        self.map = map
        self.prec = map.prec
        self._comp = Composer(map.g, k_order)
        self.u: list[TrigPoly] = [TrigPoly.zero(self.prec)]
        self.mu: list = [self.prec.zero]

    @property
    def order(self) -> int:
        return len(self.u) - 1

    def obstruction(self) -> TrigPoly:
        """Right-hand side terms of the next order before mu is chosen:
        coupling + omega [n = alpha] + S_{n-1}, with n = order + 1."""
        n = self.order + 1
        m = self.map
        rhs = self._comp.layer(n - 1)
        if n - m.alpha >= 1:
            v = self.u[n - m.alpha]
            rhs = rhs + (v - v.rotate(m.freq, -1))
        if n == m.alpha:
            rhs = rhs + m.omega
        return rhs

    def step(self) -> None:
        rhs = self.obstruction()
        mu_n = rhs.mean()
        u_n = solve_second_difference(-rhs.mean_free(), self.map.freq)
        self.u.append(u_n)
        self.mu.append(mu_n)
        self._comp.push(u_n)

    def expansion(self) -> HullExpansion:
        return HullExpansion(EpsSeries(self.u, self.prec), ScalarSeries(self.mu, self.prec),
                             self.map)


def direct_expansion(map: MapSpec, N: int, k_order: str = "ascending") -> HullExpansion:
    """Lindstedt coefficients (u_n, mu_n) for n = 0..N."""
    if N < 0:
        raise ValidationError("N must be nonnegative")
    sol = LindstedtSolver(map, k_order)
    for _ in range(N):
        sol.step()
    return sol.expansion()


def hull_to_embedding(h: HullExpansion, map: MapSpec | None = None) -> tuple[EpsSeries, EpsSeries]:
    """(X, Y) with K(theta) = (theta + X, Y): X = u, Y = omega + u - u(. - omega)."""
    m = h.map if map is None else map
    Y = [TrigPoly.constant(m.omega, m.prec)]
    for n in range(1, h.order + 1):
        un = h.u[n]
        Y.append(un - un.rotate(m.freq, -1))
    return h.u, EpsSeries(Y, m.prec)


def hull_equation_defect(h: HullExpansion, k_order: str = "ascending"):
    """Left side of the hull equation as a series of order N, plus a per-order scale.

    Returns ``(defect, scale)`` where ``scale[n]`` is the largest majorant of
    the individual terms at order n (used to form relative defects).
    """
    m = h.map
    N = h.order
    prec = m.prec
    S = compose_perturbation(h.u, m.g, max(N - 1, 0), k_order) if N >= 1 else None
    out = []
    scale = []
    for n in range(N + 1):
        un = h.u[n]
        terms = [un.rotate(m.freq, 1) - un * 2 + un.rotate(m.freq, -1),
                 TrigPoly.constant(-h.mu[n], prec)]
        if n - m.alpha >= 0:
            v = h.u[n - m.alpha]
            terms.append(v - v.rotate(m.freq, -1))
        if n == m.alpha:
            terms.append(TrigPoly.constant(m.omega, prec))
        if n >= 1:
            terms.append(S[n - 1])
        tot = terms[0]
        for t in terms[1:]:
            tot = tot + t
        out.append(tot)
        scale.append(max([float(prec.to_float(t.norm())) for t in terms] + [1e-300]))
    return EpsSeries(out, prec), scale
