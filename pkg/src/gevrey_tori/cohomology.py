"""Solvers for the linear difference equations on the circle.

* ``phi - phi(theta + omega) = eta``                 (standard)
* ``phi(theta + omega) - 2 phi + phi(theta - omega) = eta``   (second difference)
* ``lambda(eps) phi - phi(theta + omega) = eta``     (parametric, lambda = 1 - eps^alpha)

The parametric equation is solved either as a formal series in eps (order by
order, the route used by the Newton step) or at one fixed numeric eps (used
for diagnostics and as a cross-check).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .epsseries import EpsSeries
from .errors import InvariantError, ValidationError
from .fourier import DROP_TOL, Frequency, TrigPoly, _symmetrize, _trim

MEAN_TOL = 1e-12


def _zero_mean(eta: TrigPoly, mean_tol: float) -> TrigPoly:
    """Project out a roundoff-sized mean; reject a genuine one."""
    if eta.degree == 0 and eta.is_zero():
        return eta
    p = eta.prec
    m = abs(float(p.to_float(eta.mean())))
    scale = float(p.to_float(eta.norm()))
    if m > mean_tol * scale:
        raise ValidationError(f"right-hand side has nonzero mean {m:.3g} "
                              f"(majorant {scale:.3g})")
    return eta.mean_free()


def _divide(eta: TrigPoly, div: np.ndarray) -> TrigPoly:
    D = eta.degree
    c = eta.c.copy()
    c[D] = eta.prec.czeros(1)[0]
    mask = np.ones(2 * D + 1, dtype=bool)
    mask[D] = False
    c[mask] = c[mask] / div[mask]
    return TrigPoly._raw(_trim(_symmetrize(c), eta.prec, DROP_TOL), eta.prec)


def solve_standard(eta: TrigPoly, freq: Frequency, mean_tol: float = MEAN_TOL) -> TrigPoly:
    """Zero-mean phi with phi - phi(. + omega) = eta."""
    eta = _zero_mean(eta, mean_tol)
    if eta.is_zero():
        return eta
    return _divide(eta, freq.standard_divisors(eta.degree))


def solve_second_difference(eta: TrigPoly, freq: Frequency,
                            mean_tol: float = MEAN_TOL) -> TrigPoly:
    """Zero-mean phi with phi(. + omega) - 2 phi + phi(. - omega) = eta."""
    eta = _zero_mean(eta, mean_tol)
    if eta.is_zero():
        return eta
    return _divide(eta, freq.second_difference_divisors(eta.degree))


def solve_parametric_formal(eta: EpsSeries, alpha: int, freq: Frequency,
                            mean_tol: float = MEAN_TOL) -> EpsSeries:
    """Formal series solution of (1 - eps^alpha) phi - phi(. + omega) = eta.

    Order n reads phi_n - phi_n(. + omega) = eta_n + phi_{n-alpha}.
    Every eta_n must have zero mean.
    """
    if alpha < 1:
        raise ValidationError("alpha must be a positive integer")
    out: list[TrigPoly] = []
    for n, e in enumerate(eta.coeffs):
        rhs = _zero_mean(e, mean_tol)
        if n >= alpha and not out[n - alpha].is_zero():
            rhs = rhs + out[n - alpha]
        out.append(solve_standard(rhs, freq, mean_tol) if not rhs.is_zero() else rhs)
    return EpsSeries(out, eta.prec)


def gamma_radius(nu: float, tau: float, alpha: int, aN: int) -> float:
    """(nu/2)^(1/alpha) (aN)^(-tau/alpha)."""
    if aN < 1:
        raise ValidationError("aN must be at least 1")
    return (nu / 2) ** (1.0 / alpha) * float(aN) ** (-tau / alpha)


@dataclass(frozen=True)
class DivisorTable:
    """Divisors for |k| <= kmax, centred arrays (index kmax is k = 0)."""

    kmax: int
    standard: np.ndarray
    second_difference: np.ndarray
    parametric: np.ndarray | None = None
    eps: float | None = None

    def min_parametric(self) -> float:
        if self.parametric is None:
            raise ValidationError("no parametric divisors in this table")
        mask = np.ones(2 * self.kmax + 1, dtype=bool)
        mask[self.kmax] = False
        return float(np.min(np.abs(np.asarray(self.parametric[mask], dtype=complex))))


def divisor_table(freq: Frequency, kmax: int, eps=None, alpha: int | None = None) -> DivisorTable:
    std = freq.standard_divisors(kmax)
    sd = freq.second_difference_divisors(kmax)
    par = None
    if eps is not None:
        if alpha is None:
            raise ValidationError("alpha is needed for parametric divisors")
        p = freq.prec
        lam = p.one - p.real(eps) ** alpha
        par = freq.parametric_divisors(lam, kmax)
    return DivisorTable(kmax, std, sd, par, None if eps is None else float(eps))


def solve_parametric_numeric(eta: TrigPoly, eps, alpha: int, freq: Frequency, aN: int,
                             mean_tol: float = MEAN_TOL) -> TrigPoly:
    """Zero-mean phi with (1 - eps^alpha) phi - phi(. + omega) = eta at a fixed real eps.

    Requires deg(eta) <= aN and |eps| <= gamma_N; the small divisor lower
    bound (nu/2) (aN)^(-tau) is asserted on every divisor used.
    """
    if eta.degree > aN:
        raise ValidationError(f"degree {eta.degree} exceeds aN = {aN}")
    gam = gamma_radius(freq.nu, freq.tau, alpha, aN)
    e = float(freq.prec.to_float(freq.prec.real(eps)))
    if abs(e) > gam * (1 + 1e-12):
        raise ValidationError(f"|eps| = {abs(e):.6g} exceeds gamma_N = {gam:.6g}")
    eta = _zero_mean(eta, mean_tol)
    if eta.is_zero():
        return eta
    p = freq.prec
    lam = p.one - p.real(eps) ** alpha
    div = freq.parametric_divisors(lam, eta.degree)
    bound = (freq.nu / 2) * float(aN) ** (-freq.tau)
    mask = np.ones(len(div), dtype=bool)
    mask[eta.degree] = False
    dmin = float(np.min(np.abs(p.to_float(np.abs(div[mask])))))
    if dmin < bound * (1 - 1e-12):
        raise InvariantError("small divisor bound",
                             f"min |lambda - e^(2 pi i k omega)| = {dmin:.6g} < {bound:.6g}")
    return _divide(eta, div)


def standard_residual(phi: TrigPoly, eta: TrigPoly, freq: Frequency) -> TrigPoly:
    return phi - phi.rotate(freq, 1) - eta.mean_free()


def second_difference_residual(phi: TrigPoly, eta: TrigPoly, freq: Frequency) -> TrigPoly:
    return phi.rotate(freq, 1) - phi * 2 + phi.rotate(freq, -1) - eta.mean_free()


def parametric_residual(phi: TrigPoly, eta: TrigPoly, eps, alpha: int,
                        freq: Frequency) -> TrigPoly:
    p = freq.prec
    lam = p.one - p.real(eps) ** alpha
    return phi * lam - phi.rotate(freq, 1) - eta.mean_free()
