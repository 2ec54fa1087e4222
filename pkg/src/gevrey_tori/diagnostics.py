"""Measurements on computed series.

Coefficient norms and Gevrey exponent fits, Diophantine constants and the
eps-domain radii, membership in the set G, and numeric invariance residual
scans that push the truncated torus through the map itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Sequence

import numpy as np

from .epsseries import EpsSeries
from .errors import InvariantError, ValidationError
from .fourier import Frequency, _frac_table, _omega_decimal
from .lindstedt import HullExpansion, MapSpec, hull_to_embedding
from .newton import NewtonState


def _embedding(obj):
    """(X, Y, mu, map) from a NewtonState or a HullExpansion."""
    if isinstance(obj, NewtonState):
        return obj.X, obj.Y, obj.mu, obj.map
    if isinstance(obj, HullExpansion):
        X, Y = hull_to_embedding(obj)
        return X, Y, obj.mu, obj.map
    raise ValidationError(f"expected a NewtonState or HullExpansion, got {type(obj).__name__}")


def _log(x) -> float:
    """Natural log of a positive backend scalar, as a float (no overflow)."""
    if type(x).__name__ == "mpf":
        return float(x.context.log(x))
    if isinstance(x, np.longdouble):
        return float(np.log(x))
    return math.log(float(x))


def coefficient_norms(obj, rho: float = 0.0) -> list[tuple[int, object]]:
    """Majorant of each eps-coefficient.

    A HullExpansion gives ||u_n||; a NewtonState (or an ``(X, Y)`` pair) gives
    ||K_n|| = max(||X_n||, ||Y_n||); a bare EpsSeries gives its own norms.
    """
    if rho < 0:
        raise ValidationError("rho must be nonnegative")
    if isinstance(obj, HullExpansion):
        return [(n, c.norm(rho)) for n, c in enumerate(obj.u.coeffs)]
    if isinstance(obj, EpsSeries):
        return [(n, c.norm(rho)) for n, c in enumerate(obj.coeffs)]
    if isinstance(obj, NewtonState):
        X, Y = obj.X, obj.Y
    else:
        X, Y = obj
    return [(n, max(x.norm(rho), y.norm(rho))) for n, (x, y) in enumerate(zip(X.coeffs, Y.coeffs))]


@dataclass(frozen=True)
class GevreyFit:
    sigma: float
    logR: float
    logC: float
    n_range: tuple[int, int]
    residual: float
    bound: float | None


def fit_gevrey(norms: Sequence[tuple[int, object]], n_min: int, n_max: int,
               map: MapSpec | None = None) -> GevreyFit:
    """Least squares fit log||K_n|| = logC + n logR + sigma n log n over n_min..n_max."""
    if n_max - n_min < 8:
        raise ValidationError(f"fit window {n_min}..{n_max} is shorter than 8 orders")
    pts = [(int(n), v) for n, v in norms if n_min <= n <= n_max]
    if len(pts) < 3:
        raise ValidationError(f"fit window {n_min}..{n_max} holds fewer than 3 orders")
    for n, v in pts:
        if not v > 0:
            raise ValidationError(f"norm at order {n} is not positive; fit undefined")
    n = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([_log(p[1]) for p in pts], dtype=np.float64)
    A = np.column_stack([np.ones_like(n), n, n * np.log(n)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    bound = None if map is None else 2 * map.freq.tau / map.alpha
    return GevreyFit(float(coef[2]), float(coef[1]), float(coef[0]), (n_min, n_max), res, bound)


def fit_root_growth(norms: Sequence[tuple[int, object]], n_min: int, n_max: int) -> tuple[float, float]:
    """Two-parameter fit ||K_n||^(1/n) = C n^sigma; returns (sigma, log C).

    Unlike :func:`fit_gevrey` there is no separate geometric rate, so at
    moderate orders the geometric growth is partly read as sigma.
    """
    pts = [(int(n), v) for n, v in norms if n_min <= n <= n_max and n >= 1]
    if len(pts) < 3:
        raise ValidationError(f"fit window {n_min}..{n_max} holds fewer than 3 orders")
    for n, v in pts:
        if not v > 0:
            raise ValidationError(f"norm at order {n} is not positive; fit undefined")
    n = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([_log(p[1]) for p in pts], dtype=np.float64) / n
    sigma, logc = np.polyfit(np.log(n), y, 1)
    return float(sigma), float(logc)


def estimate_diophantine(omega, tau: float, K_max: int) -> float:
    """min over 1 <= k <= K_max of |e^{2 pi i k omega} - 1| k^tau.

    Returns 0.0 for an exact resonance inside the range.
    """
    if K_max < 1:
        raise ValidationError("K_max must be at least 1")
    val, _, _ = _omega_decimal(omega, 60)
    fr = np.array([float(Decimal(s)) for s in _frac_table(str(val), 60, int(K_max))[1:]])
    if np.any(fr == 0):
        return 0.0
    k = np.arange(1, K_max + 1, dtype=np.float64)
    return float(np.min(2 * np.abs(np.sin(np.pi * fr)) * k ** tau))


def gamma_N(map: MapSpec, N: int) -> float:
    """(nu/2)^(1/alpha) (a N)^(-tau/alpha)."""
    if N < 1:
        raise ValidationError("N must be at least 1")
    f = map.freq
    a = max(map.a, 1)
    return (f.nu / 2) ** (1.0 / map.alpha) * float(a * N) ** (-f.tau / map.alpha)


def tilde_nu(lambda_val, freq: Frequency, K_max: int | None = None) -> float:
    """sup over 1 <= |k| <= K_max of |e^{2 pi i k omega} - lambda|^{-1} |k|^{-tau}.

    Raises InvariantError when lambda meets a phase to double precision.
    """
    K = freq.K_max if K_max is None else int(K_max)
    ks = np.arange(1, K + 1)
    ph = freq.prec.to_float(freq.prec.re(freq.phases(ks))) + 1j * freq.prec.to_float(
        freq.prec.im(freq.phases(ks)))
    lam = complex(lambda_val)
    # k and -k give conjugate phases
    d = np.minimum(np.abs(ph - lam), np.abs(np.conj(ph) - lam))
    # phases carry roundoff, so resonance is decided to working precision
    if np.any(d <= 8 * np.finfo(np.float64).eps):
        k0 = int(ks[np.argmin(d)])
        raise InvariantError("resonance", f"lambda equals e^(2 pi i k omega) at k = +-{k0}")
    return float(np.max(1.0 / (d * ks.astype(np.float64) ** freq.tau)))


def in_G(eps, A: float, N: int, map: MapSpec, K_max: int | None = None) -> bool:
    """Whether nu~(lambda(eps)) |lambda(eps) - 1|^(N+1) <= A.

    An exact resonance makes nu~ infinite, so the point is not in G.
    """
    lam = 1 - complex(eps) ** map.alpha
    try:
        nt = tilde_nu(lam, map.freq, K_max)
    except InvariantError:
        return False
    return nt * abs(lam - 1) ** (N + 1) <= A


@dataclass(frozen=True)
class ResidualReport:
    eps: np.ndarray
    residual: np.ndarray
    floor: np.ndarray
    used: np.ndarray
    slope: float
    offset: float
    order: int

    @property
    def dropped(self) -> list[float]:
        return [float(e) for e, u in zip(self.eps, self.used) if not u]


def residual_scan(obj, eps_samples: Sequence[float], theta_samples: Sequence[float] | None = None,
                  check_domain: bool = True) -> ResidualReport:
    """Max over theta of |f(K(theta)) - K(theta + omega)| for each eps, and a log-log fit.

    The truncated K and mu are evaluated as numbers and pushed through the map
    itself.  Samples within 10 unit roundoffs of the evaluated magnitude are
    excluded from the slope fit.
    """
    X, Y, mu, m = _embedding(obj)
    p = m.prec
    N = X.order
    eps_list = [float(e) for e in eps_samples]
    if not eps_list:
        raise ValidationError("no eps samples")
    if check_domain:
        gam = obj.gamma if isinstance(obj, NewtonState) else gamma_N(m, max(N, 1))
        for e in eps_list:
            if not (0 < e <= gam * (1 + 1e-12)):
                raise ValidationError(f"eps = {e:g} outside (0, gamma = {gam:.6g}]")
    if theta_samples is None:
        theta_samples = np.arange(64) / 64.0
    th = p.real(np.asarray(theta_samples, dtype=np.float64))
    thT = th + m.omega
    Xv = [c.eval(th) for c in X.coeffs]
    XTv = [c.eval(thT) for c in X.coeffs]
    Yv = [c.eval(th) for c in Y.coeffs]
    YTv = [c.eval(thT) for c in Y.coeffs]

    def horner(vals, e):
        acc = vals[-1]
        for v in vals[-2::-1]:
            acc = acc * e + v
        return acc

    res, floor = [], []
    for e in eps_list:
        ep = p.real(str(e))
        x = th + horner(Xv, ep)
        y = horner(Yv, ep)
        x1, y1 = m.apply(x, y, ep, mu.eval(ep))
        tx = thT + horner(XTv, ep)
        ty = horner(YTv, ep)
        r = np.maximum(np.abs(p.to_float(x1 - tx)), np.abs(p.to_float(y1 - ty)))
        mag = np.maximum(np.abs(p.to_float(x1)), np.abs(p.to_float(y1)))
        res.append(float(np.max(r)))
        floor.append(10 * p.eps * float(np.max(mag)))
    res_a = np.array(res)
    floor_a = np.array(floor)
    used = res_a > floor_a
    slope = offset = float("nan")
    if used.sum() >= 2:
        le = np.log(np.array(eps_list)[used])
        lr = np.log(res_a[used])
        slope, offset = (float(v) for v in np.polyfit(le, lr, 1))
    return ResidualReport(np.array(eps_list), res_a, floor_a, used, slope, offset, N)
