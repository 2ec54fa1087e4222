"""Real trigonometric polynomials on the circle and the rotation number.

A :class:`TrigPoly` stores complex exponential amplitudes in a dense centred
array: index ``i`` holds the amplitude of ``exp(2 pi i k theta)`` with
``k = i - degree``.  Reality (``c[-k] == conj(c[k])``) is kept exactly: every
operation whose floating point evaluation could break the symmetry ends with
an explicit symmetrisation.

A :class:`Frequency` holds omega as a high precision ``Decimal`` and caches
``k*omega mod 1`` for ``|k| <= K_max``.  All divisors are built from the
reduced fraction, so that ``2 pi k omega`` never has to be formed for large
``k``.
"""

from __future__ import annotations

from decimal import Decimal, localcontext
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import InvariantError, ValidationError
from .precision import DOUBLE, Precision, get_precision

DROP_TOL = 1e-300

GOLDEN = "golden"


def _golden_decimal(prec: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = prec + 10
        g = (Decimal(5).sqrt() - 1) / 2
    with localcontext() as ctx:
        ctx.prec = prec
        return +g


def _omega_decimal(omega, prec: int) -> tuple[Decimal, str, str]:
    """Return (value, provenance token, literal string)."""
    if isinstance(omega, str) and omega.strip().lower() == GOLDEN:
        val = _golden_decimal(prec)
        return val, GOLDEN, GOLDEN
    if isinstance(omega, float):
        # exact binary value of the float, printed as its shortest repr
        return Decimal(omega), "literal", repr(omega)
    try:
        val = Decimal(str(omega).strip())
    except Exception as exc:  # decimal.InvalidOperation
        raise ValidationError(f"cannot parse omega={omega!r}") from exc
    return val, "literal", str(omega).strip()


@lru_cache(maxsize=32)
def _frac_table(omega_str: str, dprec: int, K_max: int) -> tuple[str, ...]:
    """k*omega reduced to [-1/2, 1/2) for k = 0..K_max, as decimal strings."""
    om = Decimal(omega_str)
    out = []
    with localcontext() as ctx:
        ctx.prec = dprec
        half = Decimal(1) / 2
        for k in range(K_max + 1):
            f = (k * om) % 1
            if f >= half:
                f -= 1
            elif f < -half:
                f += 1
            out.append(str(f))
    return tuple(out)


class Frequency:
    """Rotation number omega with Diophantine data and a divisor cache.

    Parameters
    ----------
    omega : ``"golden"``, decimal string, ``Decimal`` or float.
    tau : Diophantine exponent.
    nu : Diophantine constant.  ``None`` means "use the estimate over the
        cache"; a given value is checked against every cached ``k``.
    K_max : largest ``|k|`` with a cached divisor.
    precision : backend name or object.
    """

    def __init__(self, omega="golden", tau: float = 1.0, nu: float | None = None,
                 K_max: int = 10_000, precision: str | Precision = "double"):
        self.prec = get_precision(precision)
        if K_max < 1:
            raise ValidationError("K_max must be at least 1")
        if not tau > 0:
            raise ValidationError("tau must be positive")
        self.K_max = int(K_max)
        self.tau = float(tau)
        dprec = max(60, self.prec.digits + 30)
        self._dprec = dprec
        val, token, literal = _omega_decimal(omega, dprec)
        if not (0 < val < 1):
            raise ValidationError(f"omega must lie in (0, 1), got {literal}")
        self.omega_dec = val
        self.token = token
        self.literal = literal
        p = self.prec
        self.omega = p.real(val)

        fr = _frac_table(str(val), dprec, self.K_max)
        self.frac = p.rarray(fr)
        if any(Decimal(s) == 0 for s in fr[1:]):
            k0 = next(i for i, s in enumerate(fr) if i > 0 and Decimal(s) == 0)
            raise ValidationError(f"omega={literal} is resonant: exact zero divisor at k={k0}")
        s1 = p.sinpi(self.frac)
        c2 = p.cospi(2 * self.frac)
        s2 = p.sinpi(2 * self.frac)
        # e^{2 pi i k omega}, 1 - e^{2 pi i k omega}, 2(cos 2 pi k omega - 1)
        self._phase = c2 + 1j * s2
        self._std = 2 * s1 * s1 - 1j * s2
        self._sd = -4 * s1 * s1
        absdiv = np.abs(p.to_float(2 * s1))
        ks = np.arange(self.K_max + 1, dtype=np.float64)
        with np.errstate(divide="ignore"):
            self._dio = absdiv[1:] * ks[1:] ** self.tau
        nu_est = float(np.min(self._dio))
        if nu_est <= 0.0:
            raise ValidationError(f"omega={literal} is resonant to working precision")
        self.nu_estimate = nu_est
        if nu is None:
            self.nu = nu_est
        else:
            nu = float(nu)
            if not nu > 0:
                raise ValidationError("nu must be positive")
            if nu_est < nu * (1 - 1e-12):
                k_bad = int(np.argmin(self._dio)) + 1
                raise ValidationError(
                    f"Diophantine bound fails at k={k_bad}: "
                    f"|e^(2 pi i k omega) - 1| |k|^tau = {nu_est:.6g} < nu = {nu:.6g}")
            self.nu = nu

    def __repr__(self) -> str:
        return (f"Frequency(omega={self.literal}, tau={self.tau}, nu={self.nu:.6g}, "
                f"K_max={self.K_max}, precision={self.prec.name!r})")

    def same_as(self, other: "Frequency") -> bool:
        return (self.omega_dec == other.omega_dec and self.prec is other.prec
                and self.tau == other.tau)

    def omega_string(self, digits: int = 40) -> str:
        """Decimal expansion of omega with ``digits`` significant digits."""
        with localcontext() as ctx:
            ctx.prec = digits
            return str(+self.omega_dec)

    def _check_range(self, kmax: int) -> None:
        if kmax > self.K_max:
            raise ValidationError(
                f"divisor cache exhausted: need |k| <= {kmax}, cache has K_max={self.K_max}")

    def diophantine_products(self, K_max: int | None = None) -> np.ndarray:
        """|e^{2 pi i k omega} - 1| |k|^tau for k = 1..K_max (float64)."""
        K = self.K_max if K_max is None else K_max
        self._check_range(K)
        return self._dio[:K]

    def phases(self, ks) -> np.ndarray:
        """e^{2 pi i k omega} for an integer array of wavenumbers (any size)."""
        ks = np.asarray(ks, dtype=np.int64)
        ak = np.abs(ks)
        if ak.size == 0:
            return self.prec.czeros(0)
        if ak.max() <= self.K_max:
            ph = self._phase[ak]
        else:
            ph = self.prec.czeros(ak.size)
            inside = ak <= self.K_max
            ph[inside] = self._phase[ak[inside]]
            extra = sorted(set(int(k) for k in ak[~inside]))
            fr = self._fresh_fracs(extra)
            vals = self.prec.cis(self.prec.rarray(fr))
            lookup = dict(zip(extra, vals))
            for i in np.nonzero(~inside)[0]:
                ph[i] = lookup[int(ak[i])]
        neg = ks < 0
        if np.any(neg):
            ph = ph.copy()
            ph[neg] = np.conj(ph[neg])
        return ph

    def _fresh_fracs(self, ks: Sequence[int]) -> list[str]:
        out = []
        with localcontext() as ctx:
            ctx.prec = self._dprec + 10
            half = Decimal(1) / 2
            for k in ks:
                f = (k * self.omega_dec) % 1
                if f >= half:
                    f -= 1
                out.append(str(f))
        return out

    def standard_divisors(self, kmax: int) -> np.ndarray:
        """1 - e^{2 pi i k omega} for k = -kmax..kmax (centred)."""
        self._check_range(kmax)
        d = self._std[: kmax + 1]
        return np.concatenate([np.conj(d[:0:-1]), d])

    def second_difference_divisors(self, kmax: int) -> np.ndarray:
        """2(cos 2 pi k omega - 1) for k = -kmax..kmax (centred, real)."""
        self._check_range(kmax)
        d = self._sd[: kmax + 1]
        return np.concatenate([d[:0:-1], d])

    def parametric_divisors(self, lam, kmax: int) -> np.ndarray:
        """lambda - e^{2 pi i k omega} for k = -kmax..kmax (centred)."""
        self._check_range(kmax)
        ph = self._phase[: kmax + 1]
        full = np.concatenate([np.conj(ph[:0:-1]), ph])
        return lam - full


def _trim(c: np.ndarray, prec: Precision, tol: float) -> np.ndarray:
    D = (len(c) - 1) // 2
    mag = np.abs(c)
    keep = mag > tol
    if not np.all(keep):
        c = c.copy()
        c[~keep] = prec.czeros(1)[0]
    nz = np.nonzero(keep)[0]
    if nz.size == 0:
        return prec.czeros(1)
    deg = int(max(D - nz[0], nz[-1] - D))
    if deg == D:
        return c
    return c[D - deg: D + deg + 1]


def _symmetrize(c: np.ndarray) -> np.ndarray:
    return (c + np.conj(c[::-1])) / 2


def _pad(c: np.ndarray, D: int, prec: Precision) -> np.ndarray:
    d = (len(c) - 1) // 2
    if d == D:
        return c
    z = prec.czeros(D - d)
    return np.concatenate([z, c, z])


class TrigPoly:
    """Real trigonometric polynomial sum_k c_k exp(2 pi i k theta).

    Values are immutable; arithmetic returns new objects.  Operators ``+``,
    ``-``, ``*`` (with another polynomial or a real scalar) are supported.
    """

    __slots__ = ("c", "prec")

    def __init__(self, c, prec: str | Precision = DOUBLE, *, symmetrize: bool = True,
                 tol: float = DROP_TOL):
        prec = get_precision(prec)
        c = prec.carray(c) if not (isinstance(c, np.ndarray) and _dtype_ok(c, prec)) else c
        if len(c) % 2 != 1:
            raise ValidationError("centred amplitude array must have odd length")
        if symmetrize:
            c = _symmetrize(c)
        self.c = _trim(c, prec, tol)
        self.c.setflags(write=False)
        self.prec = prec

    @classmethod
    def _raw(cls, c: np.ndarray, prec: Precision) -> "TrigPoly":
        """Wrap an already symmetric, trimmed array without checks."""
        obj = cls.__new__(cls)
        c.setflags(write=False)
        obj.c = c
        obj.prec = prec
        return obj

    # constructors ---------------------------------------------------
    @classmethod
    def zero(cls, prec: str | Precision = DOUBLE) -> "TrigPoly":
        prec = get_precision(prec)
        return cls._raw(prec.czeros(1), prec)

    @classmethod
    def constant(cls, value, prec: str | Precision = DOUBLE) -> "TrigPoly":
        prec = get_precision(prec)
        c = prec.czeros(1)
        c[0] = c[0] + prec.real(value)
        return cls(c, prec, symmetrize=False)

    @classmethod
    def from_cos_sin(cls, cos: Sequence = (), sin: Sequence = (),
                     prec: str | Precision = DOUBLE, tol: float = DROP_TOL) -> "TrigPoly":
        """a_0 + sum_{k>=1} a_k cos(2 pi k theta) + b_k sin(2 pi k theta).

        ``cos[k]`` is a_k (``cos[0]`` the constant term); ``sin[k]`` is b_k
        (``sin[0]`` is ignored).
        """
        prec = get_precision(prec)
        D = max(len(cos), len(sin), 1) - 1
        c = prec.czeros(2 * D + 1)
        for k in range(D + 1):
            a = prec.real(cos[k]) if k < len(cos) else prec.zero
            b = prec.real(sin[k]) if (k < len(sin) and k > 0) else prec.zero
            if k == 0:
                c[D] = c[D] + a
            else:
                ck = prec.cplx(a / 2, -b / 2)
                c[D + k] = ck
                c[D - k] = np.conj(ck)
        return cls(c, prec, symmetrize=False, tol=tol)

    @classmethod
    def from_modes(cls, modes: Iterable[tuple[int, object, object]],
                   prec: str | Precision = DOUBLE) -> "TrigPoly":
        """Build from ``(k, cos_amplitude, sin_amplitude)`` triples, k >= 0."""
        modes = list(modes)
        if not modes:
            return cls.zero(prec)
        kmax = max(int(m[0]) for m in modes)
        prec = get_precision(prec)
        cos = [prec.zero] * (kmax + 1)
        sin = [prec.zero] * (kmax + 1)
        for k, a, b in modes:
            k = int(k)
            if k < 0:
                raise ValidationError("mode numbers must be nonnegative")
            cos[k] = cos[k] + prec.real(a)
            sin[k] = sin[k] + prec.real(b)
        return cls.from_cos_sin(cos, sin, prec)

    @classmethod
    def from_amplitudes(cls, amps: dict, prec: str | Precision = DOUBLE) -> "TrigPoly":
        """From ``{k: c_k}`` for k >= 0; negative modes are the conjugates."""
        prec = get_precision(prec)
        D = max(amps) if amps else 0
        c = prec.czeros(2 * D + 1)
        for k, v in amps.items():
            if k < 0:
                raise ValidationError("give nonnegative k only")
            v = prec.carray([v])[0]
            c[D + k] = v
            c[D - k] = np.conj(v)
        return cls(c, prec, symmetrize=(0 in amps))

    # accessors -------------------------------------------------------
    @property
    def degree(self) -> int:
        return (len(self.c) - 1) // 2

    def coeff(self, k: int):
        D = self.degree
        if abs(k) > D:
            return self.prec.czeros(1)[0]
        return self.c[D + k]

    def is_zero(self) -> bool:
        return self.degree == 0 and not (abs(self.c[0]) > 0)

    def is_real(self, rtol: float = 0.0) -> bool:
        diff = np.abs(self.c - np.conj(self.c[::-1]))
        scale = float(self.prec.to_float(np.sum(np.abs(self.c))))
        return float(np.max(self.prec.to_float(diff))) <= rtol * scale

    def to_cos_sin(self) -> tuple[list, list]:
        D = self.degree
        p = self.prec
        cos = [p.re(self.c[D])] + [2 * p.re(self.c[D + k]) for k in range(1, D + 1)]
        sin = [p.zero] + [-2 * p.im(self.c[D + k]) for k in range(1, D + 1)]
        return cos, sin

    def wavenumbers(self) -> np.ndarray:
        D = self.degree
        return np.arange(-D, D + 1)

    # arithmetic ------------------------------------------------------
    def _check(self, other: "TrigPoly") -> None:
        if other.prec is not self.prec:
            raise ValidationError(f"precision mismatch: {self.prec.name} vs {other.prec.name}")

    def __add__(self, other):
        if not isinstance(other, TrigPoly):
            return self + TrigPoly.constant(other, self.prec)
        self._check(other)
        D = max(self.degree, other.degree)
        s = _pad(self.c, D, self.prec) + _pad(other.c, D, self.prec)
        return TrigPoly._raw(_trim(s, self.prec, DROP_TOL), self.prec)

    __radd__ = __add__

    def __neg__(self):
        return TrigPoly._raw(-self.c, self.prec)

    def __sub__(self, other):
        if not isinstance(other, TrigPoly):
            return self + TrigPoly.constant(-self.prec.real(other), self.prec)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TrigPoly):
            self._check(other)
            r = np.convolve(self.c, other.c)
            return TrigPoly._raw(_trim(_symmetrize(r), self.prec, DROP_TOL), self.prec)
        s = self.prec.real(other)
        return TrigPoly._raw(_trim(self.c * s, self.prec, DROP_TOL), self.prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        s = self.prec.real(other)
        return TrigPoly._raw(_trim(self.c / s, self.prec, DROP_TOL), self.prec)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return (self.prec is other.prec and len(self.c) == len(other.c)
                and bool(np.all(self.c == other.c)))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"TrigPoly(degree={self.degree}, precision={self.prec.name!r})"

    def rotate(self, freq: Frequency, s: int = 1) -> "TrigPoly":
        """p(theta + s*omega)."""
        if s == 0 or self.degree == 0:
            return self
        if freq.prec is not self.prec:
            raise ValidationError("frequency and polynomial use different precisions")
        ks = self.wavenumbers() * int(s)
        r = self.c * freq.phases(ks)
        return TrigPoly._raw(_trim(_symmetrize(r), self.prec, DROP_TOL), self.prec)

    def derivative(self) -> "TrigPoly":
        p = self.prec
        f = (2 * p.pi) * p.real(self.wavenumbers().astype(np.float64))
        return TrigPoly._raw(_trim(self.c * (1j * f), p, DROP_TOL), p)

    def mean(self):
        return self.prec.re(self.c[self.degree])

    def mean_free(self) -> "TrigPoly":
        if self.degree == 0:
            return TrigPoly.zero(self.prec)
        c = self.c.copy()
        c[self.degree] = self.prec.czeros(1)[0]
        return TrigPoly._raw(_trim(c, self.prec, DROP_TOL), self.prec)

    def norm(self, rho=0.0):
        """Fourier majorant sum_k |c_k| exp(2 pi |k| rho)."""
        p = self.prec
        a = np.abs(self.c)
        if rho == 0:
            return np.sum(a)
        if rho < 0:
            raise ValidationError("rho must be nonnegative")
        w = p.exp((2 * p.pi * p.real(rho)) * p.real(np.abs(self.wavenumbers()).astype(np.float64)))
        return np.sum(a * w)

    def eval(self, theta, *, rtol: float = 1e-9):
        """Evaluate at real (returns real) or complex theta (returns complex).

        For real arguments the imaginary part of the exponential sum must be
        below ``rtol`` times the majorant; otherwise the reality invariant
        is broken and an error is raised.
        """
        p = self.prec
        th = np.asarray(theta)
        scalar = th.ndim == 0
        th = th.reshape(-1)
        is_complex = np.iscomplexobj(th) or (
            th.dtype == object and any(_is_complex_scalar(x) for x in th))
        if not is_complex:
            th = p.real(th) if th.dtype != object else th
        ks = self.wavenumbers()
        if th.dtype == object:
            arg = np.outer(th, np.array([int(k) for k in ks], dtype=object))
        else:
            arg = np.outer(th, ks)
        vals = p.cis(arg) @ self.c
        if not is_complex:
            re = p.re(vals)
            im = np.abs(p.to_float(p.im(vals)))
            scale = float(p.to_float(np.sum(np.abs(self.c))))
            if im.size and float(np.max(im)) > rtol * scale + 1e-300:
                raise InvariantError("reality", "imaginary part of a real trigonometric "
                                     f"polynomial is {float(np.max(im)):.3g}")
            vals = re
        return vals[0] if scalar else vals


def _is_complex_scalar(x) -> bool:
    return isinstance(x, complex) or type(x).__name__ == "mpc"


def _dtype_ok(c: np.ndarray, prec: Precision) -> bool:
    if prec.name.startswith("mp"):
        return c.dtype == object
    return c.dtype == prec.cdtype


def add(p: TrigPoly, q: TrigPoly) -> TrigPoly:
    return p + q


def mul(p: TrigPoly, q: TrigPoly) -> TrigPoly:
    return p * q


def rotate(p: TrigPoly, freq: Frequency, s: int = 1) -> TrigPoly:
    return p.rotate(freq, s)


def derivative(p: TrigPoly) -> TrigPoly:
    return p.derivative()


def evaluate(p: TrigPoly, theta):
    return p.eval(theta)


def norm_rho(p: TrigPoly, rho=0.0):
    return p.norm(rho)


def mean(p: TrigPoly):
    return p.mean()
