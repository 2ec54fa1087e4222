"""Scalar precision backends.

Every array of Fourier amplitudes carries one of these backends.  Three are
provided:

``double``
    numpy complex128 / float64 (the default).
``extended``
    numpy clongdouble / longdouble (x87 80-bit on most Linux builds).
``mpNN``
    mpmath numbers with NN decimal digits, stored in numpy object arrays.
    Each backend owns a private mpmath context so the global ``mpmath.mp``
    precision is never touched.

Only the handful of primitives needed by the rest of the package live here:
array construction, pi, the periodic functions sin(pi x), cos(pi x) and
exp(2 pi i x), exp/log, real/imag extraction and exact decimal formatting.
"""

from __future__ import annotations

from decimal import Decimal
from functools import lru_cache
from typing import Any

import mpmath
import numpy as np

from .errors import ValidationError


class Precision:
    """Common interface; see the module docstring."""

    name: str
    digits: int

    def __repr__(self) -> str:
        return f"Precision({self.name!r})"

    def __reduce__(self):
        return (get_precision, (self.name,))


class _NumpyPrecision(Precision):
    def __init__(self, name: str, rdtype, cdtype):
        self.name = name
        self.rdtype = np.dtype(rdtype)
        self.cdtype = np.dtype(cdtype)
        self.eps = float(np.finfo(self.rdtype).eps)
        self.digits = int(np.finfo(self.rdtype).precision)
        self.pi = np.arccos(self.rdtype.type(-1))
        self.zero = self.rdtype.type(0)
        self.one = self.rdtype.type(1)

    def czeros(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=self.cdtype)

    def rzeros(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=self.rdtype)

    def carray(self, values) -> np.ndarray:
        return np.asarray(values, dtype=self.cdtype)

    def rarray(self, values) -> np.ndarray:
        vals = [self.real(v) for v in values]
        return np.asarray(vals, dtype=self.rdtype)

    def real(self, x: Any):
        if isinstance(x, (str, Decimal)):
            return self.rdtype.type(str(x))
        if isinstance(x, (np.ndarray,)):
            return x.astype(self.rdtype)
        return self.rdtype.type(x)

    def cplx(self, re: Any, im: Any = 0):
        return self.cdtype.type(complex(0)) + self.real(re) + 1j * self.real(im)

    def sinpi(self, x):
        return np.sin(self.pi * np.asarray(x, dtype=self.rdtype))

    def cospi(self, x):
        return np.cos(self.pi * np.asarray(x, dtype=self.rdtype))

    def cis(self, x):
        """exp(2 pi i x), with x reduced mod 1 before the trig calls."""
        x = np.asarray(x)
        if np.iscomplexobj(x):
            return np.exp(2j * self.pi * x.astype(self.cdtype))
        x = x.astype(self.rdtype)
        x = x - np.round(x)
        t = 2 * self.pi * x
        return np.cos(t) + 1j * np.sin(t)

    def exp(self, x):
        return np.exp(np.asarray(x, dtype=self.rdtype))

    def log(self, x):
        return np.log(np.asarray(x, dtype=self.rdtype))

    def re(self, z):
        return np.real(z)

    def im(self, z):
        return np.imag(z)

    def to_float(self, x) -> np.ndarray:
        return np.asarray(x).astype(np.float64)

    def log_float(self, x) -> np.ndarray:
        """Natural log returned as float64 (safe for magnitudes beyond float64 range)."""
        return np.log(np.asarray(x, dtype=self.rdtype)).astype(np.float64)

    def fmt(self, x) -> str:
        x = self.rdtype.type(x)
        if self.rdtype == np.float64:
            return repr(float(x))
        return np.format_float_scientific(x, unique=True)

    def parse(self, s: str):
        return self.rdtype.type(s)


class _MPPrecision(Precision):
    def __init__(self, dps: int):
        self.name = f"mp{dps}"
        self.digits = dps
        self.ctx = ctx = mpmath.MPContext()
        ctx.dps = dps
        self.eps = float(ctx.eps)
        self.pi = +ctx.pi
        self.zero = ctx.mpf(0)
        self.one = ctx.mpf(1)
        self._sinpi = np.frompyfunc(ctx.sinpi, 1, 1)
        self._cospi = np.frompyfunc(ctx.cospi, 1, 1)
        self._cis = np.frompyfunc(self._cis1, 1, 1)
        self._exp = np.frompyfunc(ctx.exp, 1, 1)
        self._log = np.frompyfunc(ctx.log, 1, 1)
        self._re = np.frompyfunc(lambda z: ctx.convert(z).real, 1, 1)
        self._im = np.frompyfunc(lambda z: ctx.convert(z).imag, 1, 1)
        self._mpf = np.frompyfunc(self.real, 1, 1)
        self._mpc = np.frompyfunc(ctx.mpc, 1, 1)

    def _cis1(self, t):
        ctx = self.ctx
        t = ctx.convert(t)
        if isinstance(t, ctx.mpc):
            return ctx.exp(2j * ctx.pi * t)
        return ctx.expjpi(2 * (t - ctx.nint(t)))

    def czeros(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=object)
        z = self.ctx.mpc(0)
        for i in range(n):
            out[i] = z
        return out

    def rzeros(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=object)
        z = self.ctx.mpf(0)
        for i in range(n):
            out[i] = z
        return out

    def carray(self, values) -> np.ndarray:
        vals = np.asarray(values, dtype=object).ravel()
        out = np.empty(len(vals), dtype=object)
        for i, v in enumerate(vals):
            out[i] = self.ctx.mpc(self._scalar(v))
        return out

    def rarray(self, values) -> np.ndarray:
        vals = list(values)
        out = np.empty(len(vals), dtype=object)
        for i, v in enumerate(vals):
            out[i] = self.real(v)
        return out

    def _scalar(self, v):
        if isinstance(v, (np.complexfloating, complex)):
            return complex(v)
        if isinstance(v, np.floating):
            # longdouble values go through their exact decimal form
            return self.ctx.mpf(np.format_float_scientific(v, unique=True))
        if isinstance(v, np.integer):
            return int(v)
        return v

    def real(self, x: Any):
        if isinstance(x, (str, Decimal)):
            return self.ctx.mpf(str(x))
        if isinstance(x, np.ndarray):
            return self._mpf(x)
        return self.ctx.mpf(self._scalar(x))

    def cplx(self, re: Any, im: Any = 0):
        return self.ctx.mpc(self.real(re), self.real(im))

    def sinpi(self, x):
        return self._sinpi(np.asarray(x, dtype=object))

    def cospi(self, x):
        return self._cospi(np.asarray(x, dtype=object))

    def cis(self, x):
        return self._cis(np.asarray(x, dtype=object))

    def exp(self, x):
        return self._exp(np.asarray(x, dtype=object))

    def log(self, x):
        return self._log(np.asarray(x, dtype=object))

    def re(self, z):
        return self._re(np.asarray(z, dtype=object))

    def im(self, z):
        return self._im(np.asarray(z, dtype=object))

    def to_float(self, x) -> np.ndarray:
        return np.asarray(x, dtype=object).astype(np.float64)

    def log_float(self, x) -> np.ndarray:
        return self.log(x).astype(np.float64)

    def fmt(self, x) -> str:
        return self.ctx.nstr(self.ctx.mpf(x), self.digits + 5, strip_zeros=False,
                           min_fixed=1, max_fixed=0)

    def parse(self, s: str):
        return self.ctx.mpf(s)


DOUBLE = _NumpyPrecision("double", np.float64, np.complex128)
EXTENDED = _NumpyPrecision("extended", np.longdouble, np.clongdouble)


@lru_cache(maxsize=None)
def _mp(dps: int) -> _MPPrecision:
    return _MPPrecision(dps)


def get_precision(name: str | Precision) -> Precision:
    """Resolve a backend by name: ``double``, ``extended`` or ``mp<digits>``."""
    if isinstance(name, Precision):
        return name
    if name == "double":
        return DOUBLE
    if name == "extended":
        return EXTENDED
    if isinstance(name, str) and name.startswith("mp") and name[2:].isdigit():
        dps = int(name[2:])
        if dps < 16:
            raise ValidationError(f"mp precision needs at least 16 digits, got {dps}")
        return _mp(dps)
    raise ValidationError(f"unknown precision {name!r}")
