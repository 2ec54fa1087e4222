"""Truncated power series in epsilon with trigonometric or scalar coefficients.

``EpsSeries`` holds ``order + 1`` :class:`TrigPoly` coefficients, ``ScalarSeries``
holds real scalars.  Truncation is structural: a product computed to
``out_order`` simply has no coefficients beyond it.

The composition ``g(theta + u_eps(theta))`` is computed with the per-mode
recursion

    (n+1) S^k_{n+1} = sum_{l=0}^{n} 2 pi i k (l+1) u_{l+1} S^k_{n-l},
    S^k_0 = g_k exp(2 pi i k theta),

run separately for each wavenumber k of g and summed in a fixed order.  The
individual ``S^k`` are complex (not real) polynomials, so they live on raw
centred arrays; only the sum is symmetrised.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InvariantError, ValidationError
from .fourier import DROP_TOL, Frequency, TrigPoly, _symmetrize, _trim
from .precision import DOUBLE, Precision, get_precision


def _acc(buf: np.ndarray, arr: np.ndarray) -> np.ndarray:
    """Add centred ``arr`` into centred ``buf`` (growing ``buf`` if needed)."""
    db = (len(buf) - 1) // 2
    da = (len(arr) - 1) // 2
    if da > db:
        buf, arr = arr.copy(), buf
        db, da = da, db
    buf[db - da: db + da + 1] += arr
    return buf


class ScalarSeries:
    """Truncated series of real scalars: coeffs[n] multiplies eps**n."""

    __slots__ = ("coeffs", "prec")

    def __init__(self, coeffs, prec: str | Precision = DOUBLE):
        prec = get_precision(prec)
        self.prec = prec
        if isinstance(coeffs, np.ndarray) and coeffs.dtype == (object if prec.name.startswith("mp")
                                                                else prec.rdtype):
            arr = coeffs.copy()
        else:
            arr = prec.rarray(list(coeffs))
        if arr.ndim != 1 or len(arr) == 0:
            raise ValidationError("a series needs at least the order-0 coefficient")
        arr.setflags(write=False)
        self.coeffs = arr

    @classmethod
    def zeros(cls, order: int, prec: str | Precision = DOUBLE) -> "ScalarSeries":
        prec = get_precision(prec)
        return cls(prec.rzeros(order + 1), prec)

    @classmethod
    def lam(cls, alpha: int, order: int, prec: str | Precision = DOUBLE) -> "ScalarSeries":
        """lambda(eps) = 1 - eps**alpha truncated at ``order``."""
        prec = get_precision(prec)
        c = prec.rzeros(order + 1)
        c[0] = prec.one
        if alpha <= order:
            c[alpha] = -prec.one
        return cls(c, prec)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self):
        nz = [n for n, v in enumerate(self.coeffs) if v != 0]
        return nz[0] if nz else math.inf

    def __getitem__(self, n: int):
        return self.coeffs[n]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def _check(self, other: "ScalarSeries") -> None:
        if other.prec is not self.prec:
            raise ValidationError("precision mismatch")
        if other.order != self.order:
            raise ValidationError(f"order mismatch: {self.order} vs {other.order}")

    def __add__(self, other: "ScalarSeries") -> "ScalarSeries":
        self._check(other)
        return ScalarSeries(self.coeffs + other.coeffs, self.prec)

    def __sub__(self, other: "ScalarSeries") -> "ScalarSeries":
        self._check(other)
        return ScalarSeries(self.coeffs - other.coeffs, self.prec)

    def __neg__(self) -> "ScalarSeries":
        return ScalarSeries(-self.coeffs, self.prec)

    def scale(self, s) -> "ScalarSeries":
        return ScalarSeries(self.coeffs * self.prec.real(s), self.prec)

    def mul(self, other: "ScalarSeries", out_order: int | None = None) -> "ScalarSeries":
        if other.prec is not self.prec:
            raise ValidationError("precision mismatch")
        out = min(self.order, other.order) if out_order is None else out_order
        r = np.convolve(self.coeffs, other.coeffs)[: out + 1]
        if len(r) < out + 1:
            r = np.concatenate([r, self.prec.rzeros(out + 1 - len(r))])
        return ScalarSeries(r, self.prec)

    def inverse(self, out_order: int | None = None) -> "ScalarSeries":
        out = self.order if out_order is None else out_order
        a = self.extend(out).coeffs
        if a[0] == 0:
            raise InvariantError("series inverse", "leading coefficient is zero")
        b = self.prec.rzeros(out + 1)
        b[0] = self.prec.one / a[0]
        for n in range(1, out + 1):
            s = self.prec.zero
            for j in range(1, n + 1):
                if a[j] != 0:
                    s = s + a[j] * b[n - j]
            b[n] = -b[0] * s
        return ScalarSeries(b, self.prec)

    def truncate(self, order: int) -> "ScalarSeries":
        return ScalarSeries(self.coeffs[: order + 1], self.prec)

    def extend(self, order: int) -> "ScalarSeries":
        if order <= self.order:
            return self.truncate(order)
        pad = self.prec.rzeros(order - self.order)
        return ScalarSeries(np.concatenate([self.coeffs, pad]), self.prec)

    def window(self, a: int, b: int) -> "ScalarSeries":
        _check_window(a, b, self.order)
        c = self.prec.rzeros(self.order + 1)
        c[a + 1: b + 1] = self.coeffs[a + 1: b + 1]
        return ScalarSeries(c, self.prec)

    def eval(self, eps):
        eps = self.prec.real(eps)
        acc = self.prec.zero
        for v in self.coeffs[::-1]:
            acc = acc * eps + v
        return acc

    def as_eps_series(self) -> "EpsSeries":
        return EpsSeries([TrigPoly.constant(v, self.prec) for v in self.coeffs], self.prec)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScalarSeries):
            return NotImplemented
        return (self.prec is other.prec and len(self) == len(other)
                and bool(np.all(self.coeffs == other.coeffs)))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"ScalarSeries(order={self.order}, precision={self.prec.name!r})"


def _check_window(a: int, b: int, order: int) -> None:
    if not (-1 <= a <= b <= order):
        raise ValidationError(f"window ({a}, {b}] not inside 0..{order}")


class EpsSeries:
    """Truncated series sum_n x_n(theta) eps**n with TrigPoly coefficients."""

    __slots__ = ("coeffs", "prec")

    def __init__(self, coeffs: Sequence[TrigPoly], prec: str | Precision | None = None):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise ValidationError("a series needs at least the order-0 coefficient")
        prec = coeffs[0].prec if prec is None else get_precision(prec)
        for c in coeffs:
            if c.prec is not prec:
                raise ValidationError("mixed precisions in one series")
        self.coeffs = coeffs
        self.prec = prec

    @classmethod
    def zeros(cls, order: int, prec: str | Precision = DOUBLE) -> "EpsSeries":
        prec = get_precision(prec)
        z = TrigPoly.zero(prec)
        return cls([z] * (order + 1), prec)

    @classmethod
    def constant(cls, p: TrigPoly, order: int) -> "EpsSeries":
        z = TrigPoly.zero(p.prec)
        return cls([p] + [z] * order, p.prec)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self):
        for n, c in enumerate(self.coeffs):
            if not c.is_zero():
                return n
        return math.inf

    def lead_rel(self, scale: Sequence[float], rtol: float):
        """First order whose majorant exceeds ``rtol * scale[n]`` (inf if none)."""
        for n, c in enumerate(self.coeffs):
            if float(self.prec.to_float(c.norm())) > rtol * scale[n]:
                return n
        return math.inf

    def __getitem__(self, n: int) -> TrigPoly:
        return self.coeffs[n]

    def __len__(self) -> int:
        return len(self.coeffs)

    def __iter__(self):
        return iter(self.coeffs)

    def _check(self, other: "EpsSeries") -> None:
        if other.prec is not self.prec:
            raise ValidationError("precision mismatch")
        if other.order != self.order:
            raise ValidationError(f"order mismatch: {self.order} vs {other.order}")

    def __add__(self, other: "EpsSeries") -> "EpsSeries":
        self._check(other)
        return EpsSeries([a + b for a, b in zip(self.coeffs, other.coeffs)], self.prec)

    def __sub__(self, other: "EpsSeries") -> "EpsSeries":
        self._check(other)
        return EpsSeries([a - b for a, b in zip(self.coeffs, other.coeffs)], self.prec)

    def __neg__(self) -> "EpsSeries":
        return EpsSeries([-a for a in self.coeffs], self.prec)

    def scale(self, s) -> "EpsSeries":
        return EpsSeries([a * s for a in self.coeffs], self.prec)

    def add_scalar_series(self, s: ScalarSeries) -> "EpsSeries":
        """x + s where s is constant in theta."""
        if s.order != self.order:
            raise ValidationError("order mismatch")
        return EpsSeries([a + v for a, v in zip(self.coeffs, s.coeffs)], self.prec)

    def mul(self, other, out_order: int | None = None) -> "EpsSeries":
        """Cauchy product with an EpsSeries, ScalarSeries, TrigPoly or scalar."""
        if isinstance(other, EpsSeries):
            return series_mul(self, other, self.order if out_order is None else out_order)
        out = self.order if out_order is None else out_order
        if isinstance(other, ScalarSeries):
            return _scalar_cauchy(self, other, out)
        x = self.extend(out)
        return EpsSeries([a * other for a in x.coeffs], self.prec)

    def truncate(self, order: int) -> "EpsSeries":
        if order > self.order:
            return self.extend(order)
        return EpsSeries(self.coeffs[: order + 1], self.prec)

    def extend(self, order: int) -> "EpsSeries":
        if order <= self.order:
            return self.truncate(order)
        z = TrigPoly.zero(self.prec)
        return EpsSeries(self.coeffs + (z,) * (order - self.order), self.prec)

    def window(self, a: int, b: int) -> "EpsSeries":
        return window(self, a, b)

    def rotate(self, freq: Frequency, s: int = 1) -> "EpsSeries":
        return EpsSeries([c.rotate(freq, s) for c in self.coeffs], self.prec)

    def derivative(self) -> "EpsSeries":
        return EpsSeries([c.derivative() for c in self.coeffs], self.prec)

    def mean(self) -> ScalarSeries:
        return ScalarSeries([c.mean() for c in self.coeffs], self.prec)

    def mean_free(self) -> "EpsSeries":
        return EpsSeries([c.mean_free() for c in self.coeffs], self.prec)

    def norms(self, rho=0.0) -> list:
        return [c.norm(rho) for c in self.coeffs]

    def degrees(self) -> list[int]:
        return [c.degree for c in self.coeffs]

    def eval(self, eps, theta):
        return eval_series(self, eps, theta)

    def inverse(self, out_order: int | None = None) -> "EpsSeries":
        """1/x by Neumann recursion; needs a theta-constant, nonzero x_0."""
        out = self.order if out_order is None else out_order
        x = self.extend(out)
        x0 = x.coeffs[0]
        if x0.degree != 0 or x0.is_zero():
            raise InvariantError("series inverse",
                                 "leading coefficient must be a nonzero constant")
        inv0 = self.prec.one / x0.mean()
        b = [TrigPoly.constant(inv0, self.prec)]
        for n in range(1, out + 1):
            acc = None
            for j in range(1, n + 1):
                if x.coeffs[j].is_zero() or b[n - j].is_zero():
                    continue
                r = np.convolve(x.coeffs[j].c, b[n - j].c)
                acc = r.copy() if acc is None else _acc(acc, r)
            if acc is None:
                b.append(TrigPoly.zero(self.prec))
            else:
                b.append(TrigPoly._raw(_trim(_symmetrize(acc * (-inv0)), self.prec, DROP_TOL),
                                       self.prec))
        return EpsSeries(b, self.prec)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EpsSeries):
            return NotImplemented
        return len(self) == len(other) and all(a == b for a, b in zip(self.coeffs, other.coeffs))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"EpsSeries(order={self.order}, precision={self.prec.name!r})"


def series_add(x: EpsSeries, y: EpsSeries) -> EpsSeries:
    return x + y


def series_mul(x: EpsSeries, y: EpsSeries, out_order: int) -> EpsSeries:
    """Cauchy product c_n = sum_j x_j y_{n-j}, n <= out_order."""
    if x.prec is not y.prec:
        raise ValidationError("precision mismatch")
    prec = x.prec
    xs = [None if c.is_zero() else c.c for c in x.coeffs]
    ys = [None if c.is_zero() else c.c for c in y.coeffs]
    out = []
    for n in range(out_order + 1):
        acc = None
        for j in range(max(0, n - y.order), min(n, x.order) + 1):
            a, b = xs[j], ys[n - j]
            if a is None or b is None:
                continue
            r = np.convolve(a, b)
            acc = r if acc is None else _acc(acc, r)
        if acc is None:
            out.append(TrigPoly.zero(prec))
        else:
            out.append(TrigPoly._raw(_trim(_symmetrize(acc), prec, DROP_TOL), prec))
    return EpsSeries(out, prec)


def _scalar_cauchy(x: EpsSeries, s: ScalarSeries, out_order: int) -> EpsSeries:
    prec = x.prec
    out = []
    for n in range(out_order + 1):
        acc = None
        for j in range(max(0, n - s.order), min(n, x.order) + 1):
            v = s.coeffs[n - j]
            if v == 0 or x.coeffs[j].is_zero():
                continue
            r = x.coeffs[j].c * v
            acc = r.copy() if acc is None else _acc(acc, r)
        out.append(TrigPoly.zero(prec) if acc is None
                   else TrigPoly._raw(_trim(acc, prec, DROP_TOL), prec))
    return EpsSeries(out, prec)


def window(x: EpsSeries, a: int, b: int) -> EpsSeries:
    """Keep the coefficients of orders a+1..b (a = -1 means from order 0)."""
    _check_window(a, b, x.order)
    z = TrigPoly.zero(x.prec)
    return EpsSeries([c if a < n <= b else z for n, c in enumerate(x.coeffs)], x.prec)


def eval_series(x: EpsSeries, eps, theta):
    """sum_n x_n(theta) eps**n by Horner's rule in eps."""
    p = x.prec
    eps = p.real(eps) if not isinstance(eps, complex) else eps
    acc = None
    for c in reversed(x.coeffs):
        v = c.eval(theta)
        acc = v if acc is None else acc * eps + v
    return acc


class Composer:
    """Incremental coefficients S_n of g(theta + u_eps(theta)).

    Feed u_1, u_2, ... with :meth:`push`; :meth:`layer` returns S_m once
    u_1..u_m are known.  ``k_order`` fixes the order in which the per-mode
    series are summed ("ascending" or "descending"); both are valid and agree
    to roundoff.
    """

    def __init__(self, g: TrigPoly, k_order: str = "ascending"):
        if k_order not in ("ascending", "descending"):
            raise ValidationError("k_order must be 'ascending' or 'descending'")
        self.g = g
        self.prec = g.prec
        p = self.prec
        ks = [int(k) for k in g.wavenumbers() if abs(g.coeff(int(k))) > 0]
        if k_order == "descending":
            ks = ks[::-1]
        self.ks = ks
        self._u: list[np.ndarray | None] = [None]  # u_0 must vanish
        self._u_deg: list[int] = [0]
        # S^k_n as raw centred arrays
        self._S: dict[int, list[np.ndarray]] = {}
        for k in ks:
            a = p.czeros(2 * abs(k) + 1)
            a[abs(k) + k] = g.coeff(k)
            self._S[k] = [a]
        self._layers: list[TrigPoly] = []
        self._twopi_i = 2j * p.pi

    @property
    def n_u(self) -> int:
        """Index of the last pushed u coefficient."""
        return len(self._u) - 1

    def push(self, u_n: TrigPoly) -> None:
        if u_n.prec is not self.prec:
            raise ValidationError("precision mismatch")
        self._u.append(None if u_n.is_zero() else u_n.c)
        self._u_deg.append(u_n.degree)

    def layer(self, m: int) -> TrigPoly:
        """S_m; requires u_1..u_m to have been pushed (u_m itself is not used)."""
        while len(self._layers) <= m:
            self._advance()
        return self._layers[m]

    def _advance(self) -> None:
        m = len(self._layers)
        if m > 0 and self.n_u < m:
            raise ValidationError(f"S_{m} needs u_1..u_{m}; only {self.n_u} pushed")
        p = self.prec
        if m > 0:
            # S^k_m = (2 pi i k / m) sum_{l=0}^{m-1} (l+1) u_{l+1} S^k_{m-1-l}
            for k in self.ks:
                Sk = self._S[k]
                acc = None
                for l in range(m):
                    u = self._u[l + 1]
                    if u is None:
                        continue
                    r = np.convolve(u, Sk[m - 1 - l])
                    r = r * (l + 1)
                    acc = r if acc is None else _acc(acc, r)
                if acc is None:
                    acc = p.czeros(1)
                else:
                    acc = acc * (self._twopi_i * k / m)
                Sk.append(acc)
        total = None
        for k in self.ks:
            a = self._S[k][m]
            total = a.copy() if total is None else _acc(total, a)
        if total is None:
            self._layers.append(TrigPoly.zero(p))
        else:
            self._layers.append(TrigPoly._raw(_trim(_symmetrize(total), p, DROP_TOL), p))


def compose_perturbation(u: EpsSeries, g: TrigPoly, out_order: int,
                         k_order: str = "ascending") -> EpsSeries:
    """Coefficients of g(theta + u_eps(theta)) up to ``out_order``.

    Requires u_0 = 0.  Coefficients of u beyond its order count as zero.
    """
    if not u.coeffs[0].is_zero():
        raise ValidationError("compose_perturbation needs u_0 = 0")
    if u.prec is not g.prec:
        raise ValidationError("precision mismatch")
    comp = Composer(g, k_order)
    z = TrigPoly.zero(u.prec)
    for n in range(1, out_order + 1):
        comp.push(u.coeffs[n] if n <= u.order else z)
    return EpsSeries([comp.layer(m) for m in range(out_order + 1)], u.prec)


class SeriesMatrix:
    """2x2 matrix of EpsSeries (all of the same order)."""

    __slots__ = ("e",)

    def __init__(self, entries):
        e = tuple(tuple(row) for row in entries)
        if len(e) != 2 or any(len(r) != 2 for r in e):
            raise ValidationError("SeriesMatrix is 2x2")
        self.e = e

    @property
    def order(self) -> int:
        return self.e[0][0].order

    @property
    def prec(self) -> Precision:
        return self.e[0][0].prec

    def __getitem__(self, ij):
        i, j = ij
        return self.e[i][j]

    @classmethod
    def identity(cls, order: int, prec: str | Precision = DOUBLE) -> "SeriesMatrix":
        prec = get_precision(prec)
        one = EpsSeries.constant(TrigPoly.constant(1, prec), order)
        z = EpsSeries.zeros(order, prec)
        return cls([[one, z], [z, one]])

    def matmul(self, other: "SeriesMatrix", out_order: int | None = None) -> "SeriesMatrix":
        out = self.order if out_order is None else out_order
        return SeriesMatrix([[series_mul(self.e[i][0], other.e[0][j], out)
                              + series_mul(self.e[i][1], other.e[1][j], out)
                              for j in range(2)] for i in range(2)])

    def matvec(self, v: Sequence[EpsSeries], out_order: int | None = None) -> tuple:
        out = self.order if out_order is None else out_order
        return tuple(series_mul(self.e[i][0], v[0], out) + series_mul(self.e[i][1], v[1], out)
                     for i in range(2))

    def rotate(self, freq: Frequency, s: int = 1) -> "SeriesMatrix":
        return SeriesMatrix([[x.rotate(freq, s) for x in row] for row in self.e])

    def __sub__(self, other: "SeriesMatrix") -> "SeriesMatrix":
        return SeriesMatrix([[self.e[i][j] - other.e[i][j] for j in range(2)] for i in range(2)])

    def coefficient(self, n: int) -> list[list[TrigPoly]]:
        return [[self.e[i][j].coeffs[n] for j in range(2)] for i in range(2)]

    def leading_constant(self):
        """The order-0 block as a 2x2 array of backend scalars (must be theta-constant)."""
        c0 = self.coefficient(0)
        for row in c0:
            for x in row:
                if x.degree != 0:
                    raise InvariantError("series matrix inverse",
                                         "order-0 block depends on theta")
        return [[x.mean() for x in row] for row in c0]

    def inverse(self, out_order: int | None = None) -> "SeriesMatrix":
        """Inverse by inverting the constant leading block and Neumann recursion:
        B_0 = M_0^{-1},  B_n = -M_0^{-1} sum_{j=1}^{n} M_j B_{n-j}."""
        out = self.order if out_order is None else out_order
        prec = self.prec
        a = self.leading_constant()
        det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
        if det == 0:
            raise InvariantError("series matrix inverse", "order-0 block is singular")
        inv0 = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
        ext = [[self.e[i][j].extend(out) for j in range(2)] for i in range(2)]
        M = [[[None if c.is_zero() else c.c for c in ext[i][j].coeffs] for j in range(2)]
             for i in range(2)]
        B = [[[] for _ in range(2)] for _ in range(2)]
        for i in range(2):
            for j in range(2):
                B[i][j].append(TrigPoly.constant(inv0[i][j], prec).c)
        for n in range(1, out + 1):
            # C = sum_j M_j B_{n-j}
            C = [[None, None], [None, None]]
            for i in range(2):
                for j in range(2):
                    acc = None
                    for jj in range(1, n + 1):
                        for l in range(2):
                            m_ = M[i][l][jj]
                            b_ = B[l][j][n - jj]
                            if m_ is None or b_ is None:
                                continue
                            r = np.convolve(m_, b_)
                            acc = r if acc is None else _acc(acc, r)
                    C[i][j] = acc
            for i in range(2):
                for j in range(2):
                    acc = None
                    for l in range(2):
                        if C[l][j] is None or inv0[i][l] == 0:
                            continue
                        r = C[l][j] * (-inv0[i][l])
                        acc = r if acc is None else _acc(acc, r)
                    if acc is None:
                        B[i][j].append(None)
                    else:
                        t = _trim(_symmetrize(acc), prec, DROP_TOL)
                        B[i][j].append(None if (len(t) == 1 and t[0] == 0) else t)
        z = TrigPoly.zero(prec)
        return SeriesMatrix([[EpsSeries([z if c is None else TrigPoly._raw(c, prec)
                                         for c in B[i][j]], prec)
                              for j in range(2)] for i in range(2)])

    def adjugate_inverse(self, out_order: int | None = None) -> "SeriesMatrix":
        """Inverse via adj(M) / det(M), det inverted as a scalar series.

        An independent route used to cross-check :meth:`inverse`.
        """
        out = self.order if out_order is None else out_order
        e = [[self.e[i][j].extend(out) for j in range(2)] for i in range(2)]
        det = series_mul(e[0][0], e[1][1], out) - series_mul(e[0][1], e[1][0], out)
        dinv = det.inverse(out)
        return SeriesMatrix([[series_mul(e[1][1], dinv, out), series_mul(-e[0][1], dinv, out)],
                             [series_mul(-e[1][0], dinv, out), series_mul(e[0][0], dinv, out)]])
