"""Command line: expand, newton, compare, fit, residual.

Configuration is a JSON object (see :class:`RunConfig`); every command also
accepts a few overrides.  Coefficient files are JSON lines: one header object
followed by one object per order holding mu_n and the modes k >= 0 of u_n
(negative modes follow by conjugation).  Analysis tables are CSV with
``#``-prefixed header lines.

Exit codes: 0 success, 1 invalid input, 2 failed numerical invariant.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from decimal import Decimal, localcontext
from pathlib import Path
from typing import Any

import numpy as np

from .diagnostics import _log, coefficient_norms, fit_gevrey, fit_root_growth, residual_scan
from .epsseries import EpsSeries, ScalarSeries
from .errors import InvariantError, ValidationError
from .fourier import Frequency, TrigPoly
from .lindstedt import HullExpansion, MapSpec, direct_expansion, hull_to_embedding
from .newton import NewtonState, iterate_doubling
from .precision import get_precision

FORMAT = "gevrey-tori/coefficients"
CITED_SIGMA = 0.3


@dataclass
class RunConfig:
    """Run parameters; defaults are the golden-mean, alpha = 3, sin potential case."""

    omega: str = "golden"
    tau: float = 1.0
    nu: float | None = None
    K_max: int = 10_000
    alpha: int = 3
    potential: list = field(default_factory=lambda: [[1, "0", "1"]])
    N: int = 32
    N0: int = 4
    h: int = 3
    rho: float = 0.05
    fit_min: int | None = None
    fit_max: int | None = None
    eps_min: float = 1e-3
    eps_max: float = 1e-2
    eps_count: int = 7
    theta_count: int = 64
    precision: str = "double"
    input: str | None = None
    out: str | None = None
    report: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValidationError(f"unknown config keys: {sorted(extra)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def canonical(self) -> dict:
        d = asdict(self)
        d["omega"] = str(d["omega"])
        d["tau"] = float(d["tau"])
        d["rho"] = float(d["rho"])
        d["eps_min"] = float(d["eps_min"])
        d["eps_max"] = float(d["eps_max"])
        d["potential"] = [[int(k), str(a), str(b)] for k, a, b in d["potential"]]
        return d

    def dumps(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, indent=1)

    def validate(self) -> None:
        for name in ("K_max", "alpha", "N", "N0", "h", "eps_count", "theta_count"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValidationError(f"{name} must be an integer")
        if self.alpha < 1:
            raise ValidationError("alpha must be at least 1")
        if self.N < 0 or self.N0 < 1 or self.h < 0:
            raise ValidationError("need N >= 0, N0 >= 1, h >= 0")
        if self.rho < 0:
            raise ValidationError("rho must be nonnegative")
        if not (0 < self.eps_min <= self.eps_max):
            raise ValidationError("need 0 < eps_min <= eps_max")
        if not isinstance(self.potential, list):
            raise ValidationError("potential must be a list of [k, cos, sin]")
        for m in self.potential:
            if len(m) != 3 or int(m[0]) < 0:
                raise ValidationError(f"bad potential mode {m!r}")
        get_precision(self.precision)

    def frequency(self) -> Frequency:
        return Frequency(self.omega, self.tau, self.nu, self.K_max, self.precision)

    def map(self) -> MapSpec:
        f = self.frequency()
        g = TrigPoly.from_modes([(int(k), str(a), str(b)) for k, a, b in self.potential], f.prec)
        return MapSpec(g, self.alpha, f)

    def eps_samples(self) -> np.ndarray:
        if self.eps_count == 1:
            return np.array([self.eps_min])
        return np.logspace(np.log10(self.eps_min), np.log10(self.eps_max), self.eps_count)


# coefficient files -------------------------------------------------------

def _header(m: MapSpec, N: int) -> dict:
    p = m.prec
    f = m.freq
    cos, sin = m.g.to_cos_sin()
    pot = [[k, p.fmt(cos[k]), p.fmt(sin[k])] for k in range(len(cos))
           if cos[k] != 0 or sin[k] != 0]
    return {
        "format": FORMAT,
        "version": 1,
        "omega": f.omega_string(max(40, p.digits + 10)),
        "omega_token": f.token,
        "omega_literal": f.literal,
        "tau": f.tau,
        "nu_estimate": f.nu_estimate,
        "nu": f.nu,
        "K_max": f.K_max,
        "alpha": m.alpha,
        "potential": pot,
        "N": N,
        "precision": p.name,
    }


def dump_coefficients(h: HullExpansion) -> str:
    """Serialise (u_n, mu_n) with a self-describing header; deterministic."""
    m = h.map
    p = m.prec
    out = io.StringIO()
    out.write(json.dumps(_header(m, h.order)) + "\n")
    for n in range(h.order + 1):
        u = h.u[n]
        D = u.degree
        modes = []
        if not u.is_zero():
            re = p.re(u.c[D:])
            im = p.im(u.c[D:])
            modes = [[k, p.fmt(re[k]), p.fmt(im[k])] for k in range(D + 1)]
        out.write(json.dumps({"n": n, "mu": p.fmt(h.mu[n]), "u": modes}) + "\n")
    return out.getvalue()


def write_coefficients(h: HullExpansion, path: str | Path) -> None:
    Path(path).write_text(dump_coefficients(h))


def _parse_lines(text: str) -> tuple[dict, list[dict]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty coefficient file")
    try:
        header = json.loads(lines[0])
        rows = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed coefficient file: {exc}") from exc
    if header.get("format") != FORMAT:
        raise ValidationError("not a coefficient file (format tag missing)")
    if len(rows) != header["N"] + 1 or [r["n"] for r in rows] != list(range(header["N"] + 1)):
        raise ValidationError("coefficient file orders are incomplete or out of sequence")
    return header, rows


def map_from_header(header: dict) -> MapSpec:
    omega = "golden" if header["omega_token"] == "golden" else header["omega_literal"]
    f = Frequency(omega, header["tau"], header.get("nu"), header["K_max"], header["precision"])
    g = TrigPoly.from_modes([(k, a, b) for k, a, b in header["potential"]], f.prec)
    return MapSpec(g, header["alpha"], f)


def parse_coefficients(text: str) -> HullExpansion:
    header, rows = _parse_lines(text)
    m = map_from_header(header)
    p = m.prec
    us, mus = [], []
    for r in rows:
        mus.append(p.parse(r["mu"]))
        modes = r["u"]
        if not modes:
            us.append(TrigPoly.zero(p))
            continue
        D = len(modes) - 1
        c = p.czeros(2 * D + 1)
        for k, re, im in modes:
            v = p.cplx(p.parse(re), p.parse(im))
            c[D + k] = v
            c[D - k] = np.conj(v)
        us.append(TrigPoly(c, p, symmetrize=False))
    return HullExpansion(EpsSeries(us, p), ScalarSeries(mus, p), m)


def read_coefficients(path: str | Path) -> HullExpansion:
    return parse_coefficients(Path(path).read_text())


def _decimal_rows(text: str):
    header, rows = _parse_lines(text)
    out = []
    for r in rows:
        out.append((Decimal(r["mu"]), {k: (Decimal(a), Decimal(b)) for k, a, b in r["u"]}))
    return header, out


def compare_texts(text_a: str, text_b: str) -> list[tuple[int, float, float, float]]:
    """Per order: relative discrepancy of u_n, of mu_n and their max.

    Differences are formed in decimal arithmetic so full precision files
    compare exactly.  Scale is max(||u^B_n||, |mu^B_n|).
    """
    ha, ra = _decimal_rows(text_a)
    hb, rb = _decimal_rows(text_b)
    for key in ("omega", "alpha", "potential"):
        if ha[key] != hb[key]:
            raise ValidationError(f"headers differ in {key!r}: {ha[key]!r} vs {hb[key]!r}")
    rows = []
    with localcontext() as ctx:
        ctx.prec = 80
        for n in range(min(len(ra), len(rb))):
            mua, ua = ra[n]
            mub, ub = rb[n]

            def maj(d):
                return sum(((a * a + b * b).sqrt() * (1 if k == 0 else 2) for k, (a, b) in d.items()),
                           Decimal(0))

            diff = {}
            for k in set(ua) | set(ub):
                a = ua.get(k, (Decimal(0), Decimal(0)))
                b = ub.get(k, (Decimal(0), Decimal(0)))
                diff[k] = (a[0] - b[0], a[1] - b[1])
            scale = max(maj(ub), abs(mub))
            if scale == 0:
                scale = max(maj(ua), abs(mua))
            du = maj(diff)
            dm = abs(mua - mub)
            if scale == 0:
                rel_u = 0.0 if du == 0 else float("inf")
                rel_m = 0.0 if dm == 0 else float("inf")
            else:
                rel_u, rel_m = float(du / scale), float(dm / scale)
            rows.append((n, rel_u, rel_m, max(rel_u, rel_m)))
    return rows


# tables -------------------------------------------------------------------

def _csv(columns: list[str], rows: list, comments: list[str]) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write("# " + ",".join(columns) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# commands -------------------------------------------------------------------

def _source_expansion(cfg: RunConfig) -> HullExpansion:
    if cfg.input:
        return read_coefficients(cfg.input)
    return direct_expansion(cfg.map(), cfg.N)


def cmd_expand(cfg: RunConfig) -> str:
    text = dump_coefficients(direct_expansion(cfg.map(), cfg.N))
    _emit(text, cfg.out)
    return text


SCHEDULE_COLUMNS = ["h", "N_h", "rho_h", "gamma_h", "gamma_ratio", "N_next", "defect_lead",
                    "max_rel_defect", "reducibility_lead", "linear_audit", "normalization",
                    "hnd_cond", "e_h", "d_h", "s_h"]


def schedule_table(state: NewtonState) -> str:
    rows = []
    prev = None
    for r in state.reports:
        ratio = float("nan") if prev is None else r.gamma / prev
        prev = r.gamma
        rows.append([r.h, r.N_in, r.rho, r.gamma, ratio, r.N_out, r.defect_lead, r.max_rel_defect,
                     r.reducibility_lead, r.linear_audit, r.normalization, r.hnd_cond,
                     r.e_norm, r.delta_norm, r.sigma_norm])
    ratio = float("nan") if prev is None else state.gamma / prev
    rows.append([state.h, state.N, state.rho, state.gamma, ratio] + [""] * 10)
    m = state.map
    comments = [f"schedule: rho0={state.rho0!r} tau={m.freq.tau!r} alpha={m.alpha}",
                f"expected gamma ratio 2^(-tau/alpha) = {2.0 ** (-m.freq.tau / m.alpha)!r}"]
    return _csv(SCHEDULE_COLUMNS, rows, comments)


def cmd_newton(cfg: RunConfig) -> tuple[str, str]:
    state = None
    for state in iterate_doubling(cfg.map(), cfg.N0, cfg.h, cfg.rho):
        pass
    text = dump_coefficients(state.hull())
    _emit(text, cfg.out)
    report = schedule_table(state)
    if cfg.report:
        Path(cfg.report).write_text(report)
    elif cfg.out and cfg.out != "-":
        Path(str(cfg.out) + ".schedule.csv").write_text(report)
    else:
        sys.stderr.write(report)
    return text, report


def cmd_compare(path_a: str, path_b: str, out: str | None = None) -> str:
    rows = compare_texts(Path(path_a).read_text(), Path(path_b).read_text())
    worst = max((r[3] for r in rows), default=0.0)
    text = _csv(["n", "rel_u", "rel_mu", "rel_max"], rows,
                [f"compare {path_a} vs {path_b}", f"max relative discrepancy = {worst!r}"])
    _emit(text, out)
    return text


def cmd_fit(cfg: RunConfig) -> str:
    h = _source_expansion(cfg)
    N = h.order
    n_min = cfg.fit_min if cfg.fit_min is not None else N // 4
    n_max = cfg.fit_max if cfg.fit_max is not None else N
    if n_min < 1 or n_max > N or n_min > n_max:
        raise ValidationError(f"fit window {n_min}..{n_max} is empty or outside orders 1..{N}")
    norms = coefficient_norms(hull_to_embedding(h), cfg.rho)
    fit = fit_gevrey(norms, n_min, n_max, h.map)
    root_sigma, _ = fit_root_growth(norms, n_min, n_max)
    rows = [[n, _log(v) if v > 0 else float("-inf")] for n, v in norms if n >= 1]
    comments = [f"sigma = {fit.sigma!r}", f"bound_2tau_over_alpha = {fit.bound!r}",
                f"logR = {fit.logR!r}", f"logC = {fit.logC!r}",
                f"fit_window = {n_min}..{n_max}", f"rms_residual = {fit.residual!r}",
                f"root_fit_sigma = {root_sigma!r}",
                f"rho = {cfg.rho!r}", f"cited_sigma = {CITED_SIGMA!r}"]
    text = _csv(["n", "log_norm_K"], rows, comments)
    _emit(text, cfg.out)
    return text


def cmd_residual(cfg: RunConfig) -> str:
    h = _source_expansion(cfg)
    th = np.arange(cfg.theta_count) / cfg.theta_count
    rep = residual_scan(h, cfg.eps_samples(), th)
    rows = [[e, r, f, u] for e, r, f, u in zip(rep.eps, rep.residual, rep.floor, rep.used)]
    comments = [f"order N = {rep.order}", f"expected slope N+1 = {rep.order + 1}",
                f"slope = {rep.slope!r}", f"offset = {rep.offset!r}",
                f"precision = {h.map.prec.name}"]
    text = _csv(["eps", "residual", "floor", "used"], rows, comments)
    _emit(text, cfg.out)
    return text


# argument parsing ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors are validation errors (exit 1)
        raise ValidationError(f"usage: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gevrey-tori", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--N", type=int)
        sp.add_argument("--N0", type=int)
        sp.add_argument("--h", type=int)
        sp.add_argument("--alpha", type=int)
        sp.add_argument("--omega")
        sp.add_argument("--rho", type=float)
        sp.add_argument("--precision")
        sp.add_argument("--K-max", dest="K_max", type=int)
        sp.add_argument("--input", help="read coefficients from this file")
        sp.add_argument("--out", help="output path (default stdout)")

    for name in ("expand", "newton", "fit", "residual"):
        sp = sub.add_parser(name)
        common(sp)
        if name == "newton":
            sp.add_argument("--report", help="schedule report path")
        if name == "fit":
            sp.add_argument("--fit-min", dest="fit_min", type=int)
            sp.add_argument("--fit-max", dest="fit_max", type=int)
        if name == "residual":
            sp.add_argument("--eps-min", dest="eps_min", type=float)
            sp.add_argument("--eps-max", dest="eps_max", type=float)
            sp.add_argument("--eps-count", dest="eps_count", type=int)
    sp = sub.add_parser("compare")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--out")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    d: dict = {}
    if getattr(args, "config", None):
        try:
            d = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            d[f.name] = v
    return RunConfig.from_dict(d)


def main(argv: list[str] | None = None) -> int:
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        if args.command == "compare":
            cmd_compare(args.file_a, args.file_b, args.out)
            return 0
        cfg = load_config(args)
        {"expand": cmd_expand, "newton": cmd_newton, "fit": cmd_fit,
         "residual": cmd_residual}[args.command](cfg)
        return 0
    except (ValidationError, OSError) as exc:
        sys.stderr.write(json.dumps({"error": "validation", "message": str(exc)}) + "\n")
        return 1
    except InvariantError as exc:
        sys.stderr.write(json.dumps({"error": "invariant", "invariant": exc.invariant,
                                     "message": exc.detail}) + "\n")
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
