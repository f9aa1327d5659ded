"""Classification of escaping points: external address prefix and potential."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .errors import MapOverflow, NonCauchy
from .fmt import fnum
from .mapcore import TWO_PI, CosineMap, F_inv_iter, derivative, evaluate
from .symbolic import (ExternalAddress, PartitionConfig, StripSymbol, _raw_symbol,
                       in_A, make_partition)

ON_RAY = "OnRay"
RAY_ENDPOINT = "RayEndpoint"
NOT_ESCAPED = "NotEscapedWithinBudget"
AMBIGUOUS = "BoundaryAmbiguous"
CORE = "EnteredCoreRegion"

# Largest propagated rounding error at which a strip symbol is still trusted.
_CERT_ERR = 0.1
_ULP = 4e-16


@dataclass(frozen=True)
class ClassifierConfig:
    map: CosineMap
    R_escape: float
    R_h_2pi: float
    k_max: int
    t_tol: float
    partition: PartitionConfig = field(repr=False, compare=False)


def escape_radius(m: CosineMap) -> float:
    second = math.log(2 * (2 + 3 * math.pi) / (m.K * (1 - 3 / math.e ** 2)))
    return max(m.R_h(3 * math.pi), second)


def make_classifier(m: CosineMap, k_max: int = 24, t_tol: float = 1e-9) -> ClassifierConfig:
    if k_max < 8:
        raise ValueError("k_max must be >= 8")
    if not t_tol > 0:
        raise ValueError("t_tol must be positive")
    return ClassifierConfig(m, escape_radius(m), m.R_h(2 * math.pi), k_max, t_tol,
                            make_partition(m))


@dataclass
class ClassificationResult:
    verdict: str
    prefix: list = field(default_factory=list)
    t_hat: float = math.nan
    k: int | None = None
    t_estimates: list = field(default_factory=list)
    residual: float = math.nan

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "prefix": [s.to_json() for s in self.prefix],
                "t_hat": self.t_hat, "k": self.k, "t_estimates": list(self.t_estimates),
                "residual": self.residual}


@dataclass
class _Orbit:
    points: list          # z_1, z_2, ... (representable)
    errors: list          # propagated absolute error bound per point
    symbols: list         # certified strip symbols
    ambiguous: bool
    overflowed: bool
    log_next: tuple | None  # (ln|Re z_{K+1}|, side) one level past overflow


def _forward(cfg: ClassifierConfig, z: complex) -> _Orbit:
    m, part = cfg.map, cfg.partition
    z = complex(z)
    pts, errs, syms = [z], [_ULP * (1 + abs(z))], []
    certified = True
    for _ in range(cfg.k_max):
        z, err = pts[-1], errs[-1]
        try:
            w = evaluate(m, z)
            d = derivative(m, z)
        except MapOverflow as exc:
            if certified and err < _CERT_ERR:
                syms.append(_raw_symbol(part, z))
            return _Orbit(pts, errs, syms, False, True, _log_level(m, z, err, exc.sign))
        if in_A(part, w).inside:
            return _Orbit(pts, errs, syms, True, False, None)
        if certified and err < _CERT_ERR:
            syms.append(_raw_symbol(part, z))
        else:
            certified = False
        pts.append(w)
        errs.append(abs(d) * err + _ULP * (1 + abs(w)))
    return _Orbit(pts, errs, syms, False, False, None)


def _log_level(m: CosineMap, z: complex, err: float, sign: int):
    """ln|Re E(z)| for |Re z| beyond range, when Im z is trustworthy."""
    if err > 0.01:
        return None
    # the dominant exponential is a e^z on the right, b e^{-z} on the left
    lw = (m.alpha + z) if sign > 0 else (m.beta - z)
    c = math.cos(lw.imag)
    if c == 0:
        return None
    side = "R" if c > 0 else "L"
    return lw.real + math.log(abs(c)), side


def _estimate(m: CosineMap, re_abs: float, side: str, k: int) -> float:
    corr = m.alpha.real if side == "R" else m.beta.real
    return F_inv_iter(max(re_abs + corr, 0.0), k - 1)


def _estimates(cfg: ClassifierConfig, orb: _Orbit, k0: int) -> list[float]:
    m = cfg.map
    out = []
    for k in range(k0, len(orb.points) + 1):
        z = orb.points[k - 1]
        out.append(_estimate(m, abs(z.real), "R" if z.real > 0 else "L", k))
    if orb.log_next is not None:
        ln_re, _ = orb.log_next
        k = len(orb.points) + 1
        # F_inv(X) = log1p(X) ~ ln X once X is beyond range; the O(1) correction is negligible
        out.append(F_inv_iter(ln_re, k - 2))
    return out


def potential_of(cfg: ClassifierConfig, z: complex, k0: int = 1):
    """Potential estimate t_hat and residual |t_last - t_prev| from the forward orbit."""
    orb = _forward(cfg, z)
    est = _estimates(cfg, orb, k0)
    if len(est) < 2:
        raise NonCauchy("fewer than two potential estimates")
    residual = abs(est[-1] - est[-2])
    if residual > cfg.t_tol:
        raise NonCauchy(f"potential estimates differ by {residual:.3g}")
    return est[-1], residual


def _fast_template(prefix: list[StripSymbol]) -> float | None:
    """x with |s_k| ~ F^{k-1}(x)/(2 pi), if the prefix is consistent with such growth."""
    xs = [F_inv_iter(TWO_PI * abs(s.n), k - 1)
          for k, s in enumerate(prefix, start=1) if k >= 2 and s.n]
    if len(xs) < 2 or abs(xs[-1] - xs[-2]) > 1e-3 * max(1.0, xs[-1]) or xs[-1] <= 1e-3:
        return None
    return xs[-1]


def classify(cfg: ClassifierConfig, z: complex, addr: ExternalAddress | None = None
             ) -> ClassificationResult:
    orb = _forward(cfg, z)
    if orb.ambiguous:
        return ClassificationResult(AMBIGUOUS, orb.symbols)
    inner, outer = cfg.R_escape, cfg.R_escape + 2
    # k0: start of the final stretch outside Y_{R_escape+2}
    k0, exceeded, reentered = None, False, None
    for k, p in enumerate(orb.points, start=1):
        r = abs(p.real)
        if r >= outer:
            if k0 is None:
                k0 = k
            exceeded = True
        else:
            k0 = None
            if exceeded and r < inner and reentered is None:
                reentered = k
    escaped = k0 is not None and (orb.overflowed or len(orb.points) - k0 >= 3)
    if not escaped:
        if reentered is not None:
            return ClassificationResult(CORE, orb.symbols, k=reentered)
        return ClassificationResult(NOT_ESCAPED, orb.symbols)
    est = _estimates(cfg, orb, k0)
    if len(est) < 2:
        return ClassificationResult(NOT_ESCAPED, orb.symbols, t_estimates=est)
    residual = abs(est[-1] - est[-2])
    if residual > cfg.t_tol:
        return ClassificationResult(NOT_ESCAPED, orb.symbols, t_estimates=est, residual=residual)
    t_hat = est[-1]
    if addr is not None:
        t_s = addr.minimal_potential() if addr.is_fast() else None
    else:
        t_s = _fast_template(orb.symbols)
    if t_s is not None and abs(t_hat - t_s) <= cfg.t_tol:
        return ClassificationResult(RAY_ENDPOINT, orb.symbols, t_hat, None, est, residual)
    return ClassificationResult(ON_RAY, orb.symbols, t_hat, None, est, residual)


def format_prefix(prefix: list[StripSymbol]) -> str:
    return ";".join(str(s) for s in prefix)


def classify_csv(cfg: ClassifierConfig, text: str, provenance: str | None = None) -> str:
    """Batch mode: rows ``re,im`` in, ``re,im,verdict,t_hat,residual,prefix`` out."""
    out = io.StringIO()
    if provenance:
        out.write(f"# {provenance}\n")
    out.write("re,im,verdict,t_hat,residual,prefix\n")
    for row in csv.reader(line for line in io.StringIO(text) if not line.startswith("#")):
        if not row or not row[0].strip():
            continue
        try:
            re_, im_ = float(row[0]), float(row[1])
        except ValueError:
            continue  # header
        res = classify(cfg, complex(re_, im_))
        verdict = res.verdict if res.k is None else f"{res.verdict}({res.k})"
        out.write(",".join([fnum(re_), fnum(im_), verdict, fnum(res.t_hat),
                            fnum(res.residual), format_prefix(res.prefix)]) + "\n")
    return out.getvalue()
