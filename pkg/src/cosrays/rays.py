"""Ray tails by the inverse-branch telescope, and their extension by pullback."""
from __future__ import annotations

import cmath
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import (BelowTailThreshold, CosRaysError, BranchFailure, ContinuityBreak,
                     MapOverflow, SingularValueOnRay, SymbolOverflow)
from .fmt import dumps, fnum
from .mapcore import (R_CAP, TWO_PI, CosineMap, F, F_iter, PotentialTower,
                      evaluate, safe_log_modulus)
from .symbolic import (ExternalAddress, PartitionConfig, StripSymbol,
                       _polish, certified_prefix, inverse_branch,
                       inverse_branch_log, make_partition, preimage_zeta,
                       tail_threshold)

MAX_DEPTH = 16


@lru_cache(maxsize=64)
def partition_for(m: CosineMap) -> PartitionConfig:
    return make_partition(m)


def C1_constant(m: CosineMap) -> float:
    return 2 * (8 + 6 * math.pi + 2 * m.M) / m.K + 4


def contraction_bound(m: CosineMap, n: int, t: float) -> float:
    """Bound on |g^{n+1}(t) - g^n(t)|."""
    return (8 + 6 * math.pi + 2 * m.M) / (2 ** (n - 1) * m.K) * math.exp(-t)


def asymptotic_centre(m: CosineMap, addr: ExternalAddress, t: float) -> complex:
    s1 = addr.symbol_at(1)
    if s1.side == "R":
        return t - m.alpha + 1j * TWO_PI * s1.n
    return -t + m.beta + 1j * TWO_PI * s1.n


@dataclass
class RaySample:
    t: float
    z: complex
    depth: int
    err_est: float
    via_pullback: bool = False
    # g^1(t), ..., g^depth(t)
    trace: tuple = field(default=(), repr=False)
    # innermost-to-outermost points of the final telescope, outermost last
    levels: tuple = field(default=(), repr=False)


def _innermost(cfg: PartitionConfig, addr: ExternalAddress, t: float, n: int) -> complex:
    """L_{s_n}(+-F^n(t) + 2 pi i s_{n+1})."""
    s_n = addr.symbol_at(n)
    sign = 1.0 if addr.side_at(n + 1) == "R" else -1.0
    inner = F_iter(t, n - 1)
    if inner <= R_CAP:
        w = complex(sign * F(inner), TWO_PI * addr.symbol_at(n + 1).n)
        return inverse_branch(cfg, s_n, w)
    if math.isinf(inner):
        raise OverflowError("telescope depth beyond tower range")
    log_mod = safe_log_modulus(PotentialTower(n, t))
    if math.isinf(log_mod):
        raise OverflowError("telescope depth beyond tower range")
    try:
        nsym = addr.symbol_at(n + 1).n
        lg = math.log(abs(nsym)) if nsym else -math.inf
        sgn = 1.0 if nsym >= 0 else -1.0
    except SymbolOverflow:
        lg, sgn = addr.log_abs_n(n + 1), 1.0
    ratio = sgn * math.exp(math.log(TWO_PI) + lg - log_mod) if lg > -math.inf else 0.0
    log_w = complex(log_mod + 0.5 * math.log1p(ratio * ratio), math.atan2(ratio, sign))
    return inverse_branch_log(cfg, s_n, log_w)


def telescope(cfg: PartitionConfig, addr: ExternalAddress, t: float, n: int):
    """g^n(t) and the chain of intermediate points (innermost first)."""
    z = _innermost(cfg, addr, t, n)
    chain = [z]
    for k in range(n - 1, 0, -1):
        z = inverse_branch(cfg, addr.symbol_at(k), z)
        chain.append(z)
    return z, tuple(chain)


def tail_point(m: CosineMap, addr: ExternalAddress, t: float, tol: float = 1e-12,
               T_s: float | None = None) -> RaySample:
    if T_s is None:
        T_s = tail_threshold(m, addr)
    if t < T_s:
        raise BelowTailThreshold(f"t={t} is below the tail threshold {T_s}")
    cfg = partition_for(m)
    trace: list[complex] = []
    levels: tuple = ()
    err = 0.0
    for n in range(1, MAX_DEPTH + 1):
        try:
            z, levels = telescope(cfg, addr, t, n)
        except OverflowError as exc:
            if trace:
                err = 0.0  # deeper iterates agree to machine precision
                break
            raise BranchFailure(f"telescope failed at depth {n}: {exc}") from exc
        except (ArithmeticError, CosRaysError) as exc:
            raise BranchFailure(f"telescope failed at depth {n}: {exc}") from exc
        trace.append(z)
        if n > 1:
            err = abs(trace[-1] - trace[-2])
            if err < tol:
                break
        if F_iter(t, n - 1) > R_CAP:
            err = 0.0  # deeper iterates agree to machine precision
            break
    return RaySample(t, trace[-1], len(trace), err, False, tuple(trace), levels)


@dataclass
class Ray:
    addr: ExternalAddress
    map: CosineMap
    samples: list
    t_min_reached: float
    C1: float

    @property
    def ts(self):
        return [s.t for s in self.samples]

    @property
    def zs(self):
        return [s.z for s in self.samples]

    def to_csv(self, provenance: str | None = None) -> str:
        out = io.StringIO()
        if provenance:
            out.write(f"# {provenance}\n")
        out.write("t,re,im,depth,err_est,via_pullback\n")
        for s in self.samples:
            out.write(",".join([fnum(s.t), fnum(s.z.real), fnum(s.z.imag), str(s.depth),
                                fnum(s.err_est), "1" if s.via_pullback else "0"]) + "\n")
        return out.getvalue()

    def to_json_obj(self, config: dict | None = None) -> dict:
        obj = {
            "config": config or {},
            "address": self.addr.to_json(),
            "map": {"a": self.map.a, "b": self.map.b},
            "t_min_reached": self.t_min_reached,
            "C1": self.C1,
            "samples": [{"t": s.t, "z": s.z, "depth": s.depth, "err_est": s.err_est,
                         "via_pullback": s.via_pullback} for s in self.samples],
        }
        return obj

    def to_json(self, config: dict | None = None) -> str:
        return dumps(self.to_json_obj(config))


def _check_address(cfg: PartitionConfig, addr: ExternalAddress, sample: RaySample, k_max=24):
    for k, sym in enumerate(certified_prefix(cfg, sample.z, sample.err_est, k_max), start=1):
        try:
            want = addr.symbol_at(k)
        except SymbolOverflow:
            break
        if sym != want:
            raise BranchFailure(
                f"sample t={sample.t}: realized symbol {k} is {sym}, address says {want}")


def sample_tail(m: CosineMap, addr: ExternalAddress, t_lo: float, t_hi: float, count: int,
                tol: float = 1e-12, check_address: bool = True) -> Ray:
    T_s = tail_threshold(m, addr)
    if t_lo < T_s:
        raise BelowTailThreshold(f"t_lo={t_lo} is below T_s={T_s}")
    if not t_hi > t_lo or count < 2:
        raise ValueError("need t_lo < t_hi and count >= 2")
    t_s = addr.minimal_potential()
    lo, hi = t_lo - t_s, t_hi - t_s
    ratio = (hi / lo) ** (1.0 / (count - 1))
    ts = [t_s + lo * ratio ** i for i in range(count)]
    ts[0], ts[-1] = t_lo, t_hi
    cfg = partition_for(m)
    samples = []
    for t in ts:
        s = tail_point(m, addr, t, tol, T_s)
        if check_address:
            _check_address(cfg, addr, s)
        samples.append(s)
    return Ray(addr, m, samples, t_lo, C1_constant(m))


class _Retry(Exception):
    def __init__(self, ambiguous: bool):
        self.ambiguous = ambiguous


def extend_ray(ray: Ray, t_target: float, max_step: float = 0.25, min_step: float = 1e-12,
               max_move: float = 0.5, eps_crit: float | None = None, max_levels: int = 400,
               tol: float = 1e-12, min_sep: float = 1e-9) -> Ray:
    """Continue ``ray`` down to potential ``t_target`` by pulling tails back along E.

    Branches are chosen by nearest preimage to the previous sample's orbit,
    not by strip membership. The descent also stops once a new sample would
    lie within ``min_sep`` of the previous one (the ray has numerically landed).
    """
    m, addr = ray.map, ray.addr
    t_s = addr.minimal_potential()
    t_top = ray.samples[0].t
    if not t_s < t_target < t_top:
        raise ValueError(f"need t_s={t_s} < t_target={t_target} < {t_top}")
    cfg = partition_for(m)
    if eps_crit is None:
        eps_crit = 1e-6 * (1 + abs(m.v1))
    thresholds: dict[int, float] = {}
    shifted: dict[int, ExternalAddress] = {}

    def sh(j):
        if j not in shifted:
            shifted[j] = addr.shift(j)
        return shifted[j]

    def T_at(j):
        if j not in thresholds:
            thresholds[j] = tail_threshold(m, sh(j))
        return thresholds[j]

    def depth_for(t):
        x = t
        for n in range(max_levels + 1):
            if x >= T_at(n):
                return n, x
            x = F(x)
        raise _Retry(False)

    prev_t = t_top
    prev_orbit: dict[int, complex] = {0: ray.samples[0].z}
    prev_pot: dict[int, float] = {0: t_top}

    def reference(j):
        if j not in prev_orbit:
            pot = F_iter(prev_t, j)
            prev_orbit[j] = tail_point(m, sh(j), pot, tol, T_at(j)).z
        return prev_orbit[j]

    def pull(t):
        N, top_t = depth_for(t)
        top = tail_point(m, sh(N), top_t, tol, T_at(N))
        orbit = {N: top.z}
        for j in range(N - 1, -1, -1):
            w = orbit[j + 1]
            if min(abs(w - m.v1), abs(w - m.v2)) < eps_crit:
                raise SingularValueOnRay(
                    f"critical value hit at potential {F_iter(t, j + 1)} of level {j + 1}")
            ref = reference(j)
            zeta0 = preimage_zeta(cfg, w)
            cands = []
            for base in (m.c + zeta0, m.c - zeta0):
                k = round((ref - base).imag / TWO_PI)
                for dk in (-1, 0, 1):
                    z = base + 1j * TWO_PI * (k + dk)
                    cands.append((abs(z - ref), z))
            cands.sort(key=lambda p: p[0])
            (d0, z0), (d1, _) = cands[0], cands[1]
            if d1 < 2 * d0:
                raise _Retry(True)
            if d0 > max_move:
                raise _Retry(False)
            if abs(z0.real) <= R_CAP:
                z0, _ = _polish(m, z0, w)
            orbit[j] = z0
        return orbit, N, top

    new = []
    step = min(max_step, 0.05 * (t_top - t_target) + 1e-3)
    ambiguous_run = False
    while prev_t > t_target:
        t = max(t_target, prev_t - step)
        try:
            orbit, N, top = pull(t)
        except _Retry as r:
            ambiguous_run = ambiguous_run or r.ambiguous
            step *= 0.5
            if step < min_step:
                partial = _merge(ray, new, prev_t)
                if ambiguous_run:
                    raise ContinuityBreak(f"ambiguous preimage below t={prev_t}", partial)
                return partial
            continue
        except SingularValueOnRay as exc:
            exc.ray = _merge(ray, new, prev_t)
            raise
        if abs(orbit[0] - prev_orbit[0]) < min_sep:
            break
        new.append(RaySample(t, orbit[0], N, top.err_est, True))
        prev_t, prev_orbit = t, orbit
        ambiguous_run = False
        step = min(step * 1.5, max_step)
    return _merge(ray, new, prev_t)


def _merge(ray: Ray, new: list, t_min: float) -> Ray:
    return Ray(ray.addr, ray.map, list(reversed(new)) + list(ray.samples), t_min, ray.C1)


@dataclass
class SeparationReport:
    t1: float
    t2: float
    d: list
    checked: list
    violations: list
    hypothesis_ok: bool
    degenerate: bool
    notes: list

    @property
    def ok(self) -> bool:
        return not self.violations


def _point_at(m: CosineMap, addr: ExternalAddress, t: float, ray: Ray | None) -> complex:
    if ray is not None:
        for s in ray.samples:
            if s.t == t:
                return s.z
    return tail_point(m, addr, t).z


def separation_check(ray: Ray, t1: float, t2: float, k_max: int = 8,
                     h: float = 3 * math.pi) -> SeparationReport:
    """Track d_k = Re(E^{k-1} g(t2)) - Re(E^{k-1} g(t1)) and test |d_{k+1}| >= e^{|d_k|}."""
    m, addr = ray.map, ray.addr
    if t1 > t2:
        t1, t2 = t2, t1
    z = _point_at(m, addr, t2, ray)
    w = _point_at(m, addr, t1, ray)
    notes = []
    if t1 == t2:
        return SeparationReport(t1, t2, [0.0], [], [], True, True, ["identical orbits"])
    R = m.R_h(h)
    d, ok_hyp = [], []
    for _ in range(k_max):
        d.append(z.real - w.real)
        hyp = (abs(z.real) > R and abs(w.real) > R and z.real * w.real > 0
               and abs((z - w).imag) < h)
        ok_hyp.append(hyp)
        try:
            z, w = evaluate(m, z), evaluate(m, w)
        except MapOverflow:
            break
    hypothesis_ok = all(ok_hyp) and abs(d[0]) >= 3
    if abs(d[0]) < 3:
        notes.append("HypothesisNotMet: initial real-part gap below 3")
    if not all(ok_hyp):
        notes.append("HypothesisNotMet: orbit left the separation region")
    checked, violations = [], []
    for k in range(len(d) - 1):
        if not (ok_hyp[k] and ok_hyp[k + 1]):
            continue
        checked.append(k + 1)
        if abs(d[k]) > 700:
            continue  # e^{|d_k|} unrepresentable; next gap beyond range
        if abs(d[k + 1]) < math.exp(abs(d[k])):
            violations.append(k + 1)
    return SeparationReport(t1, t2, d, checked, violations, hypothesis_ok, False, notes)
