"""Strip partition, external addresses and the inverse branches L_s.

Writing E(z) = v1 cosh(z - c), the cut set maps to [-1, 1] plus a half-line
from 1 in direction theta (|theta| <= pi/2) in the u = E/v1 plane.  Its
preimage is the line Re(z - c) = 0 together with curves Gamma_k that start at
c + 2 pi i k and flatten out at height theta + 2 pi k (mirrored on the left).
Strips are the pieces between consecutive curves, so membership reduces to a
closed-form height f0(x) of Gamma_0 above each abscissa.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .errors import (MapOverflow, NotInvertibleHere, OnPartitionBoundary,
                     SymbolOverflow)
from .mapcore import (R_CAP, TWO_PI, CosineMap, F, F_inv_iter, F_iter,
                      PotentialTower, derivative, evaluate, principal_log,
                      safe_log_modulus)

SIDES = ("L", "R")


@dataclass(frozen=True, order=True)
class StripSymbol:
    n: int
    side: str

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be 'L' or 'R', got {self.side!r}")

    def __abs__(self):
        return abs(self.n)

    def __str__(self):
        return f"{self.n}{self.side}"

    def to_json(self):
        return [self.n, self.side]

    @classmethod
    def from_json(cls, obj) -> StripSymbol:
        n, side = obj
        return cls(int(n), str(side))

    @classmethod
    def parse(cls, text: str) -> StripSymbol:
        text = text.strip()
        return cls(int(text[:-1]), text[-1])


# ---------------------------------------------------------------- addresses


class ExternalAddress:
    """Lazily evaluated symbol sequence s_1 s_2 ... (1-indexed)."""

    kind = "abstract"

    def __init__(self):
        self._cache: dict[int, StripSymbol] = {}

    def _symbol(self, k: int) -> StripSymbol:
        raise NotImplementedError

    def symbol_at(self, k: int) -> StripSymbol:
        if k < 1:
            raise IndexError("symbols are indexed from 1")
        try:
            return self._cache[k]
        except KeyError:
            s = self._symbol(k)
            self._cache[k] = s  # idempotent fill
            return s

    def side_at(self, k: int) -> str:
        return self.symbol_at(k).side

    def log_abs_n(self, k: int) -> float:
        """ln|n| of the k-th symbol (-inf for n = 0)."""
        n = abs(self.symbol_at(k).n)
        return math.log(n) if n else -math.inf

    def prefix(self, length: int) -> list[StripSymbol]:
        return [self.symbol_at(k) for k in range(1, length + 1)]

    def shift(self, times: int = 1) -> ExternalAddress:
        addr = self
        for _ in range(times):
            addr = addr._shift1()
        return addr

    def _shift1(self) -> ExternalAddress:
        raise NotImplementedError

    def minimal_potential(self) -> float:
        raise NotImplementedError

    def is_fast(self) -> bool:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({json.dumps(self.to_json())})"


class Periodic(ExternalAddress):
    kind = "periodic"

    def __init__(self, pre: Sequence[StripSymbol], per: Sequence[StripSymbol]):
        super().__init__()
        if not per:
            raise ValueError("period must be nonempty")
        self.pre = tuple(pre)
        self.per = tuple(per)

    def _symbol(self, k):
        if k <= len(self.pre):
            return self.pre[k - 1]
        return self.per[(k - 1 - len(self.pre)) % len(self.per)]

    def _shift1(self):
        if self.pre:
            return Periodic(self.pre[1:], self.per)
        return Periodic((), self.per[1:] + self.per[:1])

    def minimal_potential(self):
        return 0.0

    def is_fast(self):
        return False

    def to_json(self):
        return {"kind": "periodic", "pre": [s.to_json() for s in self.pre],
                "per": [s.to_json() for s in self.per]}


class FastParametric(ExternalAddress):
    """|s_k| = round(scale * F^{k-1}(x) / 2 pi), sides cycled from ``sides``."""

    kind = "fast"

    def __init__(self, x: float, sides: Sequence[str] = ("R",), scale: float = 1.0):
        super().__init__()
        if not x > 0 or not scale > 0:
            raise ValueError("x and scale must be positive")
        if not sides or any(s not in SIDES for s in sides):
            raise ValueError("sides must be a nonempty list of 'L'/'R'")
        self.x = float(x)
        self.sides = tuple(sides)
        self.scale = float(scale)

    def _symbol(self, k):
        v = self.scale * F_iter(self.x, k - 1) / TWO_PI
        if not math.isfinite(v):
            raise SymbolOverflow(f"symbol {k} of {self!r} is not representable")
        return StripSymbol(int(round(v)), self.sides[(k - 1) % len(self.sides)])

    def side_at(self, k):
        return self.sides[(k - 1) % len(self.sides)]

    def log_abs_n(self, k):
        try:
            return super().log_abs_n(k)
        except SymbolOverflow:
            return math.log(self.scale / TWO_PI) + safe_log_modulus(PotentialTower(k - 1, self.x))

    def _shift1(self):
        return FastParametric(F(self.x), self.sides[1:] + self.sides[:1], self.scale)

    def minimal_potential(self):
        return self.x

    def is_fast(self):
        return True

    def to_json(self):
        return {"kind": "fast", "x": self.x, "scale": self.scale, "sides": list(self.sides)}


class ExplicitPrefix(ExternalAddress):
    kind = "prefix"

    def __init__(self, symbols: Sequence[StripSymbol], pad: StripSymbol):
        super().__init__()
        self.symbols = tuple(symbols)
        self.pad = pad

    def _symbol(self, k):
        return self.symbols[k - 1] if k <= len(self.symbols) else self.pad

    def _shift1(self):
        return ExplicitPrefix(self.symbols[1:], self.pad)

    def minimal_potential(self):
        return 0.0

    def is_fast(self):
        return False

    def to_json(self):
        return {"kind": "prefix", "symbols": [s.to_json() for s in self.symbols],
                "pad": self.pad.to_json()}


def address_from_json(obj) -> ExternalAddress:
    if isinstance(obj, str):
        obj = json.loads(obj)
    kind = obj.get("kind")
    if kind == "periodic":
        return Periodic([StripSymbol.from_json(s) for s in obj.get("pre", [])],
                        [StripSymbol.from_json(s) for s in obj["per"]])
    if kind == "fast":
        return FastParametric(obj["x"], obj.get("sides", ["R"]), obj.get("scale", 1.0))
    if kind == "prefix":
        return ExplicitPrefix([StripSymbol.from_json(s) for s in obj["symbols"]],
                              StripSymbol.from_json(obj["pad"]))
    raise ValueError(f"unknown address kind {kind!r}")


def minimal_potential(addr: ExternalAddress) -> float:
    return addr.minimal_potential()


def is_fast(addr: ExternalAddress) -> bool:
    return addr.is_fast()


def _checked_indices(addr: ExternalAddress) -> int:
    if isinstance(addr, Periodic):
        return len(addr.pre) + len(addr.per)
    if isinstance(addr, ExplicitPrefix):
        return len(addr.symbols) + 1
    return 64


def tail_threshold(m: CosineMap, addr: ExternalAddress) -> float:
    """Least T >= T_ab with 4 pi |s_{n+1}| < F^n(T) for every n >= 1."""
    worst = -math.inf
    prev = None
    for k in range(2, _checked_indices(addr) + 2):
        try:
            n = abs(addr.symbol_at(k).n)
            th = F_inv_iter(2 * TWO_PI * n, k - 1) if n else -math.inf
        except SymbolOverflow:
            lg = addr.log_abs_n(k)
            if math.isinf(lg):
                break
            # log1p(y) == ln y at this size
            th = F_inv_iter(math.log(2 * TWO_PI) + lg, k - 2)
        worst = max(worst, th)
        if isinstance(addr, FastParametric):
            # thresholds converge to x; later ones cannot bind
            if prev is not None and abs(th - prev) <= 1e-15 * max(1.0, th):
                break
            prev = th
    if worst < m.T_ab:
        return m.T_ab
    return worst * (1 + 1e-12) + 1e-300


# ---------------------------------------------------------------- partition


class Membership(NamedTuple):
    inside: bool
    distance: float


@dataclass(frozen=True)
class PartitionConfig:
    map: CosineMap
    boundary_tol: float = 1e-12
    orientation: str = field(init=False)
    theta: float = field(init=False, repr=False)
    _k0: int = field(init=False, repr=False)
    _j0: int = field(init=False, repr=False)

    def __post_init__(self):
        if self.boundary_tol < 0:
            raise ValueError("boundary_tol must be >= 0")
        m = self.map
        orient = m.orientation
        half = math.pi / 2 if orient == "up" else -math.pi / 2
        theta = half - cmath.phase(m.v1)
        # keep theta in [-pi/2, pi/2]
        theta = (theta + math.pi) % TWO_PI - math.pi
        object.__setattr__(self, "orientation", orient)
        object.__setattr__(self, "theta", theta)
        c = m.c
        k0 = _raw_k(self, 60.0, -c.imag)
        k1 = _raw_k(self, 60.0, c.imag)
        object.__setattr__(self, "_k0", k0)
        object.__setattr__(self, "_j0", -k1 - 1)

    def tol_at(self, w: complex) -> float:
        return self.boundary_tol * (1 + abs(w))


def make_partition(m: CosineMap, boundary_tol: float = 1e-12) -> PartitionConfig:
    return PartitionConfig(m, boundary_tol)


def _seg_dist(p: complex, a: complex, b: complex) -> float:
    d = b - a
    L2 = d.real * d.real + d.imag * d.imag
    if L2 == 0:
        return abs(p - a)
    s = ((p - a).real * d.real + (p - a).imag * d.imag) / L2
    s = min(1.0, max(0.0, s))
    return abs(p - (a + s * d))


def distance_to_A(cfg: PartitionConfig, w: complex) -> float:
    m = cfg.map
    seg = _seg_dist(w, m.v2, m.v1)
    dx = w.real - m.v1.real
    dy = w.imag - m.v1.imag
    if cfg.orientation == "down":
        dy = -dy
    ray = abs(dx) if dy >= 0 else math.hypot(dx, dy)
    return min(seg, ray)


def in_A(cfg: PartitionConfig, w: complex) -> Membership:
    w = complex(w)
    d = distance_to_A(cfg, w)
    return Membership(d <= cfg.tol_at(w), d)


def acosh_right(u: complex) -> complex:
    """Solution of cosh(zeta) = u with Re(zeta) >= 0."""
    if abs(u) > 1e8:
        return cmath.log(2 * u) - 1 / (4 * u * u)
    return cmath.acosh(u)


def _f0(cfg: PartitionConfig, x: float) -> float:
    """Height of the boundary curve Gamma_0 above abscissa x > 0."""
    theta = cfg.theta
    if x > 350.0:
        return theta
    C = 2 * math.cosh(x)
    s = (C - 4 / C) / (2 + 4 * math.cos(theta) / C)
    u = 1 + s * cmath.exp(1j * theta)
    return acosh_right(u).imag


def _raw_k(cfg: PartitionConfig, x: float, y: float) -> int:
    return math.floor((y - _f0(cfg, x)) / TWO_PI)


def _raw_symbol(cfg: PartitionConfig, z: complex) -> StripSymbol:
    zeta = complex(z) - cfg.map.c
    x, y = zeta.real, zeta.imag
    if x > 0:
        return StripSymbol(_raw_k(cfg, x, y) - cfg._k0, "R")
    if x < 0:
        j = -_raw_k(cfg, -x, -y) - 1
        return StripSymbol(j - cfg._j0, "L")
    raise OnPartitionBoundary(f"{z} lies on the critical line")


def strip_of(cfg: PartitionConfig, z: complex) -> StripSymbol:
    z = complex(z)
    try:
        w = evaluate(cfg.map, z)
    except MapOverflow:
        w = None
    if w is not None:
        mem = in_A(cfg, w)
        if mem.inside:
            raise OnPartitionBoundary(f"E({z}) = {w} is within {mem.distance:.3g} of the cut set")
    return _raw_symbol(cfg, z)


def _place(cfg: PartitionConfig, s: StripSymbol, zeta0: complex) -> complex:
    zeta = zeta0 if s.side == "R" else -zeta0
    z = cfg.map.c + zeta
    for _ in range(4):
        cur = _raw_symbol(cfg, z)
        if cur.side != s.side:
            raise NotInvertibleHere(f"preimage fell on side {cur.side}, wanted {s}")
        if cur.n == s.n:
            return z
        z += 1j * TWO_PI * (s.n - cur.n)
        if abs(z.imag) > 2.0 ** 48:
            # strip index no longer resolvable in floating point; trust the shift
            return z
    raise NotInvertibleHere(f"could not place preimage in strip {s}")


def preimage_zeta(cfg: PartitionConfig, w: complex) -> complex:
    """zeta0 with Re >= 0 such that all preimages of w are c +/- zeta0 + 2 pi i k."""
    return acosh_right(complex(w) / cfg.map.v1)


def _polish(m: CosineMap, z: complex, w: complex) -> tuple[complex, float]:
    best, best_res = z, abs(evaluate(m, z) - w)
    for _ in range(3):
        d = derivative(m, best)
        if abs(d) < 1e-8:
            break
        cand = best - (evaluate(m, best) - w) / d
        try:
            res = abs(evaluate(m, cand) - w)
        except MapOverflow:
            break
        if res >= best_res:
            break
        best, best_res = cand, res
    return best, best_res


def inverse_branch(cfg: PartitionConfig, s: StripSymbol, w: complex) -> complex:
    """L_s(w): the preimage of w inside strip s."""
    w = complex(w)
    mem = in_A(cfg, w)
    if mem.inside:
        raise OnPartitionBoundary(f"{w} is on the cut set")
    z = _place(cfg, s, preimage_zeta(cfg, w))
    if abs(z.real) <= R_CAP:
        z2, res = _polish(cfg.map, z, w)
        if res > 1e-10 * (1 + abs(w)):
            raise NotInvertibleHere(f"residual {res:.3g} too large at w={w}")
        if z2 != z and _raw_symbol(cfg, z2) == s:
            z = z2
    return z


def inverse_branch_log(cfg: PartitionConfig, s: StripSymbol, log_w: complex) -> complex:
    """L_s(w) for |w| beyond floating range, given log w = ln|w| + i arg w."""
    zeta0 = math.log(2) + complex(log_w) - principal_log(cfg.map.v1)
    return _place(cfg, s, zeta0)


class OrbitAddress(NamedTuple):
    symbols: list
    status: str  # "Completed" | "HitBoundary" | "Overflowed"
    k: int
    last: complex


def address_of_orbit(cfg: PartitionConfig, z: complex, k_max: int) -> OrbitAddress:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    z = complex(z)
    symbols: list[StripSymbol] = []
    for _ in range(k_max):
        try:
            w = evaluate(cfg.map, z)
        except MapOverflow:
            symbols.append(_raw_symbol(cfg, z))
            return OrbitAddress(symbols, "Overflowed", len(symbols), z)
        if in_A(cfg, w).inside:
            return OrbitAddress(symbols, "HitBoundary", len(symbols), z)
        symbols.append(_raw_symbol(cfg, z))
        z = w
    return OrbitAddress(symbols, "Completed", len(symbols), z)


def certified_prefix(cfg: PartitionConfig, z: complex, err0: float = 0.0, k_max: int = 24,
                     max_err: float = 0.1) -> list[StripSymbol]:
    """Strip symbols of the orbit of z while the propagated rounding error stays below max_err.

    The error of z_{k+1} is bounded by |E'(z_k)| times that of z_k plus one ulp-scale term.
    """
    z = complex(z)
    err = err0 + 4e-16 * (1 + abs(z))
    out: list[StripSymbol] = []
    for _ in range(k_max):
        if err > max_err:
            break
        try:
            w = evaluate(cfg.map, z)
            d = derivative(cfg.map, z)
        except MapOverflow:
            out.append(_raw_symbol(cfg, z))
            break
        if in_A(cfg, w).inside:
            break
        out.append(_raw_symbol(cfg, z))
        err = abs(d) * err + 4e-16 * (1 + abs(w))
        z = w
    return out
