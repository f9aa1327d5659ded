"""The cosine family E(z) = a e^z + b e^{-z}, its constants, and tower arithmetic for F(t) = e^t - 1."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import total_ordering

from .errors import MapOverflow, NegativeInput, TowerUnderflow, ZeroParameter

# Largest |Re z| for which e^{|Re z|} is evaluated directly.
R_CAP = 700.0
TWO_PI = 2.0 * math.pi


def _clean(z) -> complex:
    # drop signed zeros so branch cuts resolve toward +pi
    z = complex(z)
    return complex(z.real + 0.0, z.imag + 0.0)


def principal_log(z: complex) -> complex:
    w = cmath.log(_clean(z))
    if w.imag <= -math.pi:
        w = complex(w.real, math.pi)
    return w


@dataclass(frozen=True)
class CosineMap:
    a: complex
    b: complex
    c: complex
    alpha: complex
    beta: complex
    v1: complex
    v2: complex
    K: float
    K_max: float
    M: float
    T_ab: float

    def __call__(self, z: complex) -> complex:
        return evaluate(self, z)

    @property
    def orientation(self) -> str:
        """Direction of the vertical half-line of the cut set attached at v1."""
        return "up" if self.v1.imag >= self.v2.imag else "down"

    def t_ab_terms(self) -> list[float]:
        a, b = abs(self.a), abs(self.b)
        return [
            math.sqrt(2 * b / a) * (a + b),
            math.sqrt(2 * a / b) * (a + b),
            8 * a * b,
            1.0,
            0.5 * math.log(2 * b / a),
            0.5 * math.log(2 * a / b),
            math.log(4 / a),
            math.log(4 / b),
        ]

    def R_h(self, h: float) -> float:
        """Separation radius for imaginary spread h."""
        a, b = abs(self.a), abs(self.b)
        return max(
            math.log((2 * h + 8 * math.pi) / (a * math.pi)),
            math.log((2 * h + 8 * math.pi) / (b * math.pi)),
            0.5 * math.log(abs(2 * b / a)),
            0.5 * math.log(abs(2 * a / b)),
            a + b,
        )

    def delta(self) -> float:
        """Least delta > 0 with |a| + |b| <= e^delta - (delta + 1)."""
        target = abs(self.a) + abs(self.b)
        g = lambda d: math.expm1(d) - d - target
        lo, hi = 0.0, 1.0
        while g(hi) < 0:
            hi *= 2
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if g(mid) >= 0:
                hi = mid
            else:
                lo = mid
        return hi

    def as_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "c": self.c, "alpha": self.alpha, "beta": self.beta,
            "v1": self.v1, "v2": self.v2, "K": self.K, "K_max": self.K_max, "M": self.M,
            "T_ab": self.T_ab,
        }


def make_map(a, b) -> CosineMap:
    a, b = _clean(a), _clean(b)
    if a == 0 or b == 0:
        raise ZeroParameter("a and b must be nonzero")
    c = 0.5 * principal_log(b / a)
    alpha = principal_log(a)
    beta = principal_log(b)
    v1 = _clean(2 * a * cmath.exp(c))
    K = min(abs(a), abs(b))
    K_max = max(abs(a), abs(b))
    M = max(abs(alpha), abs(beta))
    v2 = _clean(-v1)
    proto = CosineMap(a, b, c, alpha, beta, v1, v2, K, K_max, M, 0.0)
    return CosineMap(a, b, c, alpha, beta, v1, v2, K, K_max, M, _least_T(proto))


def _least_T(m: CosineMap) -> float:
    start = max(m.t_ab_terms()) + m.M + 2
    g = lambda T: math.expm1(T) - T - m.M - 4
    if g(start) >= 0:
        return start
    lo, hi = start, start + 64.0
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def _exp_parts(m: CosineMap, z: complex):
    z = complex(z)
    if abs(z.real) > R_CAP:
        raise MapOverflow(1 if z.real > 0 else -1)
    ez = cmath.exp(z)
    return m.a * ez, m.b / ez


def evaluate(m: CosineMap, z: complex) -> complex:
    p, q = _exp_parts(m, z)
    return p + q


def derivative(m: CosineMap, z: complex) -> complex:
    p, q = _exp_parts(m, z)
    return p - q


def F(t: float) -> float:
    if t < 0:
        raise NegativeInput(f"F needs t >= 0, got {t}")
    try:
        return math.expm1(t)
    except OverflowError:
        return math.inf


def F_inv(y: float) -> float:
    if y < 0:
        raise NegativeInput(f"F_inv needs y >= 0, got {y}")
    return math.log1p(y)


def F_iter(t: float, n: int) -> float:
    """F applied n times (inf once unrepresentable)."""
    for _ in range(n):
        t = F(t)
        if math.isinf(t):
            return t
    return t


def F_inv_iter(y: float, n: int) -> float:
    for _ in range(n):
        y = math.log1p(y)
    return y


@total_ordering
@dataclass(frozen=True, eq=False)
class PotentialTower:
    """F applied ``level`` times to ``base``."""

    level: int
    base: float

    def __post_init__(self):
        if self.level < 0 or self.base < 0:
            raise NegativeInput("tower level and base must be nonnegative")

    def value(self) -> float:
        return F_iter(self.base, self.level)

    def normalized(self) -> PotentialTower:
        """Fold levels into the base while F(base) stays below e^R_CAP."""
        level, base = self.level, self.base
        while level > 0 and base <= R_CAP:
            base = math.expm1(base)
            level -= 1
        return PotentialTower(level, base)

    def _cmp(self, other: PotentialTower) -> int:
        a, b = self, other
        shift = min(a.level, b.level)
        la, lb = a.level - shift, b.level - shift
        x, y = a.base, b.base
        # one side is at level 0 now; pull it down to the other's level
        x = F_inv_iter(x, lb) if la == 0 else x
        y = F_inv_iter(y, la) if lb == 0 else y
        return (x > y) - (x < y)

    def __eq__(self, other):
        if not isinstance(other, PotentialTower):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other):
        if not isinstance(other, PotentialTower):
            return NotImplemented
        return self._cmp(other) < 0

    __hash__ = None


def F_tower(t: PotentialTower, steps: int) -> PotentialTower:
    if steps >= 0:
        return PotentialTower(t.level + steps, t.base)
    level, base = t.level, t.base
    for _ in range(-steps):
        if level > 0:
            level -= 1
        else:
            base = math.log1p(base)
    return PotentialTower(level, base)


def safe_log_modulus(t: PotentialTower) -> float:
    """ln F^m(r) without forming F^m(r)."""
    if t.level == 0:
        if t.base == 0:
            raise TowerUnderflow("log of zero")
        return math.log(t.base)
    u = F_iter(t.base, t.level - 1)
    if u == 0:
        raise TowerUnderflow("F(0) = 0 has no logarithm")
    if math.isinf(u):
        return u
    if u < 1.0:
        return math.log(math.expm1(u))
    return u + math.log1p(-math.exp(-u))
