"""Desk-scale dimension experiment: parabola-confined orbits, box counting, escape sampling."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit
from .mapcore import R_CAP, CosineMap


@dataclass(frozen=True)
class ParabolaParams:
    p: float
    xi: float

    def __post_init__(self):
        if not (self.p > 0 and self.xi > 0):
            raise ValueError("p and xi must be positive")


@dataclass(frozen=True)
class Window:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("empty window")

    @classmethod
    def default_for(cls, params: ParabolaParams) -> Window:
        h = params.xi ** (1 / params.p) + 5
        return cls(params.xi, params.xi + 50, -h, h)

    def as_list(self):
        return [self.re_min, self.re_max, self.im_min, self.im_max]


def in_parabola(params: ParabolaParams, z):
    """|Re z| > xi and |Im z| < |Re z|^{1/p}; works on scalars and arrays."""
    x, y = np.abs(np.real(z)), np.abs(np.imag(z))
    with np.errstate(over="ignore", invalid="ignore"):
        inside = (x > params.xi) & (y < x ** (1 / params.p))
    return bool(inside) if np.ndim(inside) == 0 else inside


def grid(window: Window, nx: int, ny: int) -> np.ndarray:
    """Complex grid of shape (ny, nx); row 0 is the top (largest Im)."""
    xs = np.linspace(window.re_min, window.re_max, nx)
    ys = np.linspace(window.im_max, window.im_min, ny)
    return xs[None, :] + 1j * ys[:, None]


def _step(m: CosineMap, z: np.ndarray, live: np.ndarray):
    """One application of E on live entries; returns (new z, overflow mask)."""
    over = live & (np.abs(z.real) > R_CAP)
    go = live & ~over
    out = z.copy()
    ez = np.exp(z[go])
    out[go] = m.a * ez + m.b / ez
    return out, over


def sample_S(m: CosineMap, params: ParabolaParams, k_horizon: int = 12,
             window: Window | None = None, shape: tuple[int, int] = (2048, 1024)):
    """Grid points whose first k_horizon iterates stay in the parabola.

    Returns (mask of shape (ny, nx), window). Overflow while inside counts as staying.
    """
    window = window or Window.default_for(params)
    nx, ny = shape
    z = grid(window, nx, ny)
    keep = in_parabola(params, z)
    live = keep.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(k_horizon):
            if not live.any():
                break
            z, over = _step(m, z, live)
            live &= ~over  # escaped through the parabola: stays in S
            keep &= ~live | in_parabola(params, z)
            live &= keep
    return keep, window


def mask_points(mask: np.ndarray, window: Window) -> np.ndarray:
    """(N, 2) array of (x, y) coordinates of True cells."""
    ny, nx = mask.shape
    xs = np.linspace(window.re_min, window.re_max, nx)
    ys = np.linspace(window.im_max, window.im_min, ny)
    r, c = np.nonzero(mask)
    return np.column_stack([xs[c], ys[r]])


@dataclass
class BoxCountReport:
    scales: list
    counts: list
    slope: float
    target: float | None = None
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"scales": self.scales, "counts": self.counts, "slope": self.slope,
                "target": self.target, "metadata": self.metadata}


def default_scales(points: np.ndarray) -> list[float]:
    """Dyadic fractions of the extent, from a quarter down to about four sample spacings."""
    pts = np.asarray(points, dtype=float)
    extent = float(np.max(pts.max(axis=0) - pts.min(axis=0)))
    spacing = []
    for col in pts.T:
        u = np.unique(col)
        if len(u) > 1:
            spacing.append(float(np.min(np.diff(u))))
    h = max(spacing) if spacing else extent / 1000
    scales = [extent / 4]
    while scales[-1] / 2 >= 4 * h or len(scales) < 4:
        scales.append(scales[-1] / 2)
    return scales


def box_dimension(points, scales=None, p: float | None = None,
                  metadata: dict | None = None) -> BoxCountReport:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise DegenerateFit("need an (N, 2) point array with N >= 2")
    scales = sorted((float(s) for s in (scales or default_scales(pts))), reverse=True)
    if len(scales) < 2 or scales[-1] <= 0:
        raise DegenerateFit("need at least two positive scales")
    origin = pts.min(axis=0)
    counts = []
    for s in scales:
        # boxes closed on the upper side, so an extent of k*s needs exactly k boxes
        cells = np.maximum(np.ceil((pts - origin) / s) - 1, 0).astype(np.int64)
        counts.append(int(len(np.unique(cells, axis=0))))
    if len(set(counts)) == 1:
        raise DegenerateFit(f"box counts constant ({counts[0]}) across scales")
    slope = float(np.polyfit(np.log(1 / np.array(scales)), np.log(counts), 1)[0])
    meta = {"points": int(len(pts))}
    if p is not None:
        meta["caveat"] = ("target 1 + 1/p holds only up to an O(1/xi) correction; "
                          "the slope describes the sampled grid set, not the limit set")
    meta.update(metadata or {})
    return BoxCountReport(scales, counts, slope, None if p is None else 1 + 1 / p, meta)


def _random_points(window: Window, samples: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.uniform(window.re_min, window.re_max, samples)
    y = rng.uniform(window.im_min, window.im_max, samples)
    return x + 1j * y


def escape_fraction(m: CosineMap, window: Window, samples: int = 10 ** 4, k_budget: int = 40,
                    seed: int = 0) -> float:
    """Fraction of uniform points whose orbit leaves Y_{R+2} for good within k_budget.

    "For good" is certified by reaching |Re| > R_CAP; the last exit from Y_{R+2}
    precedes that, so the orbit has not returned before overflow.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if k_budget <= 0:
        return 0.0
    z = _random_points(window, samples, seed)
    live = np.ones(samples, dtype=bool)
    escaped = np.zeros(samples, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(k_budget):
            z, over = _step(m, z, live)
            live &= ~over
            # the iterate just produced may itself be past the cap
            newly = live & (np.abs(z.real) > R_CAP)
            escaped |= over | newly
            live &= ~newly
            if not live.any():
                break
    return float(escaped.mean())


def escape_time(m: CosineMap, window: Window, shape: tuple[int, int] = (512, 512),
                k_max: int = 40, radius: float = R_CAP) -> np.ndarray:
    """Iterations until |Re| >= radius per pixel (k_max if never), shape (ny, nx)."""
    nx, ny = shape
    z = grid(window, nx, ny)
    live = np.ones(z.shape, dtype=bool)
    times = np.full(z.shape, k_max, dtype=np.int64)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(k_max):
            done = live & (np.abs(z.real) >= radius)
            times[done] = k
            live &= ~done
            if not live.any():
                break
            z, _ = _step(m, z, live)
    return times


def to_gray(times: np.ndarray, k_max: int) -> np.ndarray:
    """Fast escape renders bright; never-escaped renders black."""
    t = np.asarray(times, dtype=float)
    g = np.where(t >= k_max, 0.0, 255.0 * (1.0 - t / max(k_max, 1)))
    return np.clip(np.rint(g), 0, 255).astype(np.uint8)


def write_pgm(path_or_file, image: np.ndarray, comment: str | None = None) -> None:
    img = np.asarray(image, dtype=np.uint8)
    h, w = img.shape
    header = "P5\n"
    if comment:
        header += "".join(f"# {line}\n" for line in comment.splitlines())
    header += f"{w} {h}\n255\n"
    data = header.encode("ascii") + img.tobytes()
    if hasattr(path_or_file, "write"):
        path_or_file.write(data)
    else:
        with open(path_or_file, "wb") as fh:
            fh.write(data)


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        raw = fh.read()
    fields, pos = [], 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        fields.append(raw[pos:end].decode("ascii"))
        pos = end
    pos += 1
    if fields[0] != "P5":
        raise ValueError("not a binary PGM")
    w, h = int(fields[1]), int(fields[2])
    return np.frombuffer(raw[pos:pos + w * h], dtype=np.uint8).reshape(h, w)
