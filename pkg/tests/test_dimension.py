import math

import numpy as np
import pytest

from cosrays.dimension import (ParabolaParams, Window, box_dimension, escape_fraction,
                               escape_time, in_parabola, mask_points, read_pgm, sample_S,
                               to_gray, write_pgm)
from cosrays.errors import DegenerateFit
from cosrays.mapcore import make_map
from cosrays.rays import tail_point
from cosrays.symbolic import Periodic, StripSymbol

HALF = make_map(0.5, 0.5)


def test_in_parabola_examples():
    P = ParabolaParams(2, 10)
    assert in_parabola(P, 100 + 5j)
    assert not in_parabola(P, 100 + 11j)
    assert not in_parabola(P, 5)
    assert in_parabola(P, -100 + 5j)
    arr = in_parabola(P, np.array([100 + 5j, 100 + 11j]))
    assert arr.tolist() == [True, False]
    with pytest.raises(ValueError):
        ParabolaParams(0, 1)


def test_real_ray_points_in_S():
    ray_pts = [tail_point(HALF, Periodic([], [StripSymbol(0, "R")]), t).z for t in (25, 30, 40)]
    win = Window(20, 50, -1, 1)
    for p in (1, 2, 3):
        P = ParabolaParams(p, 20)
        for z in ray_pts:
            # a one-point window centred on the ray point
            mask, _ = sample_S(HALF, P, 12, Window(z.real, z.real + 1, -1e-9, 1e-9), (2, 3))
            assert mask[1, 0]
    assert win.as_list() == [20, 50, -1, 1]


def test_S_exclusions():
    P = ParabolaParams(2, 20)
    mask, _ = sample_S(HALF, P, 12, Window(0, 19, -5, 5), (64, 32))
    assert not mask.any()
    mask, _ = sample_S(HALF, P, 12, Window(30, 40, 10, 20), (64, 32))
    assert not mask.any()


def test_S_monotone_in_xi_and_p():
    win = Window(20, 40, -6, 6)
    a, _ = sample_S(HALF, ParabolaParams(1, 20), 12, win, (256, 129))
    b, _ = sample_S(HALF, ParabolaParams(1, 25), 12, win, (256, 129))
    c, _ = sample_S(HALF, ParabolaParams(2, 20), 12, win, (256, 129))
    assert not (b & ~a).any()
    assert not (c & ~a).any()
    assert b.sum() < a.sum()


def test_box_counting_controls():
    seg = np.column_stack([np.linspace(0, 1, 20000), np.linspace(0, 0.3, 20000)])
    assert box_dimension(seg).slope == pytest.approx(1.0, abs=0.05)
    g = np.linspace(0, 1, 512)
    sq = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    rep = box_dimension(sq)
    assert rep.slope == pytest.approx(2.0, abs=0.05)
    assert all(a > b for a, b in zip(rep.scales, rep.scales[1:]))
    assert all(a <= b for a, b in zip(rep.counts, rep.counts[1:]))


def test_box_counting_degenerate():
    with pytest.raises(DegenerateFit):
        box_dimension(np.array([[0.0, 0.0], [0.0, 0.0]]), [1.0, 0.5])
    with pytest.raises(DegenerateFit):
        box_dimension(np.zeros((0, 2)))


def test_report_metadata():
    pts = np.column_stack([np.linspace(0, 1, 2000), np.zeros(2000)])
    rep = box_dimension(pts, p=2)
    assert rep.target == 1.5 and "caveat" in rep.metadata


def test_escape_fraction():
    right = Window(10, 10 + 2 * math.pi, 0, 2 * math.pi)
    near = Window(0, 2 * math.pi, 0, 2 * math.pi)
    f_right = escape_fraction(HALF, right, 10 ** 4)
    assert f_right > 0.5
    assert f_right >= escape_fraction(HALF, near, 10 ** 4)
    assert escape_fraction(HALF, right, 10 ** 4, k_budget=0) == 0
    assert escape_fraction(HALF, right, 1000, seed=3) == escape_fraction(HALF, right, 1000, seed=3)


def test_escape_time_and_pgm(tmp_path):
    win = Window(-10, 10, -10, 10)
    t0 = escape_time(HALF, win, (16, 8), 0)
    assert (to_gray(t0, 0) == to_gray(t0, 0)[0, 0]).all()
    t = escape_time(HALF, win, (32, 16), 20, 6.0)
    assert t.shape == (16, 32)
    assert t[:, -1].max() == 0  # |Re| = 10 is already outside
    img = to_gray(t, 20)
    path = tmp_path / "r.pgm"
    write_pgm(path, img, "note")
    assert (read_pgm(path) == img).all()
    assert path.read_bytes().startswith(b"P5\n# note\n32 16\n255\n")


def test_mask_points_orientation():
    win = Window(0, 1, 0, 1)
    mask = np.zeros((2, 2), dtype=bool)
    mask[0, 1] = True  # top-right cell
    assert mask_points(mask, win).tolist() == [[1.0, 1.0]]
