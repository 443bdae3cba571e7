import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from fmps.grid import Interval
from fmps.tracker import DomainTracker


def _square(m, half=5.0):
    return DomainTracker([Interval(-half, half)] * m)


def test_rotation_gives_hull_of_rotated_box():
    tr = _square(2)
    tr.rotate(0, 1, math.pi / 4)
    iv = tr.interval(0)
    assert iv.hi == np.float64(5 * math.sqrt(2)) or abs(iv.hi - 5 * math.sqrt(2)) < 1e-12
    assert abs(iv.lo + 5 * math.sqrt(2)) < 1e-12


def test_inverse_rotation_restores_base_box():
    tr = _square(3)
    tr.rotate(0, 2, 0.7)
    tr.rotate(0, 2, -0.7)
    for iv in tr.intervals():
        assert abs(iv.lo + 5) < 1e-12 and abs(iv.hi - 5) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.floats(-7, 7)),
                min_size=1, max_size=100))
def test_rotation_stays_orthogonal(moves):
    tr = _square(4)
    for j, k, th in moves:
        if j != k:
            tr.rotate(j, k, th)
    assert np.allclose(tr.rotation.T @ tr.rotation, np.eye(4), atol=1e-10)


def test_shift_and_scale_on_unrotated_mode():
    tr = _square(2)
    tr.shift(1, 2.0)
    tr.scale(1, 0.5)
    assert tr.interval(1) == Interval(-1.5, 3.5)
    tr.scale(1, -1.0)
    assert tr.interval(1) == Interval(-3.5, 1.5)


def test_shift_after_rotation_moves_only_that_mode():
    tr = _square(2)
    tr.rotate(0, 1, 0.4)
    before = tr.interval(1)
    tr.shift(0, 1.0)
    assert abs(tr.interval(0).center - 1.0) < 1e-12
    assert abs(tr.interval(1).center - before.center) < 1e-12


def test_set_interval_on_mixed_mode_rebases():
    tr = _square(2)
    tr.rotate(0, 1, 0.3)
    other = tr.interval(1)
    tr.set_interval(0, Interval(-1, 2))
    assert tr.interval(0) == Interval(-1, 2)
    assert abs(tr.interval(1).width - other.width) < 1e-12
    assert np.array_equal(tr.rotation, np.eye(2))


def test_insert_and_swap():
    tr = _square(2)
    tr.rotate(0, 1, 0.5)
    hull = tr.intervals()
    tr.insert(1, Interval(-6, 6))
    assert tr.n_modes == 3
    assert tr.interval(1) == Interval(-6, 6)
    assert abs(tr.interval(2).width - hull[1].width) < 1e-12
    tr.swap(1)
    assert tr.interval(2) == Interval(-6, 6)
