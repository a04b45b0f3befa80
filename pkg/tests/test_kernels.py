"""The compiled kernels must agree bit for bit with the pure-Python reference."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from anavi import kernels
from anavi._kernels_py import first_hits as py_first_hits
from anavi._kernels_py import segment_clear as py_segment_clear
from anavi._kernels_py import trace_reflections as py_trace

cython = pytest.importorskip("anavi._kernels", reason="compiled kernels not built")


def random_cells(seed, h=16, w=20, density=0.2):
    rng = np.random.default_rng(seed)
    cells = (rng.random((h, w)) < density).astype(np.uint8) * rng.integers(1, 4, (h, w)).astype(np.uint8)
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = 1
    cells[h // 2, w // 2] = cells[h // 2 - 1, w // 2 - 2] = 0
    return np.ascontiguousarray(cells)


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.get_backend("python").first_hits is py_first_hits
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("seed", range(6))
def test_trace_bit_identical(seed):
    cells = random_cells(seed)
    reflect = np.ascontiguousarray(1.0 - np.linspace(0, 0.5, 256))
    args = (cells, reflect, 0.25, 2.625, 2.125, 2.125, 1.875, 256, 0.0123 * seed, 12, 1e-9,
            0.25, 343.0, 0.001)
    a, b = np.zeros(200), np.zeros(200)
    na = py_trace(*args, a)
    nb = cython.trace_reflections(*args, b)
    assert na == nb
    assert np.array_equal(a, b)


@given(st.integers(0, 10**6))
def test_first_hits_bit_identical(seed):
    cells = random_cells(seed % 50)
    rng = np.random.default_rng(seed)
    angles = rng.uniform(0, 2 * math.pi, 40)
    out = []
    for fn in (py_first_hits, cython.first_hits):
        r = np.empty(40)
        c = np.empty(40, dtype=np.int_)
        fn(cells, 0.25, 2.625, 2.125, angles, 12.0, r, c)
        out.append((r, c))
    assert np.array_equal(out[0][0], out[1][0]) and np.array_equal(out[0][1], out[1][1])


@given(st.integers(0, 10**6))
def test_segment_clear_identical(seed):
    cells = random_cells(seed % 50)
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 5, 2)
    b = rng.uniform(0, 4, 2)
    assert py_segment_clear(cells, 0.25, *a, *b) == cython.segment_clear(cells, 0.25, *a, *b)


def test_first_hit_box_room_analytic():
    """Oracle: ray-box intersection against the inner faces of a walled room."""
    cells = np.zeros((20, 24), np.uint8)
    cells[0, :] = cells[-1, :] = cells[:, 0] = cells[:, -1] = 1
    ox, oy = 2.1, 1.7
    angles = np.linspace(0, 2 * math.pi, 97, endpoint=False) + 0.01
    r = np.empty(len(angles))
    c = np.empty(len(angles), dtype=np.int_)
    kernels.first_hits(cells, 0.25, ox, oy, angles, 12.0, r, c)
    lo, hix, hiy = 0.25, 23 * 0.25, 19 * 0.25
    for a, got in zip(angles, r):
        dx, dy = math.cos(a), math.sin(a)
        ts = []
        if dx > 0:
            ts.append((hix - ox) / dx)
        if dx < 0:
            ts.append((lo - ox) / dx)
        if dy > 0:
            ts.append((hiy - oy) / dy)
        if dy < 0:
            ts.append((lo - oy) / dy)
        assert got == pytest.approx(min(ts), rel=1e-12)
    assert (c == 1).all()
