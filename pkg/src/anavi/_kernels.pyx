# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled grid kernels; see ``_kernels_py`` for the reference semantics."""

from libc.math cimport cos, sin, sqrt, floor, INFINITY, M_PI


cdef inline Py_ssize_t _cell_index(double v, double cell_size, Py_ssize_t n) nogil:
    cdef Py_ssize_t i = <Py_ssize_t>floor(v / cell_size)
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


cdef inline void _axis_setup(double p, double d, Py_ssize_t i, double cell_size,
                             Py_ssize_t *step, double *tmax, double *tdelta) nogil:
    if d > 0.0:
        step[0] = 1
        tmax[0] = ((i + 1) * cell_size - p) / d
        tdelta[0] = cell_size / d
    elif d < 0.0:
        step[0] = -1
        tmax[0] = (i * cell_size - p) / d
        tdelta[0] = -cell_size / d
    else:
        step[0] = 0
        tmax[0] = INFINITY
        tdelta[0] = INFINITY


def trace_reflections(const unsigned char[:, ::1] cells, const double[::1] reflect,
                      double cell_size, double sx, double sy, double lx, double ly,
                      long n_rays, double jitter, long max_bounces, double energy_floor,
                      double listener_radius, double sound_speed, double bin_width,
                      double[::1] bins):
    cdef Py_ssize_t h = cells.shape[0]
    cdef Py_ssize_t w = cells.shape[1]
    cdef Py_ssize_t nbins = bins.shape[0]
    cdef double max_length = nbins * bin_width * sound_speed
    cdef double r2 = listener_radius * listener_radius
    cdef double scale = M_PI / (n_rays * listener_radius)
    cdef double inv_cbw = 1.0 / (sound_speed * bin_width)
    cdef double dtheta = 2.0 * M_PI / n_rays
    cdef long captured = 0
    cdef long ray, bounces
    cdef double ang, dx, dy, px, py, tmaxx, tmaxy, tdx, tdy, seg_start, k, t
    cdef double ox, oy, u, seg_len, cx, cy, dist
    cdef Py_ssize_t ix, iy, nx, ny, stepx, stepy, b
    cdef int axis, hit

    with nogil:
        for ray in range(n_rays):
            ang = jitter + ray * dtheta
            dx = cos(ang)
            dy = sin(ang)
            px = sx
            py = sy
            ix = _cell_index(px, cell_size, w)
            iy = _cell_index(py, cell_size, h)
            _axis_setup(px, dx, ix, cell_size, &stepx, &tmaxx, &tdx)
            _axis_setup(py, dy, iy, cell_size, &stepy, &tmaxy, &tdy)
            seg_start = 0.0
            k = 1.0
            bounces = 0

            while True:
                hit = 0
                while True:
                    if tmaxx < tmaxy:
                        t = tmaxx
                        axis = 0
                        nx = ix + stepx
                        ny = iy
                    else:
                        t = tmaxy
                        axis = 1
                        nx = ix
                        ny = iy + stepy
                    if t >= max_length:
                        t = max_length
                        break
                    if nx < 0 or nx >= w or ny < 0 or ny >= h:
                        break
                    if cells[ny, nx] > 0:
                        hit = 1
                        break
                    ix = nx
                    iy = ny
                    if axis == 0:
                        tmaxx = tmaxx + tdx
                    else:
                        tmaxy = tmaxy + tdy

                if bounces >= 1:
                    ox = px - lx
                    oy = py - ly
                    u = -(ox * dx + oy * dy)
                    seg_len = t - seg_start
                    if u < 0.0:
                        u = 0.0
                    elif u > seg_len:
                        u = seg_len
                    cx = ox + u * dx
                    cy = oy + u * dy
                    if cx * cx + cy * cy < r2:
                        dist = seg_start + u
                        b = <Py_ssize_t>(dist * inv_cbw)
                        if b < nbins:
                            bins[b] += k * scale / dist
                            captured += 1

                if not hit or bounces >= max_bounces:
                    break
                k = k * reflect[cells[ny, nx]]
                if k < energy_floor:
                    break
                bounces += 1
                px = px + (t - seg_start) * dx
                py = py + (t - seg_start) * dy
                seg_start = t
                if axis == 0:
                    dx = -dx
                    stepx = -stepx
                    tmaxx = t + tdx
                else:
                    dy = -dy
                    stepy = -stepy
                    tmaxy = t + tdy

    return captured


def first_hits(const unsigned char[:, ::1] cells, double cell_size, double ox, double oy,
               const double[::1] angles, double max_range, double[::1] ranges,
               long[::1] codes):
    cdef Py_ssize_t h = cells.shape[0]
    cdef Py_ssize_t w = cells.shape[1]
    cdef Py_ssize_t ix0 = _cell_index(ox, cell_size, w)
    cdef Py_ssize_t iy0 = _cell_index(oy, cell_size, h)
    cdef Py_ssize_t j, ix, iy, nx, ny, stepx, stepy
    cdef double dx, dy, tmaxx, tmaxy, tdx, tdy, t

    with nogil:
        for j in range(angles.shape[0]):
            dx = cos(angles[j])
            dy = sin(angles[j])
            ix = ix0
            iy = iy0
            _axis_setup(ox, dx, ix, cell_size, &stepx, &tmaxx, &tdx)
            _axis_setup(oy, dy, iy, cell_size, &stepy, &tmaxy, &tdy)
            ranges[j] = max_range
            codes[j] = 0
            while True:
                if tmaxx < tmaxy:
                    t = tmaxx
                    nx = ix + stepx
                    ny = iy
                    tmaxx = tmaxx + tdx
                else:
                    t = tmaxy
                    nx = ix
                    ny = iy + stepy
                    tmaxy = tmaxy + tdy
                if t > max_range:
                    break
                if nx < 0 or nx >= w or ny < 0 or ny >= h:
                    break
                if cells[ny, nx] > 0:
                    ranges[j] = t if t > 1e-9 else 1e-9
                    codes[j] = cells[ny, nx]
                    break
                ix = nx
                iy = ny


def segment_clear(const unsigned char[:, ::1] cells, double cell_size,
                  double ax, double ay, double bx, double by):
    cdef Py_ssize_t h = cells.shape[0]
    cdef Py_ssize_t w = cells.shape[1]
    cdef double tmp
    if bx < ax or (bx == ax and by < ay):
        tmp = ax; ax = bx; bx = tmp
        tmp = ay; ay = by; by = tmp
    cdef Py_ssize_t ix = _cell_index(ax, cell_size, w)
    cdef Py_ssize_t iy = _cell_index(ay, cell_size, h)
    cdef Py_ssize_t jx = _cell_index(bx, cell_size, w)
    cdef Py_ssize_t jy = _cell_index(by, cell_size, h)
    if cells[iy, ix] > 0 or cells[jy, jx] > 0:
        return False
    cdef double ex = bx - ax
    cdef double ey = by - ay
    cdef double length = sqrt(ex * ex + ey * ey)
    if length == 0.0:
        return True
    cdef double dx = ex / length
    cdef double dy = ey / length
    cdef Py_ssize_t stepx, stepy
    cdef double tmaxx, tmaxy, tdx, tdy
    _axis_setup(ax, dx, ix, cell_size, &stepx, &tmaxx, &tdx)
    _axis_setup(ay, dy, iy, cell_size, &stepy, &tmaxy, &tdy)
    while True:
        if tmaxx < tmaxy:
            if tmaxx >= length:
                break
            ix += stepx
            tmaxx = tmaxx + tdx
        elif tmaxy < tmaxx:
            if tmaxy >= length:
                break
            iy += stepy
            tmaxy = tmaxy + tdy
        else:
            if tmaxx >= length:
                break
            if 0 <= ix + stepx < w and cells[iy, ix + stepx] > 0:
                return False
            if 0 <= iy + stepy < h and cells[iy + stepy, ix] > 0:
                return False
            ix += stepx
            iy += stepy
            tmaxx = tmaxx + tdx
            tmaxy = tmaxy + tdy
        if ix < 0 or ix >= w or iy < 0 or iy >= h:
            break
        if cells[iy, ix] > 0:
            return False
    return True
