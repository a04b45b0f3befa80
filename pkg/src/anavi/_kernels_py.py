"""Pure-Python grid kernels.

Reference implementation of the routines in ``_kernels.pyx``. Both backends
perform the same floating-point operations in the same order, so results
agree bit for bit on IEEE-754 doubles.

Grid conventions shared by every routine: ``cells`` is a ``(height, width)``
array of material codes indexed ``cells[iy, ix]``; a point ``(x, y)`` belongs
to cell ``(floor(x / cell_size), floor(y / cell_size))``, clamped into the grid
at the maximum edge.
"""

import math

INF = math.inf


def _cell_index(v, cell_size, n):
    i = int(math.floor(v / cell_size))
    if i < 0:
        return 0
    if i >= n:
        return n - 1
    return i


def _axis_setup(p, d, i, cell_size):
    # (step, t to first boundary crossing, t between crossings)
    if d > 0.0:
        return 1, ((i + 1) * cell_size - p) / d, cell_size / d
    if d < 0.0:
        return -1, (i * cell_size - p) / d, -cell_size / d
    return 0, INF, INF


def trace_reflections(cells, reflect, cell_size, sx, sy, lx, ly, n_rays, jitter,
                      max_bounces, energy_floor, listener_radius, sound_speed,
                      bin_width, bins):
    """Accumulate reflected-path energy at a disk listener into ``bins``.

    Returns the number of captured ray segments.
    """
    h, w = cells.shape
    nbins = len(bins)
    max_length = nbins * bin_width * sound_speed
    r2 = listener_radius * listener_radius
    scale = math.pi / (n_rays * listener_radius)
    inv_cbw = 1.0 / (sound_speed * bin_width)
    dtheta = 2.0 * math.pi / n_rays
    captured = 0

    for ray in range(n_rays):
        ang = jitter + ray * dtheta
        dx = math.cos(ang)
        dy = math.sin(ang)
        px = sx
        py = sy
        ix = _cell_index(px, cell_size, w)
        iy = _cell_index(py, cell_size, h)
        stepx, tmaxx, tdx = _axis_setup(px, dx, ix, cell_size)
        stepy, tmaxy, tdy = _axis_setup(py, dy, iy, cell_size)
        seg_start = 0.0
        k = 1.0
        bounces = 0

        while True:
            hit = False
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
                    hit = True
                    break
                ix = nx
                iy = ny
                if axis == 0:
                    tmaxx += tdx
                else:
                    tmaxy += tdy

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
                    b = int(dist * inv_cbw)
                    if b < nbins:
                        bins[b] += k * scale / dist
                        captured += 1

            if not hit or bounces >= max_bounces:
                break
            k *= reflect[cells[ny, nx]]
            if k < energy_floor:
                break
            bounces += 1
            px += (t - seg_start) * dx
            py += (t - seg_start) * dy
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


def first_hits(cells, cell_size, ox, oy, angles, max_range, ranges, codes):
    """Distance to and material code of the first solid cell along each angle.

    Bins with no hit within ``max_range`` (or leaving the grid) get
    ``max_range`` and code 0.
    """
    h, w = cells.shape
    ix0 = _cell_index(ox, cell_size, w)
    iy0 = _cell_index(oy, cell_size, h)
    for j in range(len(angles)):
        dx = math.cos(angles[j])
        dy = math.sin(angles[j])
        ix = ix0
        iy = iy0
        stepx, tmaxx, tdx = _axis_setup(ox, dx, ix, cell_size)
        stepy, tmaxy, tdy = _axis_setup(oy, dy, iy, cell_size)
        ranges[j] = max_range
        codes[j] = 0
        while True:
            if tmaxx < tmaxy:
                t = tmaxx
                nx = ix + stepx
                ny = iy
                tmaxx += tdx
            else:
                t = tmaxy
                nx = ix
                ny = iy + stepy
                tmaxy += tdy
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


def segment_clear(cells, cell_size, ax, ay, bx, by):
    """True iff the segment a-b only crosses code-0 cells.

    Passing exactly through a grid vertex is blocked if either side cell is
    solid. Endpoints are put in canonical order so the result is symmetric.
    """
    h, w = cells.shape
    if (bx, by) < (ax, ay):
        ax, ay, bx, by = bx, by, ax, ay
    ix = _cell_index(ax, cell_size, w)
    iy = _cell_index(ay, cell_size, h)
    jx = _cell_index(bx, cell_size, w)
    jy = _cell_index(by, cell_size, h)
    if cells[iy, ix] > 0 or cells[jy, jx] > 0:
        return False
    ex = bx - ax
    ey = by - ay
    length = math.sqrt(ex * ex + ey * ey)
    if length == 0.0:
        return True
    dx = ex / length
    dy = ey / length
    stepx, tmaxx, tdx = _axis_setup(ax, dx, ix, cell_size)
    stepy, tmaxy, tdy = _axis_setup(ay, dy, iy, cell_size)
    while True:
        if tmaxx < tmaxy:
            if tmaxx >= length:
                break
            ix += stepx
            tmaxx += tdx
        elif tmaxy < tmaxx:
            if tmaxy >= length:
                break
            iy += stepy
            tmaxy += tdy
        else:
            if tmaxx >= length:
                break
            if 0 <= ix + stepx < w and cells[iy, ix + stepx] > 0:
                return False
            if 0 <= iy + stepy < h and cells[iy + stepy, ix] > 0:
                return False
            ix += stepx
            iy += stepy
            tmaxx += tdx
            tmaxy += tdy
        if ix < 0 or ix >= w or iy < 0 or iy >= h:
            break
        if cells[iy, ix] > 0:
            return False
    return True
