# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Voronoi clipping and polygon moment kernels.

Arithmetic mirrors ``_pykernels`` operation for operation so both back ends
produce bitwise-identical cells.
"""
import numpy as np

from libc.math cimport sqrt


cdef int _clip(double[:, ::1] src, int n, double[:, ::1] dst,
               double px, double py, double qx, double qy):
    # keep x with (x - mid) . (q - p) <= 0
    cdef double dx = qx - px
    cdef double dy = qy - py
    cdef double off = 0.5 * ((px + qx) * dx + (py + qy) * dy)
    cdef int k, out = 0
    cdef double sa, sb, t, ax, ay, bx, by
    if n == 0:
        return 0
    bx = src[n - 1, 0]
    by = src[n - 1, 1]
    sb = bx * dx + by * dy - off
    for k in range(n):
        ax = bx
        ay = by
        sa = sb
        bx = src[k, 0]
        by = src[k, 1]
        sb = bx * dx + by * dy - off
        if (sa < 0.0 and sb > 0.0) or (sa > 0.0 and sb < 0.0):
            t = sa / (sa - sb)
            dst[out, 0] = ax + t * (bx - ax)
            dst[out, 1] = ay + t * (by - ay)
            out += 1
        if sb <= 0.0:
            dst[out, 0] = bx
            dst[out, 1] = by
            out += 1
    return out


def clip_cells(double[:, ::1] seeds, double[:, ::1] box, long long[::1] rows,
               long long[:, ::1] nbr, double[:, ::1] nbr_dist):
    """Clip ``box`` by the bisector half-planes of each listed seed's neighbours.

    Row ``r`` of ``nbr``/``nbr_dist`` holds the candidates of seed ``rows[r]``
    sorted by distance.  Returns ``(vertices, offsets, complete)`` per row;
    ``complete[r]`` is 0 when the candidates ran out before the security
    radius closed the cell.
    """
    cdef Py_ssize_t nseed = seeds.shape[0]
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t kcand = nbr.shape[1]
    cdef Py_ssize_t nbox = box.shape[0]
    cdef Py_ssize_t cap = nbox + kcand + 4
    cdef double[:, ::1] a = np.empty((cap, 2))
    cdef double[:, ::1] b = np.empty((cap, 2))
    cdef double[:, ::1] tmp
    out_chunks = []
    offsets = np.zeros(n + 1, dtype=np.int64)
    complete = np.zeros(n, dtype=np.uint8)
    cdef long long[::1] off_view = offsets
    cdef unsigned char[::1] comp_view = complete
    cdef Py_ssize_t i, j, k, si
    cdef int nv
    cdef double px, py, r2, rmax2, ddx, ddy, dist
    cdef bint done
    for i in range(n):
        si = rows[i]
        px = seeds[si, 0]
        py = seeds[si, 1]
        for k in range(nbox):
            a[k, 0] = box[k, 0]
            a[k, 1] = box[k, 1]
        nv = <int>nbox
        done = False
        for j in range(kcand):
            rmax2 = 0.0
            for k in range(nv):
                ddx = a[k, 0] - px
                ddy = a[k, 1] - py
                r2 = ddx * ddx + ddy * ddy
                if r2 > rmax2:
                    rmax2 = r2
            dist = nbr_dist[i, j]
            if dist >= 2.0 * sqrt(rmax2):
                done = True
                break
            nv = _clip(a, nv, b, px, py, seeds[nbr[i, j], 0], seeds[nbr[i, j], 1])
            tmp = a
            a = b
            b = tmp
            if nv == 0:
                done = True
                break
        if not done and kcand == nseed - 1:
            done = True
        comp_view[i] = 1 if done else 0
        out_chunks.append(np.asarray(a[:nv]).copy())
        off_view[i + 1] = off_view[i] + nv
    if n == 0:
        return np.empty((0, 2)), offsets, complete
    return np.concatenate(out_chunks, axis=0), offsets, complete


def polygon_moments(double[:, ::1] verts, long long[::1] offsets):
    """Signed areas and area centroids of polygons stored back to back."""
    cdef Py_ssize_t n = offsets.shape[0] - 1
    areas = np.zeros(n)
    cents = np.zeros((n, 2))
    cdef double[::1] av = areas
    cdef double[:, ::1] cv = cents
    cdef Py_ssize_t i, k, s, e, kn
    cdef double acc, cx, cy, cr, x0, y0, xa, ya, xb, yb
    for i in range(n):
        s = offsets[i]
        e = offsets[i + 1]
        if e - s < 3:
            continue
        # shift to first vertex for round-off control
        x0 = verts[s, 0]
        y0 = verts[s, 1]
        acc = 0.0
        cx = 0.0
        cy = 0.0
        for k in range(s, e):
            kn = k + 1 if k + 1 < e else s
            xa = verts[k, 0] - x0
            ya = verts[k, 1] - y0
            xb = verts[kn, 0] - x0
            yb = verts[kn, 1] - y0
            cr = xa * yb - xb * ya
            acc += cr
            cx += (xa + xb) * cr
            cy += (ya + yb) * cr
        av[i] = 0.5 * acc
        if acc != 0.0:
            cv[i, 0] = x0 + cx / (3.0 * acc)
            cv[i, 1] = y0 + cy / (3.0 * acc)
    return areas, cents
