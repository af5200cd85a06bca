"""Pure-Python reference versions of the compiled mesh kernels.

Same algorithms and the same floating-point operation order as
``_ckernels.pyx``; used when the extension is unavailable and as the
baseline in ``benchmarks/bench_kernels.py``.
"""
from math import sqrt

import numpy as np


def _clip(poly, px, py, qx, qy):
    dx = qx - px
    dy = qy - py
    off = 0.5 * ((px + qx) * dx + (py + qy) * dy)
    out = []
    if not poly:
        return out
    bx, by = poly[-1]
    sb = bx * dx + by * dy - off
    for vx, vy in poly:
        ax, ay, sa = bx, by, sb
        bx, by = vx, vy
        sb = bx * dx + by * dy - off
        if (sa < 0.0 and sb > 0.0) or (sa > 0.0 and sb < 0.0):
            t = sa / (sa - sb)
            out.append((ax + t * (bx - ax), ay + t * (by - ay)))
        if sb <= 0.0:
            out.append((bx, by))
    return out


def clip_cells(seeds, box, rows, nbr, nbr_dist):
    nseed = len(seeds)
    n = len(rows)
    kcand = nbr.shape[1]
    seeds_l = [(float(x), float(y)) for x, y in seeds]
    box_l = [(float(x), float(y)) for x, y in box]
    nbr_l = nbr.tolist()
    dist_l = nbr_dist.tolist()
    chunks = []
    offsets = np.zeros(n + 1, dtype=np.int64)
    complete = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        px, py = seeds_l[int(rows[i])]
        poly = list(box_l)
        done = False
        for j in range(kcand):
            rmax2 = 0.0
            for vx, vy in poly:
                r2 = (vx - px) * (vx - px) + (vy - py) * (vy - py)
                if r2 > rmax2:
                    rmax2 = r2
            if dist_l[i][j] >= 2.0 * sqrt(rmax2):
                done = True
                break
            qx, qy = seeds_l[nbr_l[i][j]]
            poly = _clip(poly, px, py, qx, qy)
            if not poly:
                done = True
                break
        if not done and kcand == nseed - 1:
            done = True
        complete[i] = 1 if done else 0
        chunks.append(np.array(poly, dtype=float).reshape(-1, 2))
        offsets[i + 1] = offsets[i] + len(poly)
    if n == 0:
        return np.empty((0, 2)), offsets, complete
    return np.concatenate(chunks, axis=0), offsets, complete


def polygon_moments(verts, offsets):
    n = len(offsets) - 1
    areas = np.zeros(n)
    cents = np.zeros((n, 2))
    for i in range(n):
        s, e = int(offsets[i]), int(offsets[i + 1])
        if e - s < 3:
            continue
        x0, y0 = float(verts[s, 0]), float(verts[s, 1])
        acc = cx = cy = 0.0
        for k in range(s, e):
            kn = k + 1 if k + 1 < e else s
            xa, ya = verts[k, 0] - x0, verts[k, 1] - y0
            xb, yb = verts[kn, 0] - x0, verts[kn, 1] - y0
            cr = xa * yb - xb * ya
            acc += cr
            cx += (xa + xb) * cr
            cy += (ya + yb) * cr
        areas[i] = 0.5 * acc
        if acc != 0.0:
            cents[i, 0] = x0 + cx / (3.0 * acc)
            cents[i, 1] = y0 + cy / (3.0 * acc)
    return areas, cents
