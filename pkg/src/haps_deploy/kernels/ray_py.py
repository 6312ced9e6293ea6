"""Pure-Python/numpy ray-occlusion kernel.

Semantics match the compiled kernel bit for bit: the same watertight
segment-triangle test (shear to ray space, signed barycentric edge
functions with inclusive boundaries) and the same slab segment-AABB test.
"""

from __future__ import annotations

import numpy as np


def _shear(d):
    """Pick the dominant axis and shear constants for one segment."""
    ax, ay, az = abs(d[0]), abs(d[1]), abs(d[2])
    kz = 0
    best = ax
    if ay > best:
        kz, best = 1, ay
    if az > best:
        kz = 2
    kx = (kz + 1) % 3
    ky = (kz + 2) % 3
    if d[kz] < 0.0:
        kx, ky = ky, kx
    sz = 1.0 / d[kz]
    sx = d[kx] * sz
    sy = d[ky] * sz
    return kx, ky, kz, sx, sy, sz


def _triangle_hits(o, tlo, thi, kx, ky, kz, sx, sy, sz, v0, v1, v2):
    """Watertight hit mask for a batch of triangles against one segment."""
    a = v0 - o
    b = v1 - o
    c = v2 - o
    ax = a[:, kx] - sx * a[:, kz]
    ay = a[:, ky] - sy * a[:, kz]
    bx = b[:, kx] - sx * b[:, kz]
    by = b[:, ky] - sy * b[:, kz]
    cx = c[:, kx] - sx * c[:, kz]
    cy = c[:, ky] - sy * c[:, kz]
    u = cx * by - cy * bx
    v = ax * cy - ay * cx
    w = bx * ay - by * ax
    mixed = ((u < 0.0) | (v < 0.0) | (w < 0.0)) & ((u > 0.0) | (v > 0.0) | (w > 0.0))
    det = u + v + w
    t_num = u * (sz * a[:, kz]) + v * (sz * b[:, kz]) + w * (sz * c[:, kz])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = t_num / det
    return ~mixed & (det != 0.0) & (t > tlo) & (t < thi)


def segment_hits_any_triangle(origin, target, v0, v1, v2, eps) -> bool:
    """Brute-force any-hit over a full triangle array."""
    origin = np.asarray(origin, dtype=np.float64)
    d = np.asarray(target, dtype=np.float64) - origin
    length = float(np.sqrt(d @ d))
    if length <= 2.0 * eps:
        return False
    tlo = eps / length
    thi = 1.0 - eps / length
    kx, ky, kz, sx, sy, sz = _shear(d)
    return bool(_triangle_hits(origin, tlo, thi, kx, ky, kz, sx, sy, sz, v0, v1, v2).any())


def _box_hit(o, d, tlo, thi, bmin, bmax) -> bool:
    for axis in range(3):
        da = d[axis]
        oa = o[axis]
        if da != 0.0:
            inv = 1.0 / da
            ta = (bmin[axis] - oa) * inv
            tb = (bmax[axis] - oa) * inv
            if ta > tb:
                ta, tb = tb, ta
            if ta > tlo:
                tlo = ta
            if tb < thi:
                thi = tb
            if tlo > thi:
                return False
        elif oa < bmin[axis] or oa > bmax[axis]:
            return False
    return True


def occluded_batch(bmin, bmax, left, right, start, count,
                   v0, v1, v2, origins, targets, eps, out) -> None:
    """BVH any-hit for a batch of segments; writes 0/1 into ``out``."""
    n_nodes = len(left)
    bmin_l = bmin.tolist()
    bmax_l = bmax.tolist()
    for i in range(len(origins)):
        o = origins[i]
        d = targets[i] - o
        length = float(np.sqrt(d @ d))
        if n_nodes == 0 or length <= 2.0 * eps:
            out[i] = 0
            continue
        tlo = eps / length
        thi = 1.0 - eps / length
        kx, ky, kz, sx, sy, sz = _shear(d)
        o_l = o.tolist()
        d_l = d.tolist()
        hit = False
        stack = [0]
        while stack:
            node = stack.pop()
            if not _box_hit(o_l, d_l, tlo, thi, bmin_l[node], bmax_l[node]):
                continue
            if left[node] < 0:
                s = start[node]
                e = s + count[node]
                if _triangle_hits(o, tlo, thi, kx, ky, kz, sx, sy, sz,
                                  v0[s:e], v1[s:e], v2[s:e]).any():
                    hit = True
                    break
            else:
                stack.append(left[node])
                stack.append(right[node])
        out[i] = 1 if hit else 0
