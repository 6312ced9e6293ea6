# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled ray-occlusion kernel.

Mirrors kernels.ray_py operation for operation so both give identical
answers; compiled with FP contraction disabled to keep the arithmetic
bit-equal to the numpy fallback.
"""

from libc.math cimport sqrt, fabs

cdef inline bint _box_hit(const double* bmin, const double* bmax,
                          const double* o, const double* d,
                          double tlo, double thi) noexcept nogil:
    cdef int axis
    cdef double da, oa, inv, ta, tb, tmp
    for axis in range(3):
        da = d[axis]
        oa = o[axis]
        if da != 0.0:
            inv = 1.0 / da
            ta = (bmin[axis] - oa) * inv
            tb = (bmax[axis] - oa) * inv
            if ta > tb:
                tmp = ta
                ta = tb
                tb = tmp
            if ta > tlo:
                tlo = ta
            if tb < thi:
                thi = tb
            if tlo > thi:
                return False
        elif oa < bmin[axis] or oa > bmax[axis]:
            return False
    return True


cdef inline bint _triangle_hit(const double* p0, const double* p1, const double* p2,
                               const double* o, double tlo, double thi,
                               int kx, int ky, int kz,
                               double sx, double sy, double sz) noexcept nogil:
    cdef double a0, a1, a2, b0, b1, b2, c0, c1, c2
    cdef double ax, ay, bx, by, cx, cy, u, v, w, det, t_num, t
    a0 = p0[kx] - o[kx]
    a1 = p0[ky] - o[ky]
    a2 = p0[kz] - o[kz]
    b0 = p1[kx] - o[kx]
    b1 = p1[ky] - o[ky]
    b2 = p1[kz] - o[kz]
    c0 = p2[kx] - o[kx]
    c1 = p2[ky] - o[ky]
    c2 = p2[kz] - o[kz]
    ax = a0 - sx * a2
    ay = a1 - sy * a2
    bx = b0 - sx * b2
    by = b1 - sy * b2
    cx = c0 - sx * c2
    cy = c1 - sy * c2
    u = cx * by - cy * bx
    v = ax * cy - ay * cx
    w = bx * ay - by * ax
    if (u < 0.0 or v < 0.0 or w < 0.0) and (u > 0.0 or v > 0.0 or w > 0.0):
        return False
    det = u + v + w
    if det == 0.0:
        return False
    t_num = u * (sz * a2) + v * (sz * b2) + w * (sz * c2)
    t = t_num / det
    return t > tlo and t < thi


cdef unsigned char _segment_occluded(const double[:, ::1] bmin, const double[:, ::1] bmax,
                                     const int[::1] left, const int[::1] right,
                                     const int[::1] start, const int[::1] count,
                                     const double[:, ::1] v0, const double[:, ::1] v1,
                                     const double[:, ::1] v2,
                                     const double* o, const double* tgt,
                                     double eps) noexcept nogil:
    cdef double d[3]
    cdef double ad0, ad1, ad2, length, tlo, thi, sx, sy, sz, best
    cdef int kx, ky, kz, node, j, s, e, sp
    # Median-split trees are balanced, so depth <= log2(n)+1; 128 slots
    # cover any representable triangle count.
    cdef int stack[128]

    d[0] = tgt[0] - o[0]
    d[1] = tgt[1] - o[1]
    d[2] = tgt[2] - o[2]
    length = sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    if bmin.shape[0] == 0 or length <= 2.0 * eps:
        return 0
    tlo = eps / length
    thi = 1.0 - eps / length

    ad0 = fabs(d[0])
    ad1 = fabs(d[1])
    ad2 = fabs(d[2])
    kz = 0
    best = ad0
    if ad1 > best:
        kz = 1
        best = ad1
    if ad2 > best:
        kz = 2
    kx = (kz + 1) % 3
    ky = (kz + 2) % 3
    if d[kz] < 0.0:
        j = kx
        kx = ky
        ky = j
    sz = 1.0 / d[kz]
    sx = d[kx] * sz
    sy = d[ky] * sz

    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        if not _box_hit(&bmin[node, 0], &bmax[node, 0], o, d, tlo, thi):
            continue
        if left[node] < 0:
            s = start[node]
            e = s + count[node]
            for j in range(s, e):
                if _triangle_hit(&v0[j, 0], &v1[j, 0], &v2[j, 0],
                                 o, tlo, thi, kx, ky, kz, sx, sy, sz):
                    return 1
        elif sp + 2 <= 128:
            stack[sp] = left[node]
            sp += 1
            stack[sp] = right[node]
            sp += 1
    return 0


def occluded_batch(const double[:, ::1] bmin, const double[:, ::1] bmax,
                   const int[::1] left, const int[::1] right,
                   const int[::1] start, const int[::1] count,
                   const double[:, ::1] v0, const double[:, ::1] v1,
                   const double[:, ::1] v2,
                   const double[:, ::1] origins, const double[:, ::1] targets,
                   double eps, unsigned char[::1] out):
    """BVH any-hit for a batch of segments; writes 0/1 into ``out``."""
    cdef Py_ssize_t i, m = origins.shape[0]
    with nogil:
        for i in range(m):
            out[i] = _segment_occluded(bmin, bmax, left, right, start, count,
                                       v0, v1, v2,
                                       &origins[i, 0], &targets[i, 0], eps)
