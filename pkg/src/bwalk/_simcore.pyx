# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event loop and jump sampler.

Mirrors ``_simcore_py`` operation for operation: same raw-stream
consumption, same floating point expressions, so both backends produce
identical draws for the same generator state.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport cos, exp, expm1, floor, log1p, pow, sin, sqrt
from libc.stdint cimport int64_t
from libc.stdlib cimport free, malloc, realloc
from numpy.random cimport bitgen_t

cnp.import_array()

cdef Py_ssize_t MAX_REJECT = 1000000
cdef double JUMP_CAP = 9007199254740992.0
cdef double INV_2_53 = 1.0 / 9007199254740992.0

OK = 0
CAPPED = 1
cdef int CAPPED_C = 1
cdef int _REJECT_FAIL = 2


cdef struct Sampler:
    int d
    double alpha
    double inv_alpha
    double core_mass
    Py_ssize_t n
    const double* prob
    const int64_t* alias
    const int64_t* offsets
    double r_prop
    double r2_core
    Py_ssize_t nseg
    const double* cum
    const double* f0
    const double* f1
    const double* theta0
    double width


cdef inline double _u(bitgen_t* rng) noexcept nogil:
    return <double>(rng.next_uint64(rng.state) >> 11) * INV_2_53


cdef int _tail_1d(Sampler* s, bitgen_t* rng, int64_t* z) noexcept nogil:
    cdef double y, k, km, dq, rhs
    cdef Py_ssize_t it
    for it in range(MAX_REJECT):
        y = s.r_prop * pow(1.0 - _u(rng), -s.inv_alpha)
        if y >= JUMP_CAP:
            k = JUMP_CAP
        else:
            k = floor(y + 0.5)
            km = k - 0.5
            dq = -expm1(-s.alpha * log1p(1.0 / km))
            rhs = s.alpha / k * exp(s.alpha * log1p(-0.5 / k))
            if _u(rng) * dq > rhs:
                continue
        if _u(rng) < 0.5:
            z[0] = -<int64_t>k
        else:
            z[0] = <int64_t>k
        return 0
    return _REJECT_FAIL


cdef int _tail_2d(Sampler* s, bitgen_t* rng, int64_t* z) noexcept nogil:
    cdef double y, w, x, f0, f1, frac, th, zx, zy
    cdef Py_ssize_t it, lo, hi, mid, j
    for it in range(MAX_REJECT):
        y = s.r_prop * pow(1.0 - _u(rng), -s.inv_alpha)
        if y > JUMP_CAP:
            y = JUMP_CAP
        w = _u(rng)
        # largest j with cum[j] <= w (bisect_right - 1)
        lo = 0
        hi = s.nseg + 1
        while lo < hi:
            mid = (lo + hi) // 2
            if w < s.cum[mid]:
                hi = mid
            else:
                lo = mid + 1
        j = lo - 1
        if j >= s.nseg:
            j = s.nseg - 1
        x = (w - s.cum[j]) / (s.cum[j + 1] - s.cum[j])
        f0 = s.f0[j]
        f1 = s.f1[j]
        if f0 == f1:
            frac = x
        else:
            frac = (sqrt(f0 * f0 + (f1 * f1 - f0 * f0) * x) - f0) / (f1 - f0)
        th = s.theta0[j] + frac * s.width
        zx = floor(y * cos(th) + 0.5)
        zy = floor(y * sin(th) + 0.5)
        if zx * zx + zy * zy <= s.r2_core:
            continue
        z[0] = <int64_t>zx
        z[1] = <int64_t>zy
        return 0
    return _REJECT_FAIL


cdef int _draw(Sampler* s, bitgen_t* rng, int64_t* z) noexcept nogil:
    cdef double v
    cdef Py_ssize_t j, idx, i
    if _u(rng) < s.core_mass:
        v = _u(rng) * s.n
        j = <Py_ssize_t>floor(v)
        if j >= s.n:
            j = s.n - 1
        if (v - j) < s.prob[j]:
            idx = j
        else:
            idx = s.alias[j]
        for i in range(s.d):
            z[i] = s.offsets[idx * s.d + i]
        return 0
    if s.d == 1:
        return _tail_1d(s, rng, z)
    return _tail_2d(s, rng, z)


cdef class _Tables:
    """Keeps the numpy arrays alive while the C struct points into them."""
    cdef Sampler s
    cdef object keep

    def __init__(self, tab):
        prob = np.ascontiguousarray(tab.prob, dtype=np.float64)
        alias = np.ascontiguousarray(tab.alias, dtype=np.int64)
        offsets = np.ascontiguousarray(tab.offsets, dtype=np.int64)
        cum = np.ascontiguousarray(tab.seg_cum, dtype=np.float64)
        f0 = np.ascontiguousarray(tab.seg_f0, dtype=np.float64)
        f1 = np.ascontiguousarray(tab.seg_f1, dtype=np.float64)
        theta0 = np.ascontiguousarray(tab.seg_theta0, dtype=np.float64)
        self.keep = (prob, alias, offsets, cum, f0, f1, theta0)
        cdef const double[::1] prob_v = prob
        cdef const int64_t[::1] alias_v = alias
        cdef const int64_t[:, ::1] off_v = offsets
        cdef const double[::1] cum_v = cum
        cdef const double[::1] f0_v = f0
        cdef const double[::1] f1_v = f1
        cdef const double[::1] th_v = theta0
        self.s.d = tab.d
        self.s.alpha = tab.alpha
        self.s.inv_alpha = 1.0 / tab.alpha
        self.s.core_mass = tab.core_mass
        self.s.n = prob.shape[0]
        self.s.prob = &prob_v[0]
        self.s.alias = &alias_v[0]
        self.s.offsets = &off_v[0, 0]
        self.s.r_prop = tab.r_prop
        self.s.r2_core = tab.r2_core
        self.s.nseg = f0.shape[0]
        self.s.cum = &cum_v[0]
        self.s.f0 = &f0_v[0]
        self.s.f1 = &f1_v[0]
        self.s.theta0 = &th_v[0]
        self.s.width = tab.seg_width


cdef bitgen_t* _bitgen(rng) except NULL:
    capsule = rng.bit_generator.capsule
    return <bitgen_t*>PyCapsule_GetPointer(capsule, "BitGenerator")


def sample_jumps(tab, rng, Py_ssize_t n):
    cdef _Tables t = _Tables(tab)
    cdef bitgen_t* bg = _bitgen(rng)
    out = np.empty((n, t.s.d), dtype=np.int64)
    cdef int64_t[:, ::1] ov = out
    cdef Py_ssize_t i
    cdef int rc = 0
    lock = rng.bit_generator.lock
    with lock:
        with nogil:
            for i in range(n):
                rc = _draw(&t.s, bg, &ov[i, 0])
                if rc != 0:
                    break
    if rc != 0:
        raise RuntimeError("tail rejection sampler exceeded 10**6 iterations")
    return out


cdef int _event(Sampler* s, bitgen_t* bg, int64_t** pos, Py_ssize_t* size,
                Py_ssize_t* K, double rate_per, Py_ssize_t cap) noexcept nogil:
    """Apply one jump or split.  0 ok, 1 capped, 2 sampler failure, -1 no memory."""
    cdef int64_t z[2]
    cdef int64_t* p = pos[0]
    cdef int64_t* grown
    cdef Py_ssize_t i, c
    cdef int d = s.d
    i = <Py_ssize_t>floor(_u(bg) * <double>K[0])
    if i >= K[0]:
        i = K[0] - 1
    if _u(bg) * rate_per < 1.0:
        if _draw(s, bg, z) != 0:
            return _REJECT_FAIL
        for c in range(d):
            p[i * d + c] += z[c]
        return 0
    if K[0] >= cap:
        return CAPPED_C
    if K[0] == size[0]:
        grown = <int64_t*>realloc(p, 2 * size[0] * d * sizeof(int64_t))
        if grown == NULL:
            return -1
        p = grown
        pos[0] = grown
        size[0] *= 2
    for c in range(d):
        p[K[0] * d + c] = p[i * d + c]
    K[0] += 1
    return 0


def simulate(tab, rng, double nu, double t_end, snaps, Py_ssize_t cap):
    """See ``_simcore_py.simulate``."""
    cdef _Tables t = _Tables(tab)
    cdef bitgen_t* bg = _bitgen(rng)
    cdef const double[::1] sn = np.ascontiguousarray(snaps, dtype=np.float64)
    cdef Py_ssize_t n_snap = sn.shape[0]
    cdef int d = t.s.d
    cdef double rate_per = 1.0 + nu
    cdef Py_ssize_t size = 64
    cdef Py_ssize_t K = 1
    cdef int64_t* pos = <int64_t*>malloc(size * d * sizeof(int64_t))
    cdef double tt = 0.0, t_next = 0.0
    cdef Py_ssize_t si = 0, c
    cdef long long events = 0
    cdef int status = OK
    cdef int rc = 0
    cdef bint want_snap = False
    if pos == NULL:
        raise MemoryError()
    for c in range(d):
        pos[c] = 0
    out = []
    lock = rng.bit_generator.lock
    try:
        with lock:
            while True:
                with nogil:
                    while True:
                        t_next = tt - log1p(-_u(bg)) / (<double>K * rate_per)
                        if si < n_snap and sn[si] < t_next:
                            want_snap = True
                            break
                        if t_next > t_end:
                            break
                        tt = t_next
                        rc = _event(&t.s, bg, &pos, &size, &K, rate_per, cap)
                        if rc != 0:
                            break
                        events += 1
                if want_snap:
                    # state is constant on [tt, t_next): flush, then apply the pending event
                    while si < n_snap and sn[si] < t_next:
                        out.append(np.asarray(<int64_t[:K * d]>pos).copy().reshape(K, d))
                        si += 1
                    want_snap = False
                    if t_next > t_end:
                        break
                    tt = t_next
                    rc = _event(&t.s, bg, &pos, &size, &K, rate_per, cap)
                    if rc == 0:
                        events += 1
                        continue
                if rc == CAPPED_C:
                    status = CAPPED
                elif rc == _REJECT_FAIL:
                    raise RuntimeError("tail rejection sampler exceeded 10**6 iterations")
                elif rc == -1:
                    raise MemoryError()
                break
    finally:
        free(pos)
    return out, status, events
