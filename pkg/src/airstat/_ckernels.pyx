# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Signatures match ``airstat._pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, cos, floor, M_PI
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double TWO_PI = 2.0 * M_PI
cdef double INV53 = 1.0 / 9007199254740992.0
cdef double MINUTES_PER_DAY = 1440.0


cdef inline uint64_t _mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline uint64_t _word(uint64_t key, uint64_t i) nogil:
    return _mix(key + (i + 1) * GOLDEN)


cdef inline double _uniform(uint64_t key, uint64_t i) nogil:
    return (<double>(_word(key, i) >> 11) + 0.5) * INV53


cdef inline double _std_normal(uint64_t key, uint64_t i) nogil:
    cdef double u1 = _uniform(key, 2 * i)
    cdef double u2 = _uniform(key, 2 * i + 1)
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


def uniforms(uint64_t key, Py_ssize_t start, Py_ssize_t n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = _uniform(key, <uint64_t>(start + i))
    return out


def exponentials(uint64_t key, Py_ssize_t start, Py_ssize_t n, double rate):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = -log(_uniform(key, <uint64_t>(start + i))) / rate
    return out


def normals(uint64_t key, Py_ssize_t start, Py_ssize_t n, double mu, double sigma):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            o[i] = mu + sigma * _std_normal(key, <uint64_t>(start + i))
    return out


def mixture_gaps(uint64_t k_choice, uint64_t k_exp, uint64_t k_norm,
                 Py_ssize_t n, double p, double lam, double mu, double sigma,
                 Py_ssize_t max_attempts=10000):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i, a
    cdef uint64_t akey
    cdef double x
    cdef bint failed = False
    with nogil:
        for i in range(n):
            if _uniform(k_choice, <uint64_t>i) < p:
                o[i] = -log(_uniform(k_exp, <uint64_t>i)) / lam
                continue
            x = 0.0
            for a in range(max_attempts):
                akey = _word(k_norm, <uint64_t>a)
                x = mu + sigma * _std_normal(akey, <uint64_t>i)
                if x > 0.0:
                    break
            if not x > 0.0:
                failed = True
                break
            o[i] = x
    if failed:
        raise RuntimeError("normal component rejection did not terminate")
    return out


def raw_moments(x):
    cdef double[::1] v = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], i
    cdef double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0, t, t2
    if n == 0:
        raise ValueError("empty sample")
    with nogil:
        for i in range(n):
            t = v[i]
            t2 = t * t
            s1 += t
            s2 += t2
            s3 += t2 * t
            s4 += t2 * t2
    return (s1 / n, s2 / n, s3 / n, s4 / n)


def thinning_mask(hours, months, u, rates, multipliers, double lam_max):
    cdef int64_t[::1] h = np.ascontiguousarray(hours, dtype=np.int64)
    cdef int64_t[::1] m = np.ascontiguousarray(months, dtype=np.int64)
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] r = np.ascontiguousarray(rates, dtype=np.float64)
    cdef double[::1] mult = np.ascontiguousarray(multipliers, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0], i
    out = np.empty(n, dtype=np.bool_)
    cdef cnp.npy_bool[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = uu[i] * lam_max < r[h[i]] * mult[m[i]]
    return out


def window_intervals(times, double start_minute, double length):
    cdef double[::1] t = np.ascontiguousarray(times, dtype=np.float64)
    cdef Py_ssize_t n = t.shape[0], i
    cdef Py_ssize_t ni = 0, no = 0
    cdef double d, pos, prev_pos = 0.0
    cdef int64_t w, prev_w = 0
    cdef bint have_prev = False
    iv = np.empty(n, dtype=np.float64)
    iocc = np.empty(n, dtype=np.int64)
    occ = np.empty(n, dtype=np.int64)
    lead = np.empty(n, dtype=np.float64)
    trail = np.empty(n, dtype=np.float64)
    cdef double[::1] iv_v = iv, lead_v = lead, trail_v = trail
    cdef int64_t[::1] iocc_v = iocc, occ_v = occ
    with nogil:
        for i in range(n):
            d = t[i] - start_minute
            w = <int64_t>floor(d / MINUTES_PER_DAY)
            pos = d - <double>w * MINUTES_PER_DAY
            if pos >= length:
                continue
            if have_prev and w == prev_w:
                iv_v[ni] = pos - prev_pos
                iocc_v[ni] = w
                ni += 1
            else:
                if have_prev:
                    trail_v[no - 1] = length - prev_pos
                occ_v[no] = w
                lead_v[no] = pos
                no += 1
            prev_w = w
            prev_pos = pos
            have_prev = True
        if have_prev:
            trail_v[no - 1] = length - prev_pos
    return iv[:ni].copy(), iocc[:ni].copy(), occ[:no].copy(), lead[:no].copy(), trail[:no].copy()
