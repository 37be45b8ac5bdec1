# cython: language_level=3
"""Compiled hot kernels; must match camcim._fallback semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, floor, fabs, copysign
from libc.stdint cimport uint64_t, int64_t, uint8_t, int8_t

cnp.import_array()

BACKEND = "cython"

cdef double INV53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586


cdef inline uint64_t splitmix(uint64_t x) nogil:
    cdef uint64_t z = x + 0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double gauss(uint64_t seed, uint64_t a, uint64_t b, uint64_t c, uint64_t d) nogil:
    cdef uint64_t h = splitmix(seed)
    h = splitmix(h ^ a)
    h = splitmix(h ^ b)
    h = splitmix(h ^ c)
    h = splitmix(h ^ d)
    cdef double u1 = (<double>(h >> 11) + 0.5) * INV53
    cdef double u2 = <double>(splitmix(h) >> 11) * INV53
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef inline double rha(double v) nogil:
    return copysign(floor(fabs(v) + 0.5), v)


def gaussian(seed, a, b, c, d):
    return gauss(<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF), <uint64_t>int(a), <uint64_t>int(b),
                 <uint64_t>int(c), <uint64_t>int(d))


def accumulate_pulse(levels, match, blocks, drives, int pulse, double sigma, seed, int layer):
    cdef const uint8_t[:, :, ::1] lv = np.ascontiguousarray(levels, dtype=np.uint8)
    cdef const uint8_t[:, :, ::1] mt = np.ascontiguousarray(match, dtype=np.uint8)
    cdef const int64_t[::1] bk = np.ascontiguousarray(blocks, dtype=np.int64)
    cdef const double[::1] dr = np.ascontiguousarray(drives, dtype=np.float64)
    cdef Py_ssize_t n_ssl = lv.shape[1], n_bl = lv.shape[2], n = bk.shape[0]
    out_arr = np.zeros(n_bl, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef uint64_t sd = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t i, s, p
    cdef int64_t b
    cdef double drive
    with nogil:
        for i in range(n):
            b = bk[i]
            drive = dr[i]
            for s in range(n_ssl):
                for p in range(n_bl):
                    if mt[b, s, p] != 0 and lv[b, s, p] <= pulse:
                        if sigma == 0.0:
                            out[p] += drive
                        else:
                            out[p] += drive * (1.0 + sigma * gauss(sd, <uint64_t>b, <uint64_t>s,
                                                                   <uint64_t>p, <uint64_t>layer))
    return out_arr


def mc_error_counts(seed, sign_x, sign_w, cond_pos, cond_neg, double drive, double weight_mag,
                    double sigma, double lsb, double full_scale, double tolerance=1.0,
                    chunk=None):
    cdef const int8_t[:, ::1] sx = np.ascontiguousarray(sign_x, dtype=np.int8)
    cdef const int8_t[:, ::1] sw = np.ascontiguousarray(sign_w, dtype=np.int8)
    cdef const uint8_t[:, :, ::1] cp = np.ascontiguousarray(cond_pos, dtype=np.uint8)
    cdef const uint8_t[:, :, ::1] cn = np.ascontiguousarray(cond_neg, dtype=np.uint8)
    cdef Py_ssize_t n_trials = sx.shape[0], n_pairs = sx.shape[1]
    cdef Py_ssize_t n_pulse = cp.shape[1], n_ssl = cp.shape[2]
    counts_arr = np.zeros(n_pairs, dtype=np.int64)
    cdef int64_t[::1] counts = counts_arr
    acc_arr = np.zeros(n_pulse, dtype=np.float64)
    cdef double[::1] acc = acc_arr
    cells_arr = np.zeros(2 * n_ssl, dtype=np.float64)
    cdef double[::1] cells = cells_arr
    cdef uint64_t sd = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef double code_max = full_scale / lsb
    cdef Py_ssize_t t, i, j, s, code
    cdef double exact, pos, neg, q, total, value, xs
    with nogil:
        for t in range(n_trials):
            for j in range(n_pulse):
                acc[j] = 0.0
            exact = 0.0
            for i in range(n_pairs):
                for s in range(2 * n_ssl):
                    if sigma == 0.0:
                        cells[s] = 1.0
                    else:
                        cells[s] = 1.0 + sigma * gauss(sd, <uint64_t>t, <uint64_t>i, <uint64_t>s, 0)
                code = 1 if sw[t, i] < 0 else 0
                xs = sx[t, i] * drive
                for j in range(n_pulse):
                    pos = 0.0
                    neg = 0.0
                    for s in range(n_ssl):
                        if cp[code, j, s]:
                            pos = pos + cells[s]
                        if cn[code, j, s]:
                            neg = neg + cells[n_ssl + s]
                    acc[j] += xs * (pos - neg)
                exact += sx[t, i] * sw[t, i] * drive * weight_mag
                total = 0.0
                for j in range(n_pulse):
                    q = rha(acc[j] / lsb)
                    if q > code_max:
                        q = code_max
                    elif q < -code_max:
                        q = -code_max
                    total += q
                value = rha(total * lsb / 2.0)
                if fabs(value - exact) >= tolerance:
                    counts[i] += 1
    return counts_arr
