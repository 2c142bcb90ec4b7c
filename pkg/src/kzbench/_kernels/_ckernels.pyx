# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled state-vector kernels; same contract as ``_pykernels``."""

import numpy as np

from libc.math cimport cos, sin, sqrt, pow

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

cdef enum:
    BLOCK = 256


cdef inline void _rx(double complex[::1] psi, Py_ssize_t n, Py_ssize_t site, double angle) noexcept nogil:
    cdef double c = cos(0.5 * angle)
    cdef double s = sin(0.5 * angle)
    cdef Py_ssize_t step = (<Py_ssize_t>1) << site
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n
    cdef Py_ssize_t base, k
    cdef double ar, ai, br, bi
    base = 0
    while base < dim:
        for k in range(base, base + step):
            ar = psi[k].real
            ai = psi[k].imag
            br = psi[k + step].real
            bi = psi[k + step].imag
            # [[c, -is], [-is, c]]
            psi[k] = (c * ar + s * bi) + 1j * (c * ai - s * br)
            psi[k + step] = (c * br + s * ai) + 1j * (c * bi - s * ar)
        base += 2 * step


cdef inline void _pauli(double complex[::1] psi, Py_ssize_t n, Py_ssize_t site, int kind) noexcept nogil:
    cdef Py_ssize_t step = (<Py_ssize_t>1) << site
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n
    cdef Py_ssize_t base, k
    cdef double complex a
    if kind == 0:
        return
    base = 0
    while base < dim:
        for k in range(base, base + step):
            if kind == 3:
                psi[k + step] = -psi[k + step]
            elif kind == 1:
                a = psi[k]
                psi[k] = psi[k + step]
                psi[k + step] = a
            else:
                a = psi[k]
                psi[k] = -1j * psi[k + step]
                psi[k + step] = 1j * a
        base += 2 * step


cdef inline void _phase(double complex[::1] psi, const int[::1] pattern, const double complex[::1] table) noexcept nogil:
    cdef Py_ssize_t k
    for k in range(psi.shape[0]):
        psi[k] = psi[k] * table[pattern[k]]


def rx(double complex[::1] psi, Py_ssize_t n, Py_ssize_t site, double angle):
    _rx(psi, n, site, angle)


def rx_all(double complex[::1] psi, Py_ssize_t n, double angle):
    cdef Py_ssize_t site
    with nogil:
        for site in range(n):
            _rx(psi, n, site, angle)


def rzz(double complex[::1] psi, Py_ssize_t n, Py_ssize_t i, Py_ssize_t j, double theta):
    cdef double complex same = cos(0.5 * theta) - 1j * sin(0.5 * theta)
    cdef double complex diff = cos(0.5 * theta) + 1j * sin(0.5 * theta)
    cdef Py_ssize_t k
    with nogil:
        for k in range(psi.shape[0]):
            if ((k >> i) ^ (k >> j)) & 1:
                psi[k] = psi[k] * diff
            else:
                psi[k] = psi[k] * same


def pauli(double complex[::1] psi, Py_ssize_t n, Py_ssize_t site, int kind):
    _pauli(psi, n, site, kind)


def apply_phase(double complex[::1] psi, const int[::1] pattern, const double complex[::1] table):
    with nogil:
        _phase(psi, pattern, table)


def zz_expectations(double complex[::1] psi, Py_ssize_t n, const long[::1] edge_i, const long[::1] edge_j):
    cdef Py_ssize_t n_edges = edge_i.shape[0]
    cdef Py_ssize_t dim = psi.shape[0]
    cdef double[::1] acc = np.zeros(n_edges)
    cdef double[::1] prob = np.empty(dim)
    cdef Py_ssize_t k, e, a, b
    cdef double total = 0.0, odd
    with nogil:
        for k in range(dim):
            prob[k] = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
            total += prob[k]
        for e in range(n_edges):
            a = edge_i[e]
            b = edge_j[e]
            odd = 0.0
            for k in range(dim):
                odd += prob[k] * (((k >> a) ^ (k >> b)) & 1)
            acc[e] = total - 2.0 * odd
    return np.asarray(acc)


cdef class _Stream:
    cdef object rng
    cdef double[::1] buf
    cdef int pos

    def __cinit__(self, rng):
        self.rng = rng
        self.buf = rng.random(BLOCK)
        self.pos = 0

    cdef inline double next(self):
        if self.pos == BLOCK:
            self.buf = self.rng.random(BLOCK)
            self.pos = 0
        self.pos += 1
        return self.buf[self.pos - 1]


cdef void _damp(double complex[::1] psi, Py_ssize_t n, double p, _Stream stream):
    cdef Py_ssize_t dim = (<Py_ssize_t>1) << n
    cdef double[64] fac
    cdef double[64] keep
    cdef Py_ssize_t start = 0, q, site, k, step
    cdef unsigned long long mask, full = (1ULL << n) - 1
    cdef double u, norm0, total, prob, partial
    cdef int c
    for c in range(n + 1):
        fac[c] = pow(1.0 - p, c)
        keep[c] = sqrt(fac[c])
    while start < n:
        u = stream.next()
        mask = full ^ ((1ULL << start) - 1)
        norm0 = 0.0
        total = 0.0
        for k in range(dim):
            prob = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
            norm0 += prob
            total += prob * fac[__builtin_popcountll(k & mask)]
        if u * norm0 < total:
            total = sqrt(norm0 / total)
            for k in range(dim):
                psi[k] = psi[k] * (keep[__builtin_popcountll(k & mask)] * total)
            return
        q = n - 1
        for site in range(start, n):
            mask = ((1ULL << (site + 1)) - 1) ^ ((1ULL << start) - 1)
            partial = 0.0
            for k in range(dim):
                prob = psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
                partial += prob * fac[__builtin_popcountll(k & mask)]
            if u * norm0 >= partial:
                q = site
                break
        mask = ((1ULL << q) - 1) ^ ((1ULL << start) - 1)
        step = (<Py_ssize_t>1) << q
        norm0 = 0.0
        for k in range(dim):
            if (k >> q) & 1:
                continue
            psi[k] = psi[k + step] * (keep[__builtin_popcountll(k & mask)] * sqrt(p))
            psi[k + step] = 0.0
            norm0 += psi[k].real * psi[k].real + psi[k].imag * psi[k].imag
        norm0 = 1.0 / sqrt(norm0)
        for k in range(dim):
            psi[k] = psi[k] * norm0
        start = q + 1


cdef void _relax(double complex[::1] psi, Py_ssize_t n, double damp, double deph, _Stream stream):
    cdef Py_ssize_t site
    if deph > 0.0:
        for site in range(n):
            if stream.next() < deph:
                _pauli(psi, n, site, 3)
    if damp > 0.0:
        _damp(psi, n, damp, stream)


def trajectory(
    double complex[::1] psi,
    Py_ssize_t n,
    const double[::1] x_angles,
    const double complex[:, :, ::1] tables,
    const int[:, ::1] patterns,
    const long[::1] edge_i,
    const long[::1] edge_j,
    const long[::1] layer_ptr,
    double p1,
    double p2,
    double damp_x,
    double deph_x,
    double damp_zz,
    double deph_zz,
    rng,
):
    cdef _Stream stream = _Stream(rng)
    cdef Py_ssize_t n_colors = layer_ptr.shape[0] - 1
    cdef Py_ssize_t m, site, c, e
    cdef int kind
    for m in range(x_angles.shape[0]):
        for site in range(n):
            _rx(psi, n, site, x_angles[m])
        if p1 > 0.0:
            for site in range(n):
                if stream.next() < p1:
                    _pauli(psi, n, site, 1 + <int>(stream.next() * 3.0))
        _relax(psi, n, damp_x, deph_x, stream)
        for c in range(n_colors):
            _phase(psi, patterns[c], tables[m, c])
            if p2 > 0.0:
                for e in range(layer_ptr[c], layer_ptr[c + 1]):
                    if stream.next() < p2:
                        kind = 1 + <int>(stream.next() * 15.0)
                        _pauli(psi, n, edge_i[e], kind & 3)
                        _pauli(psi, n, edge_j[e], kind >> 2)
            _relax(psi, n, damp_zz, deph_zz, stream)
