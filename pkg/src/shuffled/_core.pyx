# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SA-EM / Metropolis-Hastings loops.

Mirrors ``shuffled._pycore`` operation for operation; the two must produce
bit-identical results from the same pre-drawn random numbers.
"""
from libc.math cimport log, INFINITY
from libc.stdint cimport int64_t

cdef enum:
    GAUSSIAN = 0
    MULTINOMIAL = 1


cdef inline double _term(double count, double prob) noexcept nogil:
    if count == 0.0:
        return 0.0
    if prob <= 0.0:
        return -INFINITY
    return count * log(prob)


cdef inline double _swap_h(int kind, const double[::1] data, double scale,
                           const double[::1] psi, const int64_t[::1] perm,
                           int64_t i, int64_t j) noexcept nogil:
    cdef double a = psi[perm[i]]
    cdef double b = psi[perm[j]]
    cdef double xi = data[i]
    cdef double xj = data[j]
    cdef double h, old, new, d
    if kind == GAUSSIAN:
        d = xi - a
        h = d * d
        d = xj - b
        h = h + d * d
        d = xi - b
        h = h - d * d
        d = xj - a
        h = h - d * d
        return h / scale
    if xi == xj:
        return 0.0
    old = _term(xi, a) + _term(xj, b)
    new = _term(xi, b) + _term(xj, a)
    if old == -INFINITY:
        return INFINITY
    return new - old


cdef inline bint _mh(int kind, const double[::1] data, double scale,
                     const double[::1] psi, int64_t[::1] perm, int64_t[::1] inv,
                     int64_t i, int64_t j, double z) noexcept nogil:
    cdef double h = _swap_h(kind, data, scale, psi, perm, i, j)
    cdef int64_t t
    if -z <= h:
        t = perm[i]
        perm[i] = perm[j]
        perm[j] = t
        inv[perm[i]] = i
        inv[perm[j]] = j
        return True
    return False


def saem_chain(int kind, const double[::1] data, double scale, const double[::1] stat,
               double[::1] psi, double[::1] theta, int64_t[::1] perm, int64_t[::1] inv,
               const int64_t[::1] I, const int64_t[::1] J, const double[::1] Z,
               int64_t steps, double c, int64_t iter0):
    """Run ``steps`` SA-EM iterations in place; returns the accepted-move count.

    ``I``/``J``/``Z`` hold the proposal pairs and exponential draws; they are
    ignored (may be empty) when ``len(I) == 0``, i.e. the group cannot move.
    """
    cdef Py_ssize_t p = psi.shape[0]
    cdef bint propose = I.shape[0] > 0
    cdef int64_t k, accepted = 0
    cdef Py_ssize_t l
    cdef double g, gc
    with nogil:
        for k in range(steps):
            if propose:
                if _mh(kind, data, scale, psi, perm, inv, I[k], J[k], Z[k]):
                    accepted += 1
            g = 1.0 / (<double>(iter0 + k) + c)
            gc = 1.0 - g
            for l in range(p):
                psi[l] = gc * psi[l] + g * stat[inv[l]]
            for l in range(p):
                theta[l] = gc * theta[l] + g * psi[perm[l]]
    return accepted


def mh_trace(int kind, const double[::1] data, double scale, const double[::1] psi,
             int64_t[::1] perm, int64_t[::1] inv,
             const int64_t[::1] I, const int64_t[::1] J, const double[::1] Z,
             int64_t[:, ::1] out):
    """Run the MH chain at fixed ``psi``, writing the state after each step into ``out``."""
    cdef Py_ssize_t n = I.shape[0]
    cdef Py_ssize_t p = perm.shape[0]
    cdef Py_ssize_t k, l
    cdef int64_t accepted = 0
    with nogil:
        for k in range(n):
            if _mh(kind, data, scale, psi, perm, inv, I[k], J[k], Z[k]):
                accepted += 1
            for l in range(p):
                out[k, l] = perm[l]
    return accepted
