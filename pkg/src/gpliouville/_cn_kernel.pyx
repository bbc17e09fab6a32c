# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled Crank-Nicolson kernels: banded LU without pivoting and the
fixed-point step on the time-midpoint nonlinearity.

Band storage is row oriented: ab[i, k] holds A[i, i + k - kl]. After
:func:`band_lu` the diagonal slot holds the reciprocal of the U pivot so the
solves need no complex division.
"""
import numpy as np
from libc.math cimport sqrt

ctypedef double complex cplx


cdef inline Py_ssize_t _imax(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a > b else b


cdef inline Py_ssize_t _imin(Py_ssize_t a, Py_ssize_t b) nogil:
    return a if a < b else b


def band_lu(cplx[:, ::1] ab, int kl, int ku):
    """In-place Doolittle factorization of a banded matrix (no pivoting)."""
    cdef Py_ssize_t m = ab.shape[0]
    cdef Py_ssize_t k, i, j
    cdef cplx inv, l
    for k in range(m):
        if ab[k, kl] == 0:
            raise ZeroDivisionError(f"zero pivot in row {k}")
        inv = 1.0 / ab[k, kl]
        for i in range(k + 1, _imin(m, k + kl + 1)):
            l = ab[i, k - i + kl] * inv
            ab[i, k - i + kl] = l
            for j in range(k + 1, _imin(m, k + ku + 1)):
                ab[i, j - i + kl] = ab[i, j - i + kl] - l * ab[k, j - k + kl]
        ab[k, kl] = inv


cdef void _band_solve(cplx[:, ::1] lu, int kl, int ku, cplx[::1] b) noexcept nogil:
    cdef Py_ssize_t m = lu.shape[0]
    cdef Py_ssize_t w = kl + ku + 1
    cdef Py_ssize_t i, j, j0, j1
    cdef cplx s
    cdef cplx *row
    cdef cplx *bp = &b[0]
    for i in range(m):
        row = &lu[i, 0] + kl - i
        s = bp[i]
        j0 = _imax(0, i - kl)
        for j in range(j0, i):
            s = s - row[j] * bp[j]
        bp[i] = s
    for i in range(m - 1, -1, -1):
        row = &lu[i, 0] + kl - i
        s = bp[i]
        j1 = _imin(m, i + ku + 1)
        for j in range(i + 1, j1):
            s = s - row[j] * bp[j]
        bp[i] = s * row[i]


cdef void _band_matvec(cplx[:, ::1] ab, int kl, int ku, cplx[::1] x, cplx[::1] y) noexcept nogil:
    cdef Py_ssize_t m = ab.shape[0]
    cdef Py_ssize_t i, j
    cdef cplx s
    for i in range(m):
        s = 0
        for j in range(_imax(0, i - kl), _imin(m, i + ku + 1)):
            s = s + ab[i, j - i + kl] * x[j]
        y[i] = s


def band_solve(cplx[:, ::1] lu, int kl, int ku, cplx[::1] b):
    """Solve in place with factors from :func:`band_lu`."""
    with nogil:
        _band_solve(lu, kl, ku, b)


def band_matvec(cplx[:, ::1] ab, int kl, int ku, cplx[::1] x):
    y = np.empty(ab.shape[0], dtype=np.complex128)
    cdef cplx[::1] yv = y
    with nogil:
        _band_matvec(ab, kl, ku, x, yv)
    return y


def cn_step(cplx[::1] u_old, cplx[:, ::1] lu, cplx[:, ::1] bmat, int kl, int ku,
            cplx[::1] b0, double dt, double tol, int max_iter, cplx[::1] u_new):
    """One step on the interior unknowns; returns (iterations, last update size).

    M u_new = B u_old + b0 + i dt g,  g = u_mid (1 - (|u_new|^2 + |u_old|^2)/2),
    iterated as a fixed point starting from u_old. ``lu`` holds the factors of M.
    """
    cdef Py_ssize_t m = u_old.shape[0]
    cdef Py_ssize_t i
    cdef int it = 0
    cdef double diff = 0.0, d
    cdef cplx mid, idt = 1j * dt
    rhs_lin_arr = np.empty(m, dtype=np.complex128)
    work_arr = np.empty(m, dtype=np.complex128)
    cdef cplx[::1] rhs_lin = rhs_lin_arr
    cdef cplx[::1] work = work_arr
    with nogil:
        _band_matvec(bmat, kl, ku, u_old, rhs_lin)
        for i in range(m):
            rhs_lin[i] = rhs_lin[i] + b0[i]
            u_new[i] = u_old[i]
        while it < max_iter:
            it += 1
            for i in range(m):
                mid = 0.5 * (u_new[i] + u_old[i])
                work[i] = rhs_lin[i] + idt * mid * (
                    1.0 - 0.5 * (u_new[i].real * u_new[i].real + u_new[i].imag * u_new[i].imag
                                 + u_old[i].real * u_old[i].real + u_old[i].imag * u_old[i].imag))
            _band_solve(lu, kl, ku, work)
            diff = 0.0
            for i in range(m):
                d = ((work[i].real - u_new[i].real) * (work[i].real - u_new[i].real)
                     + (work[i].imag - u_new[i].imag) * (work[i].imag - u_new[i].imag))
                if d > diff:
                    diff = d
                u_new[i] = work[i]
            diff = sqrt(diff)
            if diff <= tol:
                break
    return it, diff
