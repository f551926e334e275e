# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the QL implicit-shift sweep in _kernels_py.

The recurrence and operation order match the pure implementation so both
builds agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport copysign, fabs, hypot

cnp.import_array()

cdef double _EPS = np.finfo(np.float64).eps
cdef int _MAX_QL_SWEEPS = 50


def tridiag_eigh(d, e, z=None, bint want_vectors=True):
    """See ncgopt._kernels_py.tridiag_eigh; identical contract."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] darr = np.asarray(d, dtype=np.float64).copy()
    cdef Py_ssize_t n = darr.shape[0]
    if n == 0:
        raise ValueError("empty tridiagonal matrix")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ework = np.zeros(n, dtype=np.float64)
    if n > 1:
        ework[: n - 1] = np.asarray(e, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zz
    if want_vectors:
        if z is None:
            zz = np.eye(n)
        else:
            zz = np.array(z, dtype=np.float64, copy=True)
    else:
        zz = np.zeros((0, 0))

    cdef double[:] dv = darr
    cdef double[:] ev = ework
    cdef double[:, :] zv = zz
    cdef Py_ssize_t nrows = zz.shape[0]

    cdef Py_ssize_t l, m, mm, i, k, sweeps
    cdef double dd, g, r, s, c, p, f, b, fcol
    cdef bint underflow

    for l in range(n):
        sweeps = 0
        while True:
            m = n - 1
            for mm in range(l, n - 1):
                dd = fabs(dv[mm]) + fabs(dv[mm + 1])
                if fabs(ev[mm]) <= _EPS * dd:
                    m = mm
                    break
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_QL_SWEEPS:
                raise ArithmeticError("QL iteration failed to converge")
            g = (dv[l + 1] - dv[l]) / (2.0 * ev[l])
            r = hypot(g, 1.0)
            g = dv[m] - dv[l] + ev[l] / (g + copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ev[i]
                b = c * ev[i]
                r = hypot(f, g)
                ev[i + 1] = r
                if r == 0.0:
                    dv[i + 1] -= p
                    ev[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = dv[i + 1] - p
                r = (dv[i] - g) * s + 2.0 * c * b
                p = s * r
                dv[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(nrows):
                        fcol = zv[k, i + 1]
                        zv[k, i + 1] = s * zv[k, i] + c * fcol
                        zv[k, i] = c * zv[k, i] - s * fcol
            if not underflow:
                dv[l] -= p
                ev[l] = g
                ev[m] = 0.0

    order = np.argsort(darr, kind="stable")
    w = darr[order]
    v = zz[:, order] if want_vectors else None
    return w, v
