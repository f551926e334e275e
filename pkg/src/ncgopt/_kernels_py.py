"""Pure NumPy twin of the compiled eigensolver kernels.

Selected at import time by :mod:`ncgopt.kernels` when the Cython extension is
unavailable (or explicitly disabled).  The QL sweep below is the scalar hot
loop; the compiled twin implements the identical recurrence.
"""

from __future__ import annotations

import math

import numpy as np

_EPS = np.finfo(np.float64).eps
_MAX_QL_SWEEPS = 50


def tridiag_eigh(d, e, z=None, want_vectors=True):
    """Eigen-decomposition of a symmetric tridiagonal matrix by implicit-shift QL.

    Parameters
    ----------
    d : (n,) diagonal entries.
    e : (n-1,) sub-diagonal entries.
    z : optional (m, n) basis to rotate along with the diagonalization.  Pass
        the orthogonal factor of a Householder reduction to obtain eigenvectors
        of the original dense matrix; identity is used when omitted.
    want_vectors : accumulate rotations (skipped entirely when False).

    Returns
    -------
    (w, v) : eigenvalues ascending and, when requested, the matching columns
        of the rotated basis (else None).
    """
    d = np.asarray(d, dtype=np.float64).copy()
    n = d.shape[0]
    if n == 0:
        raise ValueError("empty tridiagonal matrix")
    ework = np.zeros(n, dtype=np.float64)
    if n > 1:
        ework[: n - 1] = np.asarray(e, dtype=np.float64)
    if want_vectors:
        zz = np.eye(n) if z is None else np.array(z, dtype=np.float64, copy=True)
    else:
        zz = None

    for l in range(n):
        sweeps = 0
        while True:
            # locate a negligible sub-diagonal element
            m = n - 1
            for mm in range(l, n - 1):
                dd = abs(d[mm]) + abs(d[mm + 1])
                if abs(ework[mm]) <= _EPS * dd:
                    m = mm
                    break
            if m == l:
                break
            sweeps += 1
            if sweeps > _MAX_QL_SWEEPS:
                raise ArithmeticError("QL iteration failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * ework[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ework[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ework[i]
                b = c * ework[i]
                r = math.hypot(f, g)
                ework[i + 1] = r
                if r == 0.0:
                    # rotation annihilated early; drop the shift and restart
                    d[i + 1] -= p
                    ework[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    fcol = zz[:, i + 1].copy()
                    zz[:, i + 1] = s * zz[:, i] + c * fcol
                    zz[:, i] = c * zz[:, i] - s * fcol
            if not underflow:
                d[l] -= p
                ework[l] = g
                ework[m] = 0.0

    order = np.argsort(d, kind="stable")
    w = d[order]
    v = zz[:, order] if want_vectors else None
    return w, v


def householder_tridiag(a):
    """Orthogonal reduction of a symmetric matrix to tridiagonal form.

    Returns (d, e, q) with a = q @ tridiag(d, e) @ q.T and q orthogonal.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1 :, k]
        nx = float(np.linalg.norm(x))
        if nx == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(nx, x[0])
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            continue
        v /= nv
        a[k + 1 :, k:] -= 2.0 * np.outer(v, v @ a[k + 1 :, k:])
        a[:, k + 1 :] -= 2.0 * np.outer(a[:, k + 1 :] @ v, v)
        q[:, k + 1 :] -= 2.0 * np.outer(q[:, k + 1 :] @ v, v)
    d = np.diag(a).copy()
    e = np.diag(a, -1).copy() if n > 1 else np.zeros(0)
    return d, e, q
