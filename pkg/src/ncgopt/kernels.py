"""Eigensolver kernel selection: compiled QL sweep when built, NumPy twin otherwise.

``NCGOPT_PURE_KERNELS=1`` forces the pure implementation (used by the
benchmark to compare both builds).
"""

from __future__ import annotations

import os

from . import _kernels_py

householder_tridiag = _kernels_py.householder_tridiag

if os.environ.get("NCGOPT_PURE_KERNELS", "0") == "1":
    COMPILED = False
    tridiag_eigh = _kernels_py.tridiag_eigh
else:
    try:
        from . import _kernels_cy

        COMPILED = True
        tridiag_eigh = _kernels_cy.tridiag_eigh
    except ImportError:
        COMPILED = False
        tridiag_eigh = _kernels_py.tridiag_eigh


def symmetric_eigh(a):
    """Full eigen-decomposition of a dense symmetric matrix (ascending)."""
    d, e, q = householder_tridiag(a)
    return tridiag_eigh(d, e, z=q, want_vectors=True)


def symmetric_eigvals(a):
    """Eigenvalues only (ascending) of a dense symmetric matrix."""
    d, e, _ = householder_tridiag(a)
    w, _ = tridiag_eigh(d, e, want_vectors=False)
    return w


def spectral_norm(a):
    """Spectral norm of a dense symmetric matrix."""
    w = symmetric_eigvals(a)
    return max(abs(float(w[0])), abs(float(w[-1])))
