"""Matrix-free smallest-eigenvalue estimation and the dense certification oracle.

The Lanczos routine runs on the shifted operator l1*I - H (nonnegative when
||H||_2 <= l1), drives its largest Ritz value, and maps the extreme Ritz pair
back to the smallest eigenpair of H.  Its matvec budget follows the
min(d, ceil(log(d/delta^2) * sqrt(l1) / (2*sqrt(2*eps)))) law, with early exit
once consecutive extreme Ritz values stabilize to eps/10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from . import kernels
from .core import Point
from .errors import ConfigError, InputError, OracleError

_BREAKDOWN_TOL = 1e-12


@dataclass
class CurvatureEstimate:
    """Noisy smallest-eigenpair estimate of a symmetric operator.

    v : unit vector (the approximate eigenvector).
    rayleigh : v' H v, computed from one dedicated HVP on the returned v so
        branch tests downstream are exact in floating point.
    noise_level : additive accuracy target eps.
    hvp_spent : matvecs consumed by the Lanczos loop itself (excludes the one
        dedicated Rayleigh product); never exceeds ``budget``.
    budget : the matvec law above.
    converged : early exit or exact Krylov invariance before the budget.
    ritz_history : running estimate (shift-corrected) per iteration.
    """

    v: Point
    rayleigh: float
    noise_level: float
    hvp_spent: int
    budget: int
    converged: bool
    ritz_history: List[float] = field(default_factory=list)


def lanczos_budget(d: int, eps: float, delta: float, l1: float) -> int:
    """Matvec budget for one estimate at noise eps and confidence 1-delta."""
    formula = math.log(d / delta**2) * math.sqrt(l1) / (2.0 * math.sqrt(2.0 * eps))
    return max(1, min(d, math.ceil(formula)))


def lanczos_min_eig(
    hvp: Callable[[Point], Point],
    d: int,
    eps: float,
    delta: float,
    rng: np.random.Generator,
    *,
    l1: float,
) -> CurvatureEstimate:
    """Estimate the smallest eigenvalue of a symmetric operator with ||H||_2 <= l1.

    With probability at least 1-delta over the random unit start, the returned
    Rayleigh quotient satisfies rayleigh <= lambda_min(H) + eps (it is >=
    lambda_min always).  The Lanczos basis is fully reorthogonalized, so ghost
    eigenvalues cannot appear at desk scale.
    """
    if not (eps > 0 and math.isfinite(eps)):
        raise ConfigError(f"noise level must be positive, got {eps}")
    if not (0 < delta < 1):
        raise ConfigError(f"confidence parameter must lie in (0,1), got {delta}")
    if not (l1 > 0 and math.isfinite(l1)):
        raise ConfigError(f"operator norm bound must be positive, got {l1}")
    if d < 1:
        raise ConfigError("operator dimension must be at least 1")

    budget = lanczos_budget(d, eps, delta, l1)

    def shifted(vec):
        out = np.asarray(hvp(vec), dtype=np.float64).reshape(-1)
        if out.shape[0] != d or not np.all(np.isfinite(out)):
            raise OracleError("matrix-free operator returned a non-finite or misshapen vector")
        return l1 * vec - out

    q = rng.standard_normal(d)
    q /= np.linalg.norm(q)
    basis = np.empty((d, budget))
    alphas = np.empty(budget)
    betas = np.empty(max(budget - 1, 0))

    converged = False
    history: List[float] = []
    theta_prev = None
    k = 0
    beta = 0.0
    q_prev = np.zeros(d)
    for j in range(budget):
        basis[:, j] = q
        w = shifted(q)
        alpha = float(q @ w)
        alphas[j] = alpha
        k = j + 1

        w -= alpha * q + beta * q_prev
        # full reorthogonalization, two passes
        w -= basis[:, :k] @ (basis[:, :k].T @ w)
        w -= basis[:, :k] @ (basis[:, :k].T @ w)
        beta = float(np.linalg.norm(w))

        theta = float(kernels.tridiag_eigh(alphas[:k], betas[: k - 1], want_vectors=False)[0][-1])
        history.append(l1 - theta)
        if beta < _BREAKDOWN_TOL:
            # Krylov space is exactly invariant: the estimate is exact on it
            converged = True
            break
        if theta_prev is not None and abs(theta - theta_prev) < eps / 10.0:
            # stabilized Ritz value; accept only once its residual confirms
            # convergence, otherwise a spectral cluster is still resolving
            _, yv = kernels.tridiag_eigh(alphas[:k], betas[: k - 1], want_vectors=True)
            if beta * abs(float(yv[-1, -1])) <= eps / 4.0:
                converged = True
                break
        theta_prev = theta
        if k == budget:
            break
        betas[j] = beta
        q_prev = q
        q = w / beta

    _, evecs = kernels.tridiag_eigh(alphas[:k], betas[: k - 1], want_vectors=True)
    v = basis[:, :k] @ evecs[:, -1]
    v /= np.linalg.norm(v)

    hv = np.asarray(hvp(v), dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(hv)):
        raise OracleError("matrix-free operator returned non-finite entries")
    rayleigh = float(v @ hv)

    return CurvatureEstimate(
        v=v,
        rayleigh=rayleigh,
        noise_level=float(eps),
        hvp_spent=k,
        budget=budget,
        converged=converged,
        ritz_history=history,
    )


def dense_min_eig(h_matrix) -> tuple:
    """Exact smallest eigenpair of a dense symmetric matrix.

    Householder reduction followed by the in-repo implicit-shift QL sweep.
    """
    h = np.asarray(h_matrix, dtype=np.float64)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise InputError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(h))) if h.size else 0.0)
    if float(np.max(np.abs(h - h.T))) > 1e-10 * scale:
        raise InputError("matrix is not symmetric")
    w, v = kernels.symmetric_eigh(0.5 * (h + h.T))
    vec = v[:, 0]
    return float(w[0]), vec / np.linalg.norm(vec)
