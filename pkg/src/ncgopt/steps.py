"""Single-update building blocks: exact-Hessian, inexact-Hessian, and
stochastic curvature-vs-gradient steps.

Each step estimates a noisy smallest eigenpair, then takes whichever of the
negative-curvature or negative-gradient updates promises the larger decrease.
A spuriously positive Rayleigh quotient contributes no curvature payoff, so
it simply hands the step to the gradient branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .core import Point, ProblemOracle
from .eigensolver import CurvatureEstimate, lanczos_min_eig
from .errors import ConfigError, DivergenceError


class StepKind(str, Enum):
    CURVATURE = "Curvature"
    GRADIENT = "Gradient"


def _sign(t: float) -> float:
    # sign(0) := +1; the descent argument only needs eta * v'grad >= 0
    return 1.0 if t >= 0 else -1.0


def _require_finite(x, what: str):
    if not np.all(np.isfinite(x)):
        raise DivergenceError(f"{what} has non-finite coordinates")


@dataclass
class StepResult:
    x_next: Point
    kind: StepKind
    estimate: CurvatureEstimate
    grad_used: Point
    predicted_decrease: float
    observed_decrease: float
    f_x: float
    f_next: float


@dataclass
class HessianSurrogate:
    """Matrix-free inexact Hessian at one iterate."""

    matvec: Callable[[Point], Point]
    op_norm_bound: float
    dense: Optional[Callable[[], np.ndarray]] = None


def exact_hessian_surrogate(oracle: ProblemOracle):
    """Surrogate factory that is the exact Hessian (eps3 = 0)."""

    def factory(x: Point, rng) -> HessianSurrogate:
        return HessianSurrogate(
            matvec=lambda v: oracle.hvp(x, v),
            op_norm_bound=oracle.params.l1,
            dense=lambda: oracle.dense_hessian(x),
        )

    return factory


def perturbed_hessian_surrogate(oracle: ProblemOracle, eps3: float, rng: np.random.Generator):
    """Exact Hessian plus a fixed random symmetric perturbation of spectral norm eps3."""
    from . import kernels

    if eps3 < 0:
        raise ConfigError("perturbation size must be nonnegative")
    raw = rng.standard_normal((oracle.dim, oracle.dim))
    sym = 0.5 * (raw + raw.T)
    sym /= kernels.spectral_norm(sym)
    pert = eps3 * sym

    def factory(x: Point, _rng) -> HessianSurrogate:
        return HessianSurrogate(
            matvec=lambda v: oracle.hvp(x, v) + pert @ v,
            op_norm_bound=oracle.params.l1 + eps3,
            dense=lambda: oracle.dense_hessian(x) + pert,
        )

    return factory


def subsampled_hessian_surrogate(oracle: ProblemOracle, size: int):
    """Sub-sampled Hessian over a fresh uniform (with replacement) index draw per iterate."""
    if oracle.n_components is None:
        raise ConfigError("sub-sampled surrogate needs a finite-sum problem")
    if size < 1:
        raise ConfigError("sample size must be positive")

    def factory(x: Point, rng: np.random.Generator) -> HessianSurrogate:
        idx = rng.integers(0, oracle.n_components, size=size)
        return HessianSurrogate(
            matvec=lambda v: oracle.mean_component_hvp(idx, x, v),
            op_norm_bound=oracle.params.l1,
            dense=lambda: oracle.mean_component_dense_hessian(idx, x),
        )

    return factory


def ncg_step(
    oracle: ProblemOracle,
    x: Point,
    eps_noise: float,
    delta: float,
    rng: np.random.Generator,
    *,
    grad: Optional[Point] = None,
) -> StepResult:
    """Exact-Hessian step: competing curvature and gradient payoffs.

    Curvature payoff 2|v'Hv|^3/(3 l2^2) (zero unless v'Hv < 0) against the
    gradient payoff ||grad||^2/(2 l1).  The winning branch's payoff is the
    predicted decrease, and the realized decrease is measured with two value
    calls.
    """
    _require_finite(x, "iterate")
    l1, l2 = oracle.params.l1, oracle.params.l2
    f0 = oracle.value(x)
    g = oracle.gradient(x) if grad is None else grad
    est = lanczos_min_eig(lambda v: oracle.hvp(x, v), oracle.dim, eps_noise, delta, rng, l1=l1)

    payoff_curv = 2.0 * max(0.0, -est.rayleigh) ** 3 / (3.0 * l2**2)
    payoff_grad = float(g @ g) / (2.0 * l1)
    if payoff_curv > payoff_grad:
        kind = StepKind.CURVATURE
        eta = 2.0 * abs(est.rayleigh) / l2
        x_next = x - eta * _sign(float(est.v @ g)) * est.v
    else:
        kind = StepKind.GRADIENT
        x_next = x - g / l1
    _require_finite(x_next, "updated iterate")

    f1 = oracle.value(x_next)
    return StepResult(
        x_next=x_next,
        kind=kind,
        estimate=est,
        grad_used=g,
        predicted_decrease=max(payoff_curv, payoff_grad),
        observed_decrease=f0 - f1,
        f_x=f0,
        f_next=f1,
    )


def ih_ncg_step(
    oracle: ProblemOracle,
    hessian_surrogate: HessianSurrogate,
    x: Point,
    eps_noise: float,
    delta: float,
    eps2: float,
    rng: np.random.Generator,
    *,
    grad: Optional[Point] = None,
) -> StepResult:
    """Inexact-Hessian step with the fixed eps2/l2 curvature step length.

    Valid under the surrogate accuracy condition ||H(x) - hess f(x)||_2 <=
    eps2/12 (asserted by the caller; checked by the harness on small d).
    """
    _require_finite(x, "iterate")
    if eps2 <= 0:
        raise ConfigError("eps2 must be positive")
    l1, l2 = oracle.params.l1, oracle.params.l2
    f0 = oracle.value(x)
    g = oracle.gradient(x) if grad is None else grad
    est = lanczos_min_eig(
        hessian_surrogate.matvec,
        oracle.dim,
        eps_noise,
        delta,
        rng,
        l1=hessian_surrogate.op_norm_bound,
    )

    payoff_curv = -(eps2**2) * est.rayleigh / (2.0 * l2**2) - 5.0 * eps2**3 / (24.0 * l2**2)
    payoff_grad = float(g @ g) / (2.0 * l1)
    if payoff_curv > payoff_grad:
        kind = StepKind.CURVATURE
        x_next = x - (eps2 / l2) * _sign(float(est.v @ g)) * est.v
    else:
        kind = StepKind.GRADIENT
        x_next = x - g / l1
    _require_finite(x_next, "updated iterate")

    f1 = oracle.value(x_next)
    return StepResult(
        x_next=x_next,
        kind=kind,
        estimate=est,
        grad_used=g,
        predicted_decrease=max(payoff_curv, payoff_grad),
        observed_decrease=f0 - f1,
        f_x=f0,
        f_next=f1,
    )


def ncg_s_step(
    oracle: ProblemOracle,
    x: Point,
    s1,
    s2,
    eps_noise: float,
    delta: float,
    eps1: float,
    eps2: float,
    rng: np.random.Generator,
    *,
    subsampled_grad: Optional[Point] = None,
) -> StepResult:
    """Stochastic step on sub-sampled gradient (s1) and sub-sampled Hessian (s2).

    Both payoff terms carry the sampling-error allowances, so they may be
    negative; the realized decrease is guaranteed only conditional on the
    concentration event.
    """
    _require_finite(x, "iterate")
    if oracle.n_components is None:
        raise ConfigError("stochastic step needs a finite-sum problem")
    s1 = np.asarray(s1, dtype=np.intp)
    s2 = np.asarray(s2, dtype=np.intp)
    if s1.size == 0 or s2.size == 0:
        raise ConfigError("sample sets must be nonempty")
    if eps1 <= 0 or eps2 <= 0:
        raise ConfigError("eps1 and eps2 must be positive")
    l1, l2 = oracle.params.l1, oracle.params.l2

    f0 = oracle.value(x)
    g = oracle.mean_component_gradient(s1, x) if subsampled_grad is None else subsampled_grad
    est = lanczos_min_eig(
        lambda v: oracle.mean_component_hvp(s2, x, v),
        oracle.dim,
        eps_noise,
        delta,
        rng,
        l1=l1,
    )

    payoff_curv = -(eps2**2) * est.rayleigh / (2.0 * l2**2) - 11.0 * eps2**3 / (48.0 * l2**2)
    payoff_grad = float(g @ g) / (4.0 * l1) - eps1**2 / (8.0 * l1)
    if payoff_curv > payoff_grad:
        kind = StepKind.CURVATURE
        x_next = x - (eps2 / l2) * _sign(float(est.v @ g)) * est.v
    else:
        kind = StepKind.GRADIENT
        x_next = x - g / l1
    _require_finite(x_next, "updated iterate")

    f1 = oracle.value(x_next)
    return StepResult(
        x_next=x_next,
        kind=kind,
        estimate=est,
        grad_used=g,
        predicted_decrease=max(payoff_curv, payoff_grad),
        observed_decrease=f0 - f1,
        f_x=f0,
        f_next=f1,
    )
