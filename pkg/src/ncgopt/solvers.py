"""Iterative drivers: gradient descent, negative curvature descent, the
adaptive-noise curvature-vs-gradient solvers, and their inexact-Hessian and
stochastic variants.

Every driver resets the oracle counters at run start, logs one trace row per
iteration (the last row is the returned iterate), enforces the per-step
decrease guarantee where it is unconditional, and attaches a dense
stationarity certificate whenever the dimension allows one.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import kernels
from .core import OracleCounters, Point, ProblemOracle, as_point, dense_cap
from .errors import BoundExceededError, ConfigError, ConstantsError
from .harness.reporting import RunTrace, StationarityCertificate, TraceRow, certify
from .rng import RngStream, run_stream
from .steps import StepKind, ih_ncg_step, ncg_s_step, ncg_step


@dataclass
class SolveConfig:
    """Targets and safety knobs shared by all solvers.

    Exactly one of eps2 / alpha fixes the second-order target; with alpha the
    resolved eps2 = eps1**alpha is recorded explicitly.  max_iters defaults to
    twice the theoretical bound of the chosen algorithm.
    """

    eps1: float
    eps2: Optional[float] = None
    alpha: Optional[float] = None
    delta: float = 0.1
    max_iters: Optional[int] = None
    seed: int = 0
    agd_smoothness: str = "safe"
    check_sampling: bool = True

    def __post_init__(self):
        if not (self.eps1 > 0):
            raise ConfigError(f"eps1 must be positive, got {self.eps1}")
        if not (0 < self.delta < 1):
            raise ConfigError(f"delta must lie in (0,1), got {self.delta}")
        if self.alpha is not None:
            if not (0 < self.alpha <= 1):
                raise ConfigError(f"alpha must lie in (0,1], got {self.alpha}")
            resolved = self.eps1**self.alpha
            if self.eps2 is not None and not math.isclose(self.eps2, resolved, rel_tol=1e-12):
                raise ConfigError("give eps2 or alpha, not inconsistent both")
            self.eps2 = resolved
        if self.eps2 is not None and not (self.eps2 > 0):
            raise ConfigError(f"eps2 must be positive, got {self.eps2}")
        if self.agd_smoothness not in ("safe", "paper"):
            raise ConfigError("agd_smoothness must be 'safe' or 'paper'")

    def require_eps2(self) -> float:
        if self.eps2 is None:
            raise ConfigError("this solver needs eps2 (or alpha)")
        return self.eps2

    def require_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        # derive from an explicit eps2 = eps1**alpha when possible
        if self.eps2 is None:
            raise ConfigError("this solver needs alpha (or eps2 with eps1 < 1)")
        if not (0 < self.eps1 < 1):
            raise ConfigError("alpha can only be derived from eps2 when eps1 < 1")
        alpha = math.log(self.eps2) / math.log(self.eps1)
        if not (0 < alpha <= 1):
            raise ConfigError(f"derived alpha {alpha:.4g} outside (0,1]; pass alpha explicitly")
        return alpha


@dataclass
class SolveReport:
    algorithm: str
    x_final: Point
    iters: int
    trace: RunTrace
    counters: OracleCounters
    theoretical_iter_bound: int
    certificate: Optional[StationarityCertificate]
    terminated: bool = True
    flags: List[str] = field(default_factory=list)
    delta_gap_used: float = 0.0
    seed: int = 0
    wall_time_s: float = 0.0


def _decrease_tol(f: float) -> float:
    return 1e-9 * (1.0 + abs(f))


def declared_gap(oracle: ProblemOracle, f0: float) -> float:
    """Delta used in the confidence-splitting and bound formulas.

    Defaults to f(x0) minus the known problem minimum when available, else
    the declared delta_gap constant.
    """
    if oracle.known_min is not None:
        return max(f0 - oracle.known_min, 0.0)
    return oracle.params.delta_gap


def _resolve_max_iters(bound: int, max_iters: Optional[int], algo: str) -> int:
    if max_iters is None:
        return 2 * bound
    if max_iters < bound:
        warnings.warn(
            f"{algo}: max_iters={max_iters} is below the theoretical bound {bound}",
            stacklevel=3,
        )
    return max_iters


class _Recorder:
    """Per-run trace assembly and counter bookkeeping."""

    def __init__(self, oracle: ProblemOracle, reset: bool):
        self.oracle = oracle
        if reset:
            oracle.counters.reset()
        self.trace = RunTrace()
        self.t0 = time.perf_counter_ns()
        self.flags: List[str] = []

    def row(self, it, f, grad_norm, kind, rayleigh=None, noise=None):
        c = self.oracle.counters
        self.trace.append(
            TraceRow(
                iter=it,
                f=float(f),
                grad_norm=float(grad_norm),
                step_kind=str(kind.value if isinstance(kind, StepKind) else kind),
                rayleigh=None if rayleigh is None else float(rayleigh),
                noise_level=None if noise is None else float(noise),
                hvp_cum=c.total_hvp(),
                grad_cum=c.total_grad(),
                wall_ns=time.perf_counter_ns() - self.t0,
            )
        )

    def iterate_flags(self, it, x):
        tag = self.oracle.iterate_flag(x)
        if tag is not None:
            self.flags.append(f"{tag}@{it}")
        return tag is not None

    def outside_declared_region(self, x, x_next) -> bool:
        # declared constants only bind where the problem's iterate check passes
        return (
            self.oracle.iterate_flag(x) is not None
            or self.oracle.iterate_flag(x_next) is not None
        )

    def wall_s(self) -> float:
        return (time.perf_counter_ns() - self.t0) / 1e9


def _certificate_or_none(oracle, x, eps1, eps2_level, compute=True):
    if not compute or oracle.dim > dense_cap():
        return None
    return certify(oracle, x, eps1, eps2_level)


def gd(
    oracle: ProblemOracle,
    x0: Point,
    eps: float,
    *,
    max_iters: Optional[int] = None,
) -> SolveReport:
    """Plain 1/l1-step gradient descent to ||grad f|| <= eps."""
    if not (eps > 0):
        raise ConfigError(f"eps must be positive, got {eps}")
    l1 = oracle.params.l1
    rec = _Recorder(oracle, reset=True)
    x = as_point(x0, oracle.dim)
    f = oracle.value(x)
    gap = declared_gap(oracle, f)
    bound = math.ceil(1.0 + 2.0 * l1 * gap / eps**2)
    cap = _resolve_max_iters(bound, max_iters, "gd")

    f_prev = None
    for j in range(1, cap + 1):
        g = oracle.gradient(x)
        gn = float(np.linalg.norm(g))
        if f_prev is not None and f > f_prev + _decrease_tol(f_prev):
            if oracle.iterate_flag(x) is not None:
                rec.flags.append(f"nonmonotone@{j}")
            else:
                raise ConstantsError(f"gd increased f at iteration {j}; check the declared l1")
        rec.iterate_flags(j, x)
        if gn <= eps:
            rec.row(j, f, gn, "Return")
            # a first-order method only certifies the curvature floor that
            # smoothness itself guarantees
            return SolveReport(
                algorithm="gd",
                x_final=x,
                iters=j,
                trace=rec.trace,
                counters=oracle.counters.snapshot(),
                theoretical_iter_bound=bound,
                certificate=_certificate_or_none(oracle, x, eps, l1),
                flags=rec.flags,
                delta_gap_used=gap,
                wall_time_s=rec.wall_s(),
            )
        rec.row(j, f, gn, StepKind.GRADIENT)
        x = x - g / l1
        f_prev = f
        f = oracle.value(x)
    raise BoundExceededError(f"gd did not reach ||grad|| <= {eps} within {cap} iterations")


def ncd(
    oracle: ProblemOracle,
    x0: Point,
    eps: float,
    delta: float,
    *,
    eps1: Optional[float] = None,
    seed: int = 0,
    max_iters: Optional[int] = None,
) -> SolveReport:
    """Negative curvature descent at fixed Lanczos noise eps/2.

    The pure form steps along the noisy curvature direction while the
    Rayleigh quotient stays below -eps/2 and returns as soon as it clears.
    With eps1 given, the run instead uses the competing-payoff update and the
    two-sided stopping rule (Rayleigh above -eps/2 and ||grad f|| <= eps1),
    keeping the fixed per-iteration noise eps/2: this is the constant-noise
    baseline the adaptive solvers are benchmarked against, differing from
    them in the noise rule only.
    """
    if not (eps > 0):
        raise ConfigError(f"eps must be positive, got {eps}")
    if not (0 < delta < 1):
        raise ConfigError(f"delta must lie in (0,1), got {delta}")
    if eps1 is not None:
        cfg = SolveConfig(eps1=eps1, eps2=eps, delta=delta, max_iters=max_iters, seed=seed)
        return _ncg_a_driver(
            oracle,
            x0,
            cfg,
            eps2=eps,
            noise_exponent=1.0,
            algo="ncd",
            fixed_noise=True,
            certificate_level=max(eps, eps1),
        )

    l1, l2 = oracle.params.l1, oracle.params.l2
    rec = _Recorder(oracle, reset=True)
    stream = run_stream(seed)
    x = as_point(x0, oracle.dim)
    f = oracle.value(x)
    gap = declared_gap(oracle, f)
    denom = 12.0 * l2**2 * gap / eps**3
    bound = math.ceil(1.0 + denom)
    delta_prime = delta / (1.0 + denom)
    cap = _resolve_max_iters(bound, max_iters, "ncd")

    for j in range(1, cap + 1):
        g = oracle.gradient(x)
        gn = float(np.linalg.norm(g))
        rec.iterate_flags(j, x)
        est = lanczos_min_eig_counted(oracle, x, eps / 2.0, delta_prime, stream.child("lanczos", j))
        ray = est.rayleigh
        if ray <= -eps / 2.0:
            eta = 2.0 * abs(ray) / l2
            x_next = x - eta * _sign(float(est.v @ g)) * est.v
            f_next = oracle.value(x_next)
            predicted = 2.0 * abs(ray) ** 3 / (3.0 * l2**2)
            if f - f_next < predicted - _decrease_tol(f):
                if rec.outside_declared_region(x, x_next):
                    rec.flags.append(f"nonmonotone@{j}")
                else:
                    raise ConstantsError(f"ncd curvature step failed its decrease at iteration {j}")
            rec.row(j, f, gn, StepKind.CURVATURE, ray, eps / 2.0)
        else:
            rec.row(j, f, gn, "Return", ray, eps / 2.0)
            return SolveReport(
                algorithm="ncd",
                x_final=x,
                iters=j,
                trace=rec.trace,
                counters=oracle.counters.snapshot(),
                theoretical_iter_bound=bound,
                certificate=_certificate_or_none(oracle, x, eps, eps),
                flags=rec.flags,
                delta_gap_used=gap,
                seed=seed,
                wall_time_s=rec.wall_s(),
            )
        x, f = x_next, f_next
    raise BoundExceededError(f"ncd exceeded {cap} iterations")


def _sign(t: float) -> float:
    return 1.0 if t >= 0 else -1.0


def lanczos_min_eig_counted(oracle, x, eps, delta, stream: RngStream):
    from .eigensolver import lanczos_min_eig

    return lanczos_min_eig(
        lambda v: oracle.hvp(x, v),
        oracle.dim,
        eps,
        delta,
        stream.generator(),
        l1=oracle.params.l1,
    )


def _ncg_a_driver(
    oracle: ProblemOracle,
    x0: Point,
    cfg: SolveConfig,
    *,
    eps2: float,
    noise_exponent: float,
    algo: str,
    stream: Optional[RngStream] = None,
    reset_counters: bool = True,
    compute_certificate: bool = True,
    certificate_level: Optional[float] = None,
    fixed_noise: bool = False,
) -> SolveReport:
    l1, l2 = oracle.params.l1, oracle.params.l2
    eps1 = cfg.eps1
    rec = _Recorder(oracle, reset=reset_counters)
    if stream is None:
        stream = run_stream(cfg.seed)
    x = as_point(x0, oracle.dim)
    f0 = oracle.value(x)
    gap = declared_gap(oracle, f0)
    denom = max(12.0 * l2**2 / eps2**3, 2.0 * l1 / eps1**2) * gap
    bound = math.ceil(1.0 + denom)
    delta_prime = cfg.delta / (1.0 + denom)
    cap = _resolve_max_iters(bound, cfg.max_iters, algo)

    for j in range(1, cap + 1):
        g = oracle.gradient(x)
        gn = float(np.linalg.norm(g))
        noise = eps2 / 2.0 if fixed_noise else max(eps2, gn**noise_exponent) / 2.0
        rec.iterate_flags(j, x)
        step = ncg_step(
            oracle, x, noise, delta_prime, stream.child("lanczos", j).generator(), grad=g
        )
        ray = step.estimate.rayleigh
        if ray > -eps2 / 2.0 and gn <= eps1:
            rec.row(j, step.f_x, gn, "Return", ray, noise)
            level = certificate_level if certificate_level is not None else max(eps1, eps2)
            return SolveReport(
                algorithm=algo,
                x_final=x,
                iters=j,
                trace=rec.trace,
                counters=oracle.counters.snapshot(),
                theoretical_iter_bound=bound,
                certificate=_certificate_or_none(oracle, x, eps1, level, compute_certificate),
                flags=rec.flags,
                delta_gap_used=gap,
                seed=cfg.seed,
                wall_time_s=rec.wall_s(),
            )
        if step.observed_decrease < step.predicted_decrease - _decrease_tol(step.f_x):
            if rec.outside_declared_region(x, step.x_next):
                rec.flags.append(f"nonmonotone@{j}")
            else:
                raise ConstantsError(
                    f"{algo} step failed its guaranteed decrease at iteration {j}; "
                    "check the declared l1/l2"
                )
        rec.row(j, step.f_x, gn, step.kind, ray, noise)
        x = step.x_next
    raise BoundExceededError(f"{algo} exceeded {cap} iterations (bound {bound})")


def ncg_a1(oracle: ProblemOracle, x0: Point, cfg: SolveConfig, **driver_kwargs) -> SolveReport:
    """Adaptive-noise solver; per-iteration noise max(eps2, ||grad||)/2."""
    return _ncg_a_driver(
        oracle,
        x0,
        cfg,
        eps2=cfg.require_eps2(),
        noise_exponent=1.0,
        algo="ncg-a1",
        **driver_kwargs,
    )


def ncg_a2(oracle: ProblemOracle, x0: Point, cfg: SolveConfig, **driver_kwargs) -> SolveReport:
    """Adaptive-noise solver with exponent alpha; noise max(eps1**alpha, ||grad||**alpha)/2."""
    alpha = cfg.require_alpha()
    eps2 = cfg.eps1**alpha
    return _ncg_a_driver(
        oracle,
        x0,
        cfg,
        eps2=eps2,
        noise_exponent=alpha,
        algo="ncg-a2",
        certificate_level=eps2,
        **driver_kwargs,
    )


def ih_ncg_a(
    oracle: ProblemOracle,
    surrogate_factory: Callable,
    x0: Point,
    cfg: SolveConfig,
    *,
    eps3: Optional[float] = None,
) -> SolveReport:
    """Adaptive-noise solver on an inexact Hessian surrogate.

    surrogate_factory(x, rng) -> HessianSurrogate must satisfy
    ||H(x) - hess f(x)||_2 <= eps3 <= eps2/12; on certifiable dimensions the
    bound is checked per iterate and violations are recorded as flags while
    the run continues.
    """
    l1, l2 = oracle.params.l1, oracle.params.l2
    eps1, eps2 = cfg.eps1, cfg.require_eps2()
    eps3_eff = eps2 / 12.0 if eps3 is None else eps3
    rec = _Recorder(oracle, reset=True)
    stream = run_stream(cfg.seed)
    x = as_point(x0, oracle.dim)
    f0 = oracle.value(x)
    gap = declared_gap(oracle, f0)
    denom = max(24.0 * l2**2 / eps2**3, 2.0 * l1 / eps1**2) * gap
    bound = math.ceil(1.0 + denom)
    delta_prime = cfg.delta / (1.0 + denom)
    cap = _resolve_max_iters(bound, cfg.max_iters, "ih-ncg-a")
    checkable = cfg.check_sampling and oracle.dim <= dense_cap()

    for j in range(1, cap + 1):
        g = oracle.gradient(x)
        gn = float(np.linalg.norm(g))
        noise = max(eps2, gn) / 2.0
        rec.iterate_flags(j, x)
        surrogate = surrogate_factory(x, stream.child("surrogate", j).generator())
        assumption_ok = True
        if checkable and surrogate.dense is not None:
            err = kernels.spectral_norm(surrogate.dense() - oracle.dense_hessian(x))
            if err > eps3_eff + 1e-12:
                assumption_ok = False
                rec.flags.append(f"assumption@{j}")
        step = ih_ncg_step(
            oracle,
            surrogate,
            x,
            noise,
            delta_prime,
            eps2,
            stream.child("lanczos", j).generator(),
            grad=g,
        )
        ray = step.estimate.rayleigh
        if ray > -eps2 / 2.0 and gn <= eps1:
            rec.row(j, step.f_x, gn, "Return", ray, noise)
            level = max(eps1, eps2) + eps3_eff
            return SolveReport(
                algorithm="ih-ncg-a",
                x_final=x,
                iters=j,
                trace=rec.trace,
                counters=oracle.counters.snapshot(),
                theoretical_iter_bound=bound,
                certificate=_certificate_or_none(oracle, x, eps1, level),
                flags=rec.flags,
                delta_gap_used=gap,
                seed=cfg.seed,
                wall_time_s=rec.wall_s(),
            )
        if step.observed_decrease < step.predicted_decrease - _decrease_tol(step.f_x):
            verified = assumption_ok and checkable and surrogate.dense is not None
            if verified and not rec.outside_declared_region(x, step.x_next):
                raise ConstantsError(
                    f"ih-ncg-a step failed its guaranteed decrease at iteration {j} "
                    "with a verified surrogate; check the declared l1/l2"
                )
            rec.flags.append(f"nonmonotone@{j}")
        rec.row(j, step.f_x, gn, step.kind, ray, noise)
        x = step.x_next
    raise BoundExceededError(f"ih-ncg-a exceeded {cap} iterations (bound {bound})")


def sncg(
    oracle: ProblemOracle,
    x0: Point,
    cfg: SolveConfig,
    s1_size: int,
    s2_size: int,
) -> SolveReport:
    """Stochastic solver on sub-sampled gradients and Hessians.

    Samples are drawn uniformly with replacement, one pair (s1, s2) per
    iteration, shared by the termination test and the step.  Hitting the
    iteration cap is reported (terminated=False), not raised: termination
    itself is probabilistic here.
    """
    if oracle.n_components is None:
        raise ConfigError("sncg needs a finite-sum problem")
    if s1_size < 1 or s2_size < 1:
        raise ConfigError("sample sizes must be positive")
    l1, l2 = oracle.params.l1, oracle.params.l2
    eps1 = cfg.eps1
    alpha = cfg.require_alpha()
    eps2 = cfg.require_eps2()
    rec = _Recorder(oracle, reset=True)
    stream = run_stream(cfg.seed)
    x = as_point(x0, oracle.dim)
    f0 = oracle.value(x)
    gap = declared_gap(oracle, f0)
    denom = max(48.0 * l2**2 / eps2**3, 8.0 * l1 / eps1**2) * gap
    bound = math.ceil(1.0 + denom)
    delta_prime = cfg.delta / (1.0 + denom)
    cap = _resolve_max_iters(bound, cfg.max_iters, "sncg")
    checkable = cfg.check_sampling and oracle.dim <= dense_cap()
    eps3 = eps2 / 24.0
    eps4 = min(eps1 / (2.0 * math.sqrt(2.0)), eps2**2 / (24.0 * l2))
    n = oracle.n_components

    for j in range(1, cap + 1):
        s1 = stream.child("s1", j).generator().integers(0, n, size=s1_size)
        s2 = stream.child("s2", j).generator().integers(0, n, size=s2_size)
        g = oracle.mean_component_gradient(s1, x)
        gn = float(np.linalg.norm(g))
        noise = max(eps2, gn**alpha) / 2.0
        rec.iterate_flags(j, x)
        if checkable:
            true_g = oracle._grad_fn(x)
            grad_err = float(np.linalg.norm(g - true_g))
            hess_err = kernels.spectral_norm(
                oracle.mean_component_dense_hessian(s2, x) - oracle.dense_hessian(x)
            )
            if grad_err > eps4 + 1e-12 or hess_err > eps3 + 1e-12:
                rec.flags.append(f"sampling@{j}")
        step = ncg_s_step(
            oracle,
            x,
            s1,
            s2,
            noise,
            delta_prime,
            eps1,
            eps2,
            stream.child("lanczos", j).generator(),
            subsampled_grad=g,
        )
        ray = step.estimate.rayleigh
        if ray > -eps2 / 2.0 and gn <= eps1:
            rec.row(j, step.f_x, gn, "Return", ray, noise)
            return SolveReport(
                algorithm="sncg",
                x_final=x,
                iters=j,
                trace=rec.trace,
                counters=oracle.counters.snapshot(),
                theoretical_iter_bound=bound,
                certificate=_certificate_or_none(oracle, x, 2.0 * eps1, 2.0 * eps2),
                flags=rec.flags,
                delta_gap_used=gap,
                seed=cfg.seed,
                wall_time_s=rec.wall_s(),
            )
        if step.observed_decrease < step.predicted_decrease - _decrease_tol(step.f_x):
            rec.flags.append(f"nonmonotone@{j}")
        rec.row(j, step.f_x, gn, step.kind, ray, noise)
        x = step.x_next

    # probabilistic termination: report the capped run instead of raising
    g = oracle.mean_component_gradient(
        stream.child("s1", cap + 1).generator().integers(0, n, size=s1_size), x
    )
    rec.row(cap + 1, oracle.value(x), float(np.linalg.norm(g)), "Return")
    return SolveReport(
        algorithm="sncg",
        x_final=x,
        iters=cap + 1,
        trace=rec.trace,
        counters=oracle.counters.snapshot(),
        theoretical_iter_bound=bound,
        certificate=_certificate_or_none(oracle, x, 2.0 * eps1, 2.0 * eps2),
        terminated=False,
        flags=rec.flags,
        delta_gap_used=gap,
        seed=cfg.seed,
        wall_time_s=rec.wall_s(),
    )
