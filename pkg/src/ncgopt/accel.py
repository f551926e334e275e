"""Accelerated-gradient machinery for almost-convex regions and the
alternating solvers that pair it with the adaptive curvature phase.

One outer round: run the adaptive solver at a tightened first-order target so
the returned anchor has certified curvature, then (if the true gradient is
still large) minimize the anchored hinge-penalized objective with accelerated
gradient descent to shrink the gradient cheaply.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
import numpy as np

from .core import Point, ProblemOracle, as_point
from .errors import BoundExceededError, ConfigError
from .harness.reporting import RunTrace, TraceRow
from .rng import run_stream
from .solvers import (
    SolveConfig,
    SolveReport,
    _certificate_or_none,
    _decrease_tol,
    _resolve_max_iters,
    declared_gap,
    ncg_a1,
    ncg_a2,
)


@dataclass
class PenalizedObjective:
    """Base objective plus weight * hinge(||x - anchor|| - radius)^2.

    The penalty (and its gradient) vanish inside the anchor ball, so the
    penalized objective agrees with the base objective there; outside, the
    quadratic hinge confines accelerated descent near the anchor.
    """

    base: ProblemOracle
    anchor: Point
    radius: float
    weight: float

    def penalty(self, x: Point) -> float:
        excess = float(np.linalg.norm(x - self.anchor)) - self.radius
        return self.weight * max(excess, 0.0) ** 2

    def value(self, x: Point) -> float:
        return self.base.value(x) + self.penalty(x)

    def gradient(self, x: Point) -> Point:
        g = self.base.gradient(x)
        diff = x - self.anchor
        r = float(np.linalg.norm(diff))
        excess = r - self.radius
        if excess > 0.0 and r > 0.0:
            g = g + 2.0 * self.weight * excess * diff / r
        return g


class _ProxShifted:
    """g(z) = f(z) + gamma * ||z - center||^2 (strongly convex shift)."""

    def __init__(self, obj, center: Point, gamma: float):
        self.obj = obj
        self.center = center
        self.gamma = gamma

    def value(self, z):
        d = z - self.center
        return self.obj.value(z) + self.gamma * float(d @ d)

    def gradient(self, z):
        return self.obj.gradient(z) + 2.0 * self.gamma * (z - self.center)


def agd(
    g_obj,
    y0: Point,
    eps: float,
    smoothness: float,
    strong_convexity: float,
) -> Point:
    """Accelerated gradient descent for a strongly convex smooth objective.

    Momentum (sqrt(kappa)-1)/(sqrt(kappa)+1) with kappa the condition number;
    returns the first momentum iterate with ||grad|| <= eps.
    """
    if not (eps > 0):
        raise ConfigError(f"eps must be positive, got {eps}")
    if not (smoothness >= strong_convexity > 0):
        raise ConfigError("need smoothness >= strong_convexity > 0")
    kappa = smoothness / strong_convexity
    m = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)

    y = np.array(y0, dtype=np.float64)
    z = y
    gy = g_obj.gradient(y)
    gn0 = float(np.linalg.norm(gy))
    cap = math.ceil(10.0 * math.sqrt(kappa) * math.log(max(gn0 / eps, 1.0))) + 100
    j = 0
    while True:
        if float(np.linalg.norm(gy)) <= eps:
            return y
        j += 1
        if j > cap:
            raise BoundExceededError(f"agd exceeded its iteration cap {cap}")
        gz = gy if z is y else g_obj.gradient(z)
        y_next = z - gz / smoothness
        z = (1.0 + m) * y_next - m * y
        y = y_next
        gy = g_obj.gradient(y)


def almost_convex_agd(
    f_obj,
    z0: Point,
    eps: float,
    gamma: float,
    smoothness: float,
    *,
    agd_smoothness: str = "safe",
    max_rounds: int = 10_000,
) -> Point:
    """Drive ||grad f|| <= eps for a gamma-almost-convex objective.

    Each round minimizes f plus a gamma-weighted quadratic anchored at the
    current point, which is gamma-strongly convex.  The inner smoothness is
    smoothness + 2*gamma by default (the shift adds curvature); the 'paper'
    switch passes the unshifted constant for literal fidelity.
    """
    if not (0 < gamma <= smoothness):
        raise ConfigError("need 0 < gamma <= smoothness")
    if agd_smoothness not in ("safe", "paper"):
        raise ConfigError("agd_smoothness must be 'safe' or 'paper'")
    eps_inner = eps * math.sqrt(gamma / (50.0 * (smoothness + 2.0 * gamma)))
    l_inner = smoothness + 2.0 * gamma if agd_smoothness == "safe" else smoothness

    z = np.array(z0, dtype=np.float64)
    for _ in range(max_rounds):
        if float(np.linalg.norm(f_obj.gradient(z))) <= eps:
            return z
        shifted = _ProxShifted(f_obj, z, gamma)
        z = agd(shifted, z, eps_inner, l_inner, gamma)
    raise BoundExceededError(f"almost-convex agd exceeded {max_rounds} rounds")


def _ncg_b_driver(oracle: ProblemOracle, x0: Point, cfg: SolveConfig, *, variant: str) -> SolveReport:
    l1, l2 = oracle.params.l1, oracle.params.l2
    eps1 = cfg.eps1
    if variant == "ncg-b2":
        alpha = cfg.require_alpha()
        eps2 = cfg.eps1**alpha
    else:
        alpha = None
        eps2 = cfg.require_eps2()

    oracle.counters.reset()
    stream = run_stream(cfg.seed)
    trace = RunTrace()
    flags = []
    t0 = time.perf_counter_ns()

    x = as_point(x0, oracle.dim)
    f_here = oracle.value(x)
    gap = declared_gap(oracle, f_here)
    k_cap = math.ceil(
        1.0 + gap * (max(12.0 * l2**2, 2.0 * l1) / eps2**3 + 2.0 * math.sqrt(10.0) * l2 / (eps1 * eps2))
    )
    delta_prime = cfg.delta / k_cap
    cap = min(k_cap, _resolve_max_iters(k_cap, cfg.max_iters, variant))

    def record(k, f, gn, kind, ray):
        c = oracle.counters
        trace.append(
            TraceRow(
                iter=k,
                f=float(f),
                grad_norm=float(gn),
                step_kind=kind,
                rayleigh=ray,
                noise_level=None,
                hvp_cum=c.total_hvp(),
                grad_cum=c.total_grad(),
                wall_ns=time.perf_counter_ns() - t0,
            )
        )

    for k in range(1, cap + 1):
        inner_cfg = SolveConfig(
            eps1=eps2**1.5 if variant == "ncg-b1" else eps1 ** (1.5 * alpha),
            eps2=eps2 if variant == "ncg-b1" else None,
            alpha=None if variant == "ncg-b1" else 2.0 / 3.0,
            delta=delta_prime,
            seed=cfg.seed,
        )
        inner = ncg_a1 if variant == "ncg-b1" else ncg_a2
        inner_report = inner(
            oracle,
            x,
            inner_cfg,
            stream=stream.child("inner", k),
            reset_counters=False,
            compute_certificate=False,
        )
        flags.extend(inner_report.flags)
        anchor = inner_report.x_final
        f_anchor = oracle.value(anchor)
        if f_anchor > f_here + _decrease_tol(f_here):
            flags.append(f"inner_increase@{k}")
        g_anchor = oracle.gradient(anchor)
        gn = float(np.linalg.norm(g_anchor))
        last_ray = inner_report.trace.rows[-1].rayleigh
        if gn <= eps1:
            record(k, f_anchor, gn, "Return", last_ray)
            return SolveReport(
                algorithm=variant,
                x_final=anchor,
                iters=k,
                trace=trace,
                counters=oracle.counters.snapshot(),
                theoretical_iter_bound=k_cap,
                certificate=_certificate_or_none(oracle, anchor, eps1, eps2),
                flags=flags,
                delta_gap_used=gap,
                seed=cfg.seed,
                wall_time_s=(time.perf_counter_ns() - t0) / 1e9,
            )
        penalized = PenalizedObjective(
            base=oracle, anchor=anchor, radius=eps2 / l2, weight=l1
        )
        x = almost_convex_agd(
            penalized,
            anchor,
            eps1 / 2.0,
            3.0 * eps2,
            5.0 * l1,
            agd_smoothness=cfg.agd_smoothness,
        )
        f_next = oracle.value(x)
        if f_next > f_anchor + _decrease_tol(f_anchor):
            flags.append(f"agd_divergence@{k}")
        record(k, f_next, gn, "AGD", last_ray)
        f_here = f_next
    raise BoundExceededError(f"{variant} exceeded its outer cap {cap}")


def ncg_b1(oracle: ProblemOracle, x0: Point, cfg: SolveConfig) -> SolveReport:
    """Alternating solver: adaptive curvature phase at first-order target
    eps2**1.5, then accelerated descent on the penalized objective."""
    return _ncg_b_driver(oracle, x0, cfg, variant="ncg-b1")


def ncg_b2(oracle: ProblemOracle, x0: Point, cfg: SolveConfig) -> SolveReport:
    """As ncg_b1 but the inner phase uses noise exponent 2/3 at first-order
    target eps1**(3*alpha/2), reducing the curvature budget on small gradients."""
    return _ncg_b_driver(oracle, x0, cfg, variant="ncg-b2")
