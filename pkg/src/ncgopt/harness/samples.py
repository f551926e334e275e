"""Sample-size calculators for the stochastic solver's concentration bounds."""

from __future__ import annotations

import math

from ..core import SmoothnessParams
from ..errors import ConfigError


def sncg_delta_prime(eps1: float, eps2: float, delta: float, params: SmoothnessParams) -> float:
    """Per-iteration confidence split of the stochastic solver (declared gap)."""
    denom = max(48.0 * params.l2**2 / eps2**3, 8.0 * params.l1 / eps1**2) * params.delta_gap
    return delta / (1.0 + denom)


def sample_sizes_explicit(
    eps1: float, eps2: float, delta_prime: float, params: SmoothnessParams, d: int
):
    """Gradient and Hessian sample sizes at an explicit per-iteration confidence.

    s1 = ceil(max(32 G^2/eps1^2, 2304 G^2 L2^4/eps2^4) * (1 + 3 log^2(2/delta')))
    s2 = ceil(9216 L1^2/eps2^2 * log(4 d/delta'))
    """
    if params.g_bound is None:
        raise ConfigError("sample sizes need the sub-Gaussian gradient scale g_bound")
    if not (0 < delta_prime < 1):
        raise ConfigError(f"delta_prime must lie in (0,1), got {delta_prime}")
    g = params.g_bound
    s1 = math.ceil(
        max(32.0 * g**2 / eps1**2, 2304.0 * g**2 * params.l2**4 / eps2**4)
        * (1.0 + 3.0 * math.log(2.0 / delta_prime) ** 2)
    )
    s2 = math.ceil(9216.0 * params.l1**2 / eps2**2 * math.log(4.0 * d / delta_prime))
    return s1, s2


def sample_sizes(cfg, params: SmoothnessParams, d: int):
    """Theoretical sample sizes for one stochastic run configuration."""
    eps1 = cfg.eps1
    eps2 = cfg.require_eps2()
    dp = sncg_delta_prime(eps1, eps2, cfg.delta, params)
    return sample_sizes_explicit(eps1, eps2, dp, params, d)
