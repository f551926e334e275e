"""Problem oracles, smoothness metadata, and oracle-call accounting.

A :class:`ProblemOracle` bundles the callables a solver needs: objective
value, gradient, Hessian-vector product, an optional dense Hessian for
desk-scale certification, and optional per-component oracles for finite
sums.  Every counted call increments exactly one field of the attached
:class:`OracleCounters`, which is how the benchmark measures the cost of
the curvature computations.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import CertificationUnavailable, ConfigError, InputError, OracleError

Point = NDArray[np.float64]

DEFAULT_DENSE_CAP = 200


def dense_cap() -> int:
    """Dimension cap for dense-Hessian certification (env-overridable)."""
    raw = os.environ.get("NCGOPT_DENSE_CAP")
    if raw is None:
        return DEFAULT_DENSE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"NCGOPT_DENSE_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ConfigError("NCGOPT_DENSE_CAP must be positive")
    return cap


def as_point(x, dim: Optional[int] = None) -> Point:
    """Coerce to a finite float64 vector, optionally checking the dimension."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise InputError(f"expected a point of dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InputError("point has non-finite coordinates")
    return arr


@dataclass(frozen=True)
class SmoothnessParams:
    """Declared smoothness constants of a problem.

    l1 : Lipschitz constant of the gradient (spectral bound on the Hessian).
    l2 : Lipschitz constant of the Hessian.
    delta_gap : upper bound on f(x0) - min f for admissible starts.
    g_bound : sub-Gaussian scale of per-component gradient deviations
        (finite sums only).
    """

    l1: float
    l2: float
    delta_gap: float
    g_bound: Optional[float] = None

    def __post_init__(self):
        for name in ("l1", "l2", "delta_gap"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be strictly positive, got {v}")
        if self.g_bound is not None and not (np.isfinite(self.g_bound) and self.g_bound > 0):
            raise ConfigError(f"g_bound must be strictly positive, got {self.g_bound}")


@dataclass
class OracleCounters:
    """Cumulative oracle-call counts for one run; reset only at run start."""

    f_evals: int = 0
    grad_evals: int = 0
    hvp_evals: int = 0
    component_grad_evals: int = 0
    component_hvp_evals: int = 0

    def reset(self):
        self.f_evals = 0
        self.grad_evals = 0
        self.hvp_evals = 0
        self.component_grad_evals = 0
        self.component_hvp_evals = 0

    def as_dict(self) -> dict:
        return {
            "f_evals": self.f_evals,
            "grad_evals": self.grad_evals,
            "hvp_evals": self.hvp_evals,
            "component_grad_evals": self.component_grad_evals,
            "component_hvp_evals": self.component_hvp_evals,
        }

    def snapshot(self) -> "OracleCounters":
        return OracleCounters(**self.as_dict())

    def total_hvp(self) -> int:
        return self.hvp_evals + self.component_hvp_evals

    def total_grad(self) -> int:
        return self.grad_evals + self.component_grad_evals


def _check_finite_scalar(v, what: str) -> float:
    v = float(v)
    if not np.isfinite(v):
        raise OracleError(f"{what} returned a non-finite value")
    return v


def _check_finite_vector(v, dim: int, what: str) -> Point:
    arr = np.ascontiguousarray(v, dtype=np.float64).reshape(-1)
    if arr.shape[0] != dim:
        raise OracleError(f"{what} returned a vector of dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise OracleError(f"{what} returned non-finite entries")
    return arr


class ProblemOracle:
    """Callable bundle for one optimization problem.

    The problem definition (callables, constants) is immutable after
    construction; the attached counters are per-run state.  Use
    :meth:`clone` to obtain an independently counted view for a
    concurrent run.
    """

    def __init__(
        self,
        dim: int,
        value_fn: Callable,
        grad_fn: Callable,
        hvp_fn: Callable,
        params: SmoothnessParams,
        *,
        dense_hessian_fn: Optional[Callable] = None,
        n_components: Optional[int] = None,
        component_grad_fn: Optional[Callable] = None,
        component_hvp_fn: Optional[Callable] = None,
        batch_grad_fn: Optional[Callable] = None,
        batch_hvp_fn: Optional[Callable] = None,
        batch_dense_fn: Optional[Callable] = None,
        known_min: Optional[float] = None,
        default_start_fn: Optional[Callable] = None,
        iterate_check_fn: Optional[Callable] = None,
        name: str = "custom",
    ):
        if dim < 1:
            raise ConfigError("problem dimension must be at least 1")
        if n_components is not None:
            if n_components < 1:
                raise ConfigError("n_components must be at least 1")
            if component_grad_fn is None or component_hvp_fn is None:
                raise ConfigError("finite-sum problems need per-component oracles")
        self.dim = int(dim)
        self.params = params
        self.n_components = n_components
        self.known_min = known_min
        self.name = name
        self._value_fn = value_fn
        self._grad_fn = grad_fn
        self._hvp_fn = hvp_fn
        self._dense_fn = dense_hessian_fn
        self._component_grad_fn = component_grad_fn
        self._component_hvp_fn = component_hvp_fn
        self._batch_grad_fn = batch_grad_fn
        self._batch_hvp_fn = batch_hvp_fn
        self._batch_dense_fn = batch_dense_fn
        self._default_start_fn = default_start_fn
        self._iterate_check_fn = iterate_check_fn
        self.counters = OracleCounters()

    # ------------------------------------------------------------------
    # counted oracles
    # ------------------------------------------------------------------
    def value(self, x: Point) -> float:
        self.counters.f_evals += 1
        return _check_finite_scalar(self._value_fn(x), "value oracle")

    def gradient(self, x: Point) -> Point:
        self.counters.grad_evals += 1
        return _check_finite_vector(self._grad_fn(x), self.dim, "gradient oracle")

    def hvp(self, x: Point, v: Point) -> Point:
        self.counters.hvp_evals += 1
        return _check_finite_vector(self._hvp_fn(x, v), self.dim, "hvp oracle")

    def component_gradient(self, i: int, x: Point) -> Point:
        self._require_components()
        self.counters.component_grad_evals += 1
        return _check_finite_vector(
            self._component_grad_fn(int(i), x), self.dim, "component gradient oracle"
        )

    def component_hvp(self, i: int, x: Point, v: Point) -> Point:
        self._require_components()
        self.counters.component_hvp_evals += 1
        return _check_finite_vector(
            self._component_hvp_fn(int(i), x, v), self.dim, "component hvp oracle"
        )

    def mean_component_gradient(self, idx, x: Point) -> Point:
        """Mean of component gradients over an index sample (one count each)."""
        self._require_components()
        idx = np.asarray(idx, dtype=np.intp)
        if idx.size == 0:
            raise ConfigError("empty sample set")
        self.counters.component_grad_evals += int(idx.size)
        if self._batch_grad_fn is not None:
            out = self._batch_grad_fn(idx, x)
        else:
            out = sum(self._component_grad_fn(int(i), x) for i in idx) / idx.size
        return _check_finite_vector(out, self.dim, "component gradient oracle")

    def mean_component_hvp(self, idx, x: Point, v: Point) -> Point:
        """Mean of component Hessian-vector products over an index sample."""
        self._require_components()
        idx = np.asarray(idx, dtype=np.intp)
        if idx.size == 0:
            raise ConfigError("empty sample set")
        self.counters.component_hvp_evals += int(idx.size)
        if self._batch_hvp_fn is not None:
            out = self._batch_hvp_fn(idx, x, v)
        else:
            out = sum(self._component_hvp_fn(int(i), x, v) for i in idx) / idx.size
        return _check_finite_vector(out, self.dim, "component hvp oracle")

    # ------------------------------------------------------------------
    # uncounted facilities
    # ------------------------------------------------------------------
    def dense_hessian(self, x: Point) -> np.ndarray:
        """Dense Hessian for certification; refused above the dense cap."""
        cap = dense_cap()
        if self.dim > cap:
            raise CertificationUnavailable(
                f"dense Hessian refused: dim {self.dim} exceeds cap {cap}"
            )
        if self._dense_fn is not None:
            h = np.asarray(self._dense_fn(x), dtype=np.float64)
        else:
            h = np.empty((self.dim, self.dim))
            for j in range(self.dim):
                ej = np.zeros(self.dim)
                ej[j] = 1.0
                h[:, j] = self._hvp_fn(x, ej)
        if not np.all(np.isfinite(h)):
            raise OracleError("dense Hessian has non-finite entries")
        return 0.5 * (h + h.T)

    def mean_component_dense_hessian(self, idx, x: Point) -> np.ndarray:
        """Dense sub-sampled Hessian (uncounted; used by assumption checks)."""
        self._require_components()
        idx = np.asarray(idx, dtype=np.intp)
        if self._batch_dense_fn is not None:
            return np.asarray(self._batch_dense_fn(idx, x), dtype=np.float64)
        h = np.zeros((self.dim, self.dim))
        for j in range(self.dim):
            ej = np.zeros(self.dim)
            ej[j] = 1.0
            acc = sum(self._component_hvp_fn(int(i), x, ej) for i in idx) / idx.size
            h[:, j] = acc
        return h

    def default_start(self, rng: np.random.Generator) -> Point:
        if self._default_start_fn is not None:
            return as_point(self._default_start_fn(rng), self.dim)
        return as_point(rng.uniform(-1.0, 1.0, size=self.dim), self.dim)

    def iterate_flag(self, x: Point) -> Optional[str]:
        """Problem-specific iterate check (e.g. operator-norm box); None if fine."""
        if self._iterate_check_fn is None:
            return None
        return self._iterate_check_fn(x)

    def clone(self) -> "ProblemOracle":
        """Same problem definition with fresh counters (for concurrent runs)."""
        twin = ProblemOracle.__new__(ProblemOracle)
        twin.__dict__.update(self.__dict__)
        twin.counters = OracleCounters()
        return twin

    def _require_components(self):
        if self.n_components is None:
            raise ConfigError(f"problem {self.name!r} has no finite-sum components")


@dataclass
class FiniteDifferenceReport:
    max_grad_err: float
    max_hvp_err: float


def finite_difference_check(
    oracle: ProblemOracle, x: Point, h: float, rng: Optional[np.random.Generator] = None
) -> FiniteDifferenceReport:
    """Validate analytic gradient and HVP against central differences.

    The gradient is checked coordinate-wise against central differences of the
    value; the HVP is checked against central differences of the gradient
    along one random unit direction.  Both errors are max-norm discrepancies.
    """
    if not (h > 0):
        raise ConfigError(f"finite-difference step must be positive, got {h}")
    x = as_point(x, oracle.dim)
    if rng is None:
        rng = np.random.default_rng(0)

    g = oracle.gradient(x)
    max_grad_err = 0.0
    for j in range(oracle.dim):
        step = np.zeros(oracle.dim)
        step[j] = h
        fd = (oracle.value(x + step) - oracle.value(x - step)) / (2.0 * h)
        max_grad_err = max(max_grad_err, abs(fd - g[j]))

    v = rng.standard_normal(oracle.dim)
    v /= np.linalg.norm(v)
    hv = oracle.hvp(x, v)
    fd_hv = (oracle.gradient(x + h * v) - oracle.gradient(x - h * v)) / (2.0 * h)
    max_hvp_err = float(np.max(np.abs(fd_hv - hv)))
    return FiniteDifferenceReport(max_grad_err=float(max_grad_err), max_hvp_err=max_hvp_err)
