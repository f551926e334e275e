"""Built-in test problems and the problem registry.

Registered keys:

``trig``
    Separable cosine landscape with analytically known saddles and minima.
``matfac``
    Symmetric low-rank matrix factorization, f(U) = 0.5 * ||U U' - M||_F^2.
``finitesum-sigmoid``
    Nonconvex finite sum of sigmoids of linear predictions.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, Optional

import numpy as np

from . import kernels
from .core import Point, ProblemOracle, SmoothnessParams, as_point
from .errors import ConfigError
from .rng import run_stream

# sup |sigma''| and sup |sigma'''| for sigma(t) = 1/(1+e^t)
_SIGMOID_D2_MAX = 1.0 / (6.0 * math.sqrt(3.0))
_SIGMOID_D3_MAX = 0.125
_CONSTANT_FLOOR = 1e-8


def make_trig_problem(d: int, amplitudes) -> ProblemOracle:
    """f(x) = sum_i c_i cos(x_i) with analytic derivatives.

    The Hessian is diag(-c_i cos x_i), so saddle structure is known in closed
    form; both Lipschitz constants equal max |c_i|.
    """
    c = np.asarray(amplitudes, dtype=np.float64).reshape(-1)
    if c.size == 0:
        raise ConfigError("amplitudes must be nonempty")
    if c.size != d:
        raise ConfigError(f"need {d} amplitudes, got {c.size}")
    if np.any(c == 0.0) or not np.all(np.isfinite(c)):
        raise ConfigError("amplitudes must be nonzero and finite")
    cmax = float(np.max(np.abs(c)))
    params = SmoothnessParams(l1=cmax, l2=cmax, delta_gap=2.0 * float(np.sum(np.abs(c))))

    def value(x):
        return float(np.sum(c * np.cos(x)))

    def grad(x):
        return -c * np.sin(x)

    def hvp(x, v):
        return -c * np.cos(x) * v

    def dense(x):
        return np.diag(-c * np.cos(x))

    def start(rng):
        return rng.uniform(-math.pi, math.pi, size=d)

    return ProblemOracle(
        d,
        value,
        grad,
        hvp,
        params,
        dense_hessian_fn=dense,
        known_min=-float(np.sum(np.abs(c))),
        default_start_fn=start,
        name="trig",
    )


def make_matfac_problem(m_matrix, r: int, t_cap: Optional[float] = None) -> ProblemOracle:
    """Symmetric low-rank factorization f(U) = 0.5 * ||U U' - M||_F^2.

    The decision variable U (d x r) is flattened row-major into a point of
    dimension d*r.  Constants are l1 = 8*T and l2 = 12*sqrt(T) for an
    operator-norm cap T on ||U||_2^2; T defaults to twice the top eigenvalue
    of M.  Iterates outside the cap are flagged, not rejected.
    """
    m = np.asarray(m_matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigError("M must be square")
    d = m.shape[0]
    if not np.allclose(m, m.T, atol=1e-10, rtol=0.0):
        raise ConfigError("M must be symmetric")
    if not (1 <= r <= d):
        raise ConfigError(f"rank r must be in [1, {d}], got {r}")
    w = kernels.symmetric_eigvals(m)
    top = float(w[-1])
    if float(w[0]) < -1e-8 * max(1.0, abs(top)):
        raise ConfigError("M must be positive semidefinite")

    if t_cap is None:
        t_cap = 2.0 * max(top, _CONSTANT_FLOOR)
    if t_cap <= 0:
        raise ConfigError("operator-norm cap must be positive")
    params = SmoothnessParams(
        l1=8.0 * t_cap,
        l2=12.0 * math.sqrt(t_cap),
        delta_gap=0.5 * float(np.sum(m * m)) + 1.0,
    )
    dim = d * r

    def unflatten(x):
        return np.asarray(x, dtype=np.float64).reshape(d, r)

    def value(x):
        u = unflatten(x)
        res = u @ u.T - m
        return 0.5 * float(np.sum(res * res))

    def grad(x):
        u = unflatten(x)
        return (2.0 * (u @ u.T - m) @ u).reshape(-1)

    def hvp(x, vec):
        u = unflatten(x)
        v = unflatten(vec)
        res = u @ u.T - m
        out = 2.0 * ((u @ v.T + v @ u.T) @ u + res @ v)
        return out.reshape(-1)

    def box_flag(x):
        u = unflatten(x)
        gram = u.T @ u
        if float(kernels.symmetric_eigvals(gram)[-1]) > t_cap:
            return "box_cap"
        return None

    def start(rng):
        scale = math.sqrt(max(float(np.trace(m)), _CONSTANT_FLOOR) / dim)
        return scale * rng.standard_normal(dim)

    return ProblemOracle(
        dim,
        value,
        grad,
        hvp,
        params,
        known_min=0.0,
        default_start_fn=start,
        iterate_check_fn=box_flag,
        name="matfac",
    )


def _sigmoid(t):
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    et = np.exp(-t[pos])
    out[pos] = et / (1.0 + et)
    out[~pos] = 1.0 / (1.0 + np.exp(t[~pos]))
    return out


def _sigmoid_d1(t):
    s = _sigmoid(t)
    return -s * (1.0 - s)


def _sigmoid_d2(t):
    s = _sigmoid(t)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def make_finite_sum_problem(features, labels) -> ProblemOracle:
    """Finite sum of sigmoid losses f_i(x) = sigma(y_i * a_i' x).

    sigma(t) = 1/(1+e^t) is smooth, bounded, and nonconvex; constants are
    derived from the largest feature norm and the derivative bounds of sigma.
    """
    a = np.asarray(features, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] == 0:
        raise ConfigError("features must be a nonempty n x d array")
    if not np.all(np.isfinite(a)):
        raise ConfigError("features must be finite")
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    n, d = a.shape
    if y.shape[0] != n:
        raise ConfigError(f"need {n} labels, got {y.shape[0]}")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ConfigError("labels must be in {-1, +1}")

    row_norms = np.linalg.norm(a, axis=1)
    amax = float(np.max(row_norms))
    params = SmoothnessParams(
        l1=max(_SIGMOID_D2_MAX * amax**2, _CONSTANT_FLOOR),
        l2=max(_SIGMOID_D3_MAX * amax**3, _CONSTANT_FLOOR),
        delta_gap=1.0,
        g_bound=max(0.5 * amax, _CONSTANT_FLOOR),
    )
    ay = a * y[:, None]  # gradient direction rows y_i * a_i

    def margins(x):
        return y * (a @ x)

    def value(x):
        return float(np.mean(_sigmoid(margins(x))))

    def grad(x):
        return ay.T @ _sigmoid_d1(margins(x)) / n

    def hvp(x, v):
        return a.T @ (_sigmoid_d2(margins(x)) * (a @ v)) / n

    def dense(x):
        w = _sigmoid_d2(margins(x))
        return (a * w[:, None]).T @ a / n

    def comp_grad(i, x):
        t = y[i] * float(a[i] @ x)
        return float(_sigmoid_d1(t)) * ay[i]

    def comp_hvp(i, x, v):
        t = y[i] * float(a[i] @ x)
        return float(_sigmoid_d2(t)) * float(a[i] @ v) * a[i]

    def _counts(idx):
        # with-replacement samples larger than n reduce to multiplicity weights
        return np.bincount(idx, minlength=n).astype(np.float64)

    def batch_grad(idx, x):
        if idx.size > n:
            w = _sigmoid_d1(margins(x)) * _counts(idx)
            return ay.T @ w / idx.size
        ai = a[idx]
        t = y[idx] * (ai @ x)
        return ay[idx].T @ _sigmoid_d1(t) / idx.size

    def batch_hvp(idx, x, v):
        if idx.size > n:
            w = _sigmoid_d2(margins(x)) * _counts(idx)
            return a.T @ (w * (a @ v)) / idx.size
        ai = a[idx]
        t = y[idx] * (ai @ x)
        return ai.T @ (_sigmoid_d2(t) * (ai @ v)) / idx.size

    def batch_dense(idx, x):
        if idx.size > n:
            w = _sigmoid_d2(margins(x)) * _counts(idx)
            return (a * w[:, None]).T @ a / idx.size
        ai = a[idx]
        w = _sigmoid_d2(y[idx] * (ai @ x))
        return (ai * w[:, None]).T @ ai / idx.size

    def start(rng):
        return rng.standard_normal(d) / math.sqrt(d)

    return ProblemOracle(
        d,
        value,
        grad,
        hvp,
        params,
        dense_hessian_fn=dense,
        n_components=n,
        component_grad_fn=comp_grad,
        component_hvp_fn=comp_hvp,
        batch_grad_fn=batch_grad,
        batch_hvp_fn=batch_hvp,
        batch_dense_fn=batch_dense,
        default_start_fn=start,
        name="finitesum-sigmoid",
    )


# ----------------------------------------------------------------------
# registry
# ----------------------------------------------------------------------


def _build_trig(opts: dict) -> ProblemOracle:
    d = int(opts.get("d", 2))
    amplitudes = opts.get("amplitudes", [1.0] * d)
    return make_trig_problem(d, amplitudes)


def _build_matfac(opts: dict) -> ProblemOracle:
    d = int(opts.get("d", 6))
    r = int(opts.get("r", 2))
    spectrum = opts.get("spectrum")
    if spectrum is None:
        spectrum = np.linspace(4.0, 1.0, r)
    spectrum = np.asarray(spectrum, dtype=np.float64).reshape(-1)
    if spectrum.size != r:
        raise ConfigError(f"need {r} spectrum values, got {spectrum.size}")
    gen = run_stream(int(opts.get("problem_seed", 0))).child("matfac-basis").generator()
    basis, _ = np.linalg.qr(gen.standard_normal((d, d)))
    m = (basis[:, :r] * spectrum) @ basis[:, :r].T
    m = 0.5 * (m + m.T)
    return make_matfac_problem(m, r, t_cap=opts.get("t_cap"))


def _build_finitesum(opts: dict) -> ProblemOracle:
    n = int(opts.get("n", 500))
    d = int(opts.get("d", 10))
    scale = float(opts.get("feature_scale", 2.0))
    mode = str(opts.get("labels", "planted"))
    gen = run_stream(int(opts.get("problem_seed", 0))).child("finitesum-data").generator()
    features = scale * gen.standard_normal((n, d)) / math.sqrt(d)
    if mode == "planted":
        # labels consistent with a hidden direction give a coherent gradient
        planted = gen.standard_normal(d)
        labels = np.sign(features @ planted)
        labels[labels == 0.0] = 1.0
    elif mode == "random":
        labels = gen.choice((-1.0, 1.0), size=n)
    else:
        raise ConfigError(f"labels must be 'planted' or 'random', got {mode!r}")
    return make_finite_sum_problem(features, labels)


PROBLEM_REGISTRY: Dict[str, Callable[[dict], ProblemOracle]] = {
    "trig": _build_trig,
    "matfac": _build_matfac,
    "finitesum-sigmoid": _build_finitesum,
}


def list_problems():
    return sorted(PROBLEM_REGISTRY)


def build_problem(key: str, opts: Optional[dict] = None) -> ProblemOracle:
    if key not in PROBLEM_REGISTRY:
        raise ConfigError(f"unknown problem {key!r}; known: {', '.join(list_problems())}")
    return PROBLEM_REGISTRY[key](dict(opts or {}))


def default_start(oracle: ProblemOracle, seed: int) -> Point:
    """Seeded default starting point for a registered problem."""
    gen = run_stream(seed).child("x0").generator()
    return as_point(oracle.default_start(gen), oracle.dim)
