"""The three sphere-constrained estimators plus brute-force oracles.

* ``linear_estimate``    - normalized mean of ``y_i x_i``; closed-form
  maximizer of the empirical label/covariate correlation over the sphere.
  Optimal at high temperature (weak signal).
* ``relu_erm_estimate``  - minimizer of the hinge risk
  ``mean([-y_i x_i.T theta]_+)`` over the sphere, via multi-restart
  projected subgradient descent followed by exact great-circle descent.
  The hinge risk is the label-dependent part of the logistic loss, and its
  population minimizer is the true parameter.
* ``zero_one_erm_estimate`` - minimizer of the training misclassification
  count.  Exact in d = 2 (angular sweep), optionally exact in d = 3
  (per-circle sweeps over the hyperplane arrangement), and a shrinking
  random local search elsewhere.
* ``adaptive_estimate``  - picks linear vs hinge ERM from the training
  error rate of the zero-one ERM.
* ``net_oracle_estimate`` - evaluates a risk at every point of a dense
  sphere net; exponential in d, intended only for validating the
  optimizers in d <= 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .model import Dataset, DegenerateDataError, UnitParameter
from .rng import RngSeed
from .sphere import build_packing

__all__ = [
    "ADAPTIVE_THRESHOLD",
    "EstimatorSpec",
    "EstimateResult",
    "linear_estimate",
    "relu_erm_estimate",
    "zero_one_erm_estimate",
    "net_oracle_estimate",
    "adaptive_estimate",
    "relu_risk",
    "zero_one_risk",
]

# Training error above this rate indicates a weak signal (high temperature),
# where the linear estimator is the right tool.  The value is the population
# error floor (1/beta) * sqrt(2/pi) evaluated at beta = 2, the crossover
# scale between the regimes; it is a tunable, not a sharp constant.
ADAPTIVE_THRESHOLD = 0.5 * math.sqrt(2.0 / math.pi)

_CONVERGENCE_TOL = 1e-10


@dataclass(frozen=True)
class EstimatorSpec:
    """Optimizer controls shared by the iterative estimators.

    restarts        number of subgradient starts (first is the linear
                    estimate, the rest uniform random); must be >= 1
    max_iters       projected-subgradient iterations per restart
    step_scale      step size is step_scale / (mean ||x_i|| * sqrt(t))
    polish_rounds   exact great-circle descent rounds after subgradient
                    descent (0 disables)
    net_resolution  net radius for oracle modes; must be positive
    exact_dim3      solve d = 3 zero-one ERM exactly instead of local search
    ls_*            zero-one local search: proposal budget, halving cadence,
                    scale floor, stop-after-no-improvement budget
    seed            RNG stream for restarts and perturbations
    """

    restarts: int = 3
    max_iters: int = 1500
    step_scale: float = 1.0
    polish_rounds: int = 12
    net_resolution: float = 0.01
    exact_dim3: bool = False
    ls_max_proposals: int = 4000
    ls_halve_after: int = 50
    ls_scale_floor: float = 1e-3
    ls_budget: int = 600
    seed: RngSeed = field(default_factory=lambda: RngSeed(0x5EED))

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.net_resolution <= 0.0:
            raise ValueError("net_resolution must be positive")


@dataclass(frozen=True)
class EstimateResult:
    kind: str
    estimate: UnitParameter
    objective_value: float
    restarts_used: int = 1
    converged: bool = True
    exact: bool = False
    branch: str | None = None
    threshold: float | None = None


def relu_risk(dataset: Dataset, theta: np.ndarray) -> float:
    """Mean hinge loss mean([-y_i x_i.T theta]_+)."""
    m = dataset.y * (dataset.x @ theta)
    return float(np.maximum(-m, 0.0).sum()) / dataset.n


def zero_one_risk(dataset: Dataset, theta: np.ndarray) -> float:
    """Training misclassification rate with ties y*x.T theta = 0 counted."""
    return kernels.zero_one_count(dataset.x, dataset.y, np.ascontiguousarray(theta)) / dataset.n


# ---------------------------------------------------------------------------
# linear estimator


def linear_estimate(dataset: Dataset) -> EstimateResult:
    """Normalize the sample mean of y_i x_i.

    This is the exact maximizer of theta -> mean(y_i x_i.T theta) over the
    sphere; the objective value is the attained mean.  Raises
    :class:`DegenerateDataError` when the mean vector vanishes (caller
    should retry with fresh data or a larger sample).
    """
    m = (dataset.x.T @ dataset.y) / dataset.n
    norm = float(np.linalg.norm(m))
    if norm == 0.0 or not math.isfinite(norm):
        raise DegenerateDataError("sample mean of y*x is zero; linear estimate undefined")
    theta = m / norm
    return EstimateResult(
        kind="linear",
        estimate=UnitParameter(theta),
        objective_value=float(m @ theta),
        restarts_used=1,
        converged=True,
        exact=True,
    )


# ---------------------------------------------------------------------------
# hinge-risk (ReLU) empirical risk minimizer


def _great_circle_descent(x, y, theta, rounds):
    """Exact minimization over great circles through theta.

    Each round minimizes the hinge risk exactly over the circle spanned by
    theta and the (tangent-projected) subgradient direction.  The risk never
    increases; in d = 2 a single round already minimizes over the whole
    sphere.  Returns (theta, risk, last_improvement).
    """
    n = x.shape[0]
    m = y * (x @ theta)
    obj = float(np.maximum(-m, 0.0).sum()) / n
    last_improve = math.inf
    for _ in range(rounds):
        neg = m < 0.0
        g = -(x[neg].T @ y[neg]) / n if neg.any() else np.zeros_like(theta)
        v = g - (g @ theta) * theta
        nv = float(np.linalg.norm(v))
        if nv < 1e-15:
            last_improve = 0.0
            break
        v /= nv
        a = x @ theta
        b = x @ v
        phi, val = kernels.circle_relu_min(
            np.ascontiguousarray(-y * a), np.ascontiguousarray(-y * b)
        )
        cand = math.cos(phi) * theta + math.sin(phi) * v
        cand /= np.linalg.norm(cand)
        last_improve = obj - val
        if val < obj:
            theta = cand
            obj = val
            m = y * (x @ theta)
        if last_improve <= 1e-14:
            break
    return theta, obj, last_improve


def _initial_points(dataset: Dataset, spec: EstimatorSpec, extra_inits) -> list[np.ndarray]:
    inits: list[np.ndarray] = []
    try:
        inits.append(linear_estimate(dataset).estimate.coords.copy())
    except DegenerateDataError:
        inits.append(UnitParameter.random(dataset.dim, spec.seed.derive("fallback_init").generator()).coords.copy())
    rng = spec.seed.derive("restarts").generator()
    for _ in range(spec.restarts - 1):
        inits.append(UnitParameter.random(dataset.dim, rng).coords.copy())
    for p in extra_inits:
        inits.append(np.asarray(p.coords if isinstance(p, UnitParameter) else p, dtype=np.float64).copy())
    return inits


def relu_erm_estimate(
    dataset: Dataset,
    spec: EstimatorSpec = EstimatorSpec(),
    extra_inits: tuple = (),
) -> EstimateResult:
    """Approximately minimize mean([-y_i x_i.T theta]_+) over the sphere.

    Each restart runs projected subgradient descent (step in R^d, renormalize
    every iteration, step size c/sqrt(t) with c = step_scale/mean||x_i||),
    then exact great-circle descent.  The best restart by objective wins,
    with ties broken by restart index.  ``extra_inits`` adds caller-chosen
    starting points (used in tests to warm-start at the true parameter).
    """
    x, y = dataset.x, dataset.y
    mean_norm = float(np.linalg.norm(x, axis=1).mean())
    step_c = spec.step_scale / mean_norm if mean_norm > 0.0 else spec.step_scale

    best = None
    for idx, init in enumerate(_initial_points(dataset, spec, extra_inits)):
        theta, _, last_change = kernels.psd_minimize(
            x, y, np.ascontiguousarray(init), spec.max_iters, step_c
        )
        theta = np.asarray(theta, dtype=np.float64)
        theta /= np.linalg.norm(theta)
        if spec.polish_rounds > 0:
            theta, _, last_change = _great_circle_descent(x, y, theta, spec.polish_rounds)
        obj = relu_risk(dataset, theta)
        if best is None or obj < best[0]:
            best = (obj, idx, theta, last_change)
    obj, _, theta, last_change = best
    return EstimateResult(
        kind="relu",
        estimate=UnitParameter.normalize(theta),
        objective_value=obj,
        restarts_used=spec.restarts + len(extra_inits),
        converged=bool(last_change <= _CONVERGENCE_TOL),
    )


# ---------------------------------------------------------------------------
# zero-one empirical risk minimizer


def _orthobasis_3d(axis: np.ndarray):
    k = int(np.argmin(np.abs(axis)))
    e = np.zeros(3)
    e[k] = 1.0
    u = e - axis[k] * axis
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    v /= np.linalg.norm(v)
    return u, v


def _zero_one_exact_dim2(dataset: Dataset):
    """Angular sweep: exact minimizer of the error count on the circle.

    Each sample flips its error indicator at two critical angles; the sweep
    visits all open arcs and returns the midpoint of a minimizing arc, ties
    broken by the smallest midpoint angle in [0, 2pi).
    """
    cc = np.ascontiguousarray(dataset.y * dataset.x[:, 0])
    dd = np.ascontiguousarray(dataset.y * dataset.x[:, 1])
    mids, counts = kernels.circle_zero_one_arcs(cc, dd)
    mids = np.asarray(mids)
    counts = np.asarray(counts)
    cmin = counts.min()
    mid = float(np.sort(mids[counts == cmin])[0])
    theta = np.array([math.cos(mid), math.sin(mid)])
    count = kernels.zero_one_count(dataset.x, dataset.y, theta)
    return theta, int(count)


def _zero_one_exact_dim3(dataset: Dataset):
    """Exact d = 3 minimizer by sweeping every great circle {theta : x_i.T theta = 0}.

    Every cell of the circle arrangement has an edge on some circle, and the
    error count of the cell is recovered by sweeping that circle and nudging
    to the cell's side, so scanning all n circles (O(n^2 log n)) visits a
    representative of every minimizing cell.
    """
    x, y = dataset.x, dataset.y
    norms = np.linalg.norm(x, axis=1)
    zero_rows = norms == 0.0
    base_err = int(zero_rows.sum())
    xs = x[~zero_rows]
    ys = y[~zero_rows]
    ns = xs.shape[0]
    if ns == 0:
        theta = np.array([1.0, 0.0, 0.0])
        return theta, kernels.zero_one_count(x, y, theta)

    candidates = []  # (total, i, mid, side)
    sn = np.linalg.norm(xs, axis=1)
    for i in range(ns):
        axis = xs[i] / sn[i]
        u, v = _orthobasis_3d(axis)
        cc = ys * (xs @ u)
        dd = ys * (xs @ v)
        r = np.hypot(cc, dd)
        par = r <= 1e-12 * sn
        t_par = ys[par] * (xs[par] @ axis)
        c_plus = int((t_par < 0.0).sum())
        c_minus = int((t_par > 0.0).sum())
        mids, counts = kernels.circle_zero_one_arcs(
            np.ascontiguousarray(cc[~par]), np.ascontiguousarray(dd[~par])
        )
        counts = np.asarray(counts)
        k = int(np.argmin(counts))
        side = 1.0 if c_plus <= c_minus else -1.0
        total = int(counts[k]) + min(c_plus, c_minus) + base_err
        candidates.append((total, i, float(np.asarray(mids)[k]), side))

    candidates.sort(key=lambda c: (c[0], c[1]))
    fallback = None
    for total, i, mid, side in candidates[:8]:
        axis = xs[i] / sn[i]
        u, v = _orthobasis_3d(axis)
        base = math.cos(mid) * u + math.sin(mid) * v
        delta = 1e-7
        for _ in range(40):
            theta = base + delta * side * axis
            theta /= np.linalg.norm(theta)
            count = kernels.zero_one_count(x, y, theta)
            if count == total:
                return theta, count
            if fallback is None or count < fallback[1]:
                fallback = (theta, count)
            delta *= 0.125
    return fallback


def zero_one_erm_estimate(dataset: Dataset, spec: EstimatorSpec = EstimatorSpec()) -> EstimateResult:
    """Minimize the training misclassification count over the sphere.

    d = 2 is always exact (angular sweep, O(n log n)); d = 3 is exact when
    ``spec.exact_dim3`` is set; otherwise the estimator starts at the hinge
    ERM and runs a shrinking Gaussian local search, and the result carries
    ``exact=False``.
    """
    d = dataset.dim
    if d == 2:
        theta, count = _zero_one_exact_dim2(dataset)
        return EstimateResult(
            kind="zero_one",
            estimate=UnitParameter.normalize(theta),
            objective_value=count / dataset.n,
            converged=True,
            exact=True,
        )
    if d == 3 and spec.exact_dim3:
        theta, count = _zero_one_exact_dim3(dataset)
        return EstimateResult(
            kind="zero_one",
            estimate=UnitParameter.normalize(theta),
            objective_value=count / dataset.n,
            converged=True,
            exact=True,
        )
    warm = relu_erm_estimate(dataset, spec)
    proposals = spec.seed.derive("zero_one_ls").generator().standard_normal(
        (spec.ls_max_proposals, d)
    )
    theta, count = kernels.local_search_zero_one(
        dataset.x,
        dataset.y,
        np.ascontiguousarray(warm.estimate.coords),
        proposals,
        spec.ls_halve_after,
        spec.ls_scale_floor,
        spec.ls_budget,
    )
    theta = np.asarray(theta, dtype=np.float64)
    return EstimateResult(
        kind="zero_one",
        estimate=UnitParameter.normalize(theta),
        objective_value=int(count) / dataset.n,
        restarts_used=spec.restarts,
        converged=True,
        exact=False,
    )


# ---------------------------------------------------------------------------
# brute-force net oracle (validation only)


_NET_CACHE: dict[tuple[int, float], np.ndarray] = {}


def _cached_net(d: int, resolution: float) -> np.ndarray:
    key = (d, float(resolution))
    if key not in _NET_CACHE:
        _NET_CACHE[key] = build_packing(d, resolution).points_array()
    return _NET_CACHE[key]


def net_oracle_estimate(dataset: Dataset, loss: str, resolution: float) -> EstimateResult:
    """Evaluate the chosen risk at every point of a dense sphere net.

    Brute force (the net grows like (1/resolution)^(d-1)), so d <= 3 only.
    ``loss`` is ``"relu"`` or ``"zero_one"``.  A maximal packing at the given
    radius is also a cover at that radius, so the best net value is within
    Lipschitz slack of the true sphere minimum.  Nets are cached per
    (d, resolution); the construction seed is fixed, so the cache is
    deterministic.
    """
    if dataset.dim > 3:
        raise ValueError("net oracle is restricted to d <= 3")
    if loss not in ("relu", "zero_one"):
        raise ValueError(f"unknown loss {loss!r}")
    points = _cached_net(dataset.dim, resolution)
    best_val = math.inf
    best_idx = 0
    x, y, n = dataset.x, dataset.y, dataset.n
    for start in range(0, points.shape[0], 4096):
        block = points[start : start + 4096]
        scores = y[:, None] * (x @ block.T)
        if loss == "relu":
            vals = np.maximum(-scores, 0.0).sum(axis=0) / n
        else:
            vals = (scores <= 0.0).sum(axis=0) / n
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val = float(vals[k])
            best_idx = start + k
    theta = points[best_idx]
    return EstimateResult(
        kind=f"net_oracle_{loss}",
        estimate=UnitParameter.normalize(theta),
        objective_value=best_val,
        converged=True,
        exact=False,
    )


# ---------------------------------------------------------------------------
# adaptive selection


def adaptive_estimate(dataset: Dataset, spec: EstimatorSpec = EstimatorSpec()) -> EstimateResult:
    """Choose the estimator from the zero-one training error rate.

    A training error above :data:`ADAPTIVE_THRESHOLD` means the labels are
    close to fair coins (high temperature), where the linear estimator is
    optimal; otherwise the hinge ERM is used.  The returned estimate is the
    selected branch's estimate unchanged.
    """
    rate = zero_one_erm_estimate(dataset, spec).objective_value
    if rate > ADAPTIVE_THRESHOLD:
        chosen = linear_estimate(dataset)
        branch = "high_temperature"
    else:
        chosen = relu_erm_estimate(dataset, spec)
        branch = "moderate_low"
    return replace(chosen, kind="adaptive", branch=branch, threshold=ADAPTIVE_THRESHOLD)
