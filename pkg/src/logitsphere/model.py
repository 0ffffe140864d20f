"""Generative model on the unit sphere and its link-function toolbox.

Data model: the parameter is a unit vector in R^d (d >= 2), covariates are
i.i.d. standard normal vectors, and the binary label in {-1, +1} is drawn
with P(y = +1 | x) = sigma(beta * x.T theta), where sigma is the logistic
function and beta > 0 is the inverse temperature.  beta = infinity means
noiseless halfspace labels y = sign(x.T theta), with the tie x.T theta = 0
classified as -1.

Everything downstream (estimators, bound verifiers, sweeps) builds on the
functions here: the log partition ln(1+e^eta), its derivatives, the Bregman
form of the Bernoulli KL divergence, and angular geometry on the sphere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .quadrature import DEFAULT_CONFIG, QuadratureConfig, gauss_expect, gauss_expect_2d
from .rng import RngSeed

__all__ = [
    "UnitParameter",
    "InverseTemperature",
    "LabeledSample",
    "Dataset",
    "DegenerateDataError",
    "log_partition",
    "logistic_link",
    "logistic_curvature",
    "bernoulli_kl_bregman",
    "bernoulli_kl_direct",
    "sample_dataset",
    "param_distance_to_correlation",
    "correlation_to_param_distance",
    "disagreement_probability",
    "population_error_rate",
    "signal_strength",
]

_UNIT_NORM_TOL = 1e-12


class DegenerateDataError(ValueError):
    """A dataset is unusable for the requested operation (e.g. zero mean)."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class UnitParameter:
    """A point on the unit sphere in R^d, d >= 2 (norm is checked to 1e-12)."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", coords)
        if coords.ndim != 1 or coords.shape[0] < 2:
            raise ValueError("UnitParameter needs a 1-D vector with d >= 2")
        norm = float(np.linalg.norm(coords))
        if not math.isfinite(norm) or abs(norm - 1.0) > _UNIT_NORM_TOL:
            raise ValueError(f"coords must have unit norm (got {norm!r})")
        coords.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.coords.shape[0]

    @staticmethod
    def normalize(vec: np.ndarray) -> "UnitParameter":
        vec = np.asarray(vec, dtype=np.float64)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0 or not math.isfinite(norm):
            raise DegenerateDataError("cannot normalize a zero or non-finite vector")
        return UnitParameter(vec / norm)

    @staticmethod
    def random(d: int, rng: np.random.Generator) -> "UnitParameter":
        """Uniform point on the sphere."""
        while True:
            v = rng.standard_normal(d)
            n = np.linalg.norm(v)
            if n > 1e-12:
                return UnitParameter(v / n)

    def dot(self, other: "UnitParameter") -> float:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return float(self.coords @ other.coords)

    def distance(self, other: "UnitParameter") -> float:
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return float(np.linalg.norm(self.coords - other.coords))


@dataclass(frozen=True)
class InverseTemperature:
    """Signal-to-noise knob beta: a finite positive real, or the distinguished
    infinite state meaning noiseless halfspace labels.

    The infinite state is stored as ``value = None`` rather than a float
    infinity, so any code path that forgets to handle it raises immediately
    instead of propagating NaNs.
    """

    value: float | None

    def __post_init__(self):
        if self.value is not None:
            v = float(self.value)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError("finite inverse temperature must satisfy 0 < beta < inf")
            object.__setattr__(self, "value", v)

    @staticmethod
    def finite(value: float) -> "InverseTemperature":
        return InverseTemperature(float(value))

    @staticmethod
    def infinite() -> "InverseTemperature":
        return InverseTemperature(None)

    @property
    def is_infinite(self) -> bool:
        return self.value is None

    @staticmethod
    def parse(token: str | float) -> "InverseTemperature":
        """Accepts a float or the literal token ``inf``."""
        if isinstance(token, str) and token.strip().lower() in ("inf", "infinite", "infinity"):
            return InverseTemperature.infinite()
        return InverseTemperature.finite(float(token))

    def __str__(self) -> str:
        return "inf" if self.is_infinite else repr(self.value)


@dataclass(frozen=True)
class LabeledSample:
    """One covariate vector with its +-1 label."""

    covariate: np.ndarray
    label: int

    def __post_init__(self):
        cov = np.asarray(self.covariate, dtype=np.float64)
        object.__setattr__(self, "covariate", cov)
        if int(self.label) not in (-1, 1):
            raise ValueError("label must be exactly -1 or +1")
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True)
class Dataset:
    """An ordered collection of labeled samples, stored columnar.

    x has shape (n, d); y has shape (n,) with entries exactly +-1.0.
    Immutable after creation; safe to share across workers.
    """

    x: np.ndarray
    y: np.ndarray
    seed: RngSeed | None = field(default=None, compare=False)

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ValueError("x must be (n, d) and y must be (n,)")
        if x.shape[0] == 0:
            raise ValueError("dataset must contain at least one sample")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be exactly -1 or +1")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> LabeledSample:
        return LabeledSample(self.x[i], int(self.y[i]))

    def concat(self, other: "Dataset") -> "Dataset":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        return Dataset(np.vstack([self.x, other.x]), np.concatenate([self.y, other.y]))

    def flip_labels(self) -> "Dataset":
        return Dataset(self.x, -self.y)


# ---------------------------------------------------------------------------
# link functions


def log_partition(eta):
    """ln(1 + e^eta), overflow-safe (equals eta + ln(1+e^-eta) for eta > 0)."""
    return np.logaddexp(0.0, eta)


def logistic_link(eta):
    """The logistic function 1/(1+e^-eta); maps +-inf to 1/0."""
    return expit(eta)


def logistic_curvature(eta):
    """Second derivative of the log partition: sigma(eta) * sigma(-eta)."""
    return expit(eta) * expit(-eta)


def bernoulli_kl_bregman(eta: float, eta_prime: float) -> float:
    """KL(Bern(sigma(eta)) || Bern(sigma(eta'))) in Bregman form.

    Equals g(eta') - g(eta) - g'(eta) * (eta' - eta) with g the log
    partition; nonnegative, zero iff the arguments coincide.
    """
    eta = np.asarray(eta, dtype=np.float64)
    eta_prime = np.asarray(eta_prime, dtype=np.float64)
    out = log_partition(eta_prime) - log_partition(eta) - expit(eta) * (eta_prime - eta)
    if out.ndim == 0:
        return float(out)
    return out


def bernoulli_kl_direct(eta: float, eta_prime: float) -> float:
    """Same divergence as a plain two-outcome sum (independent oracle).

    Sums p*ln(p/q) over both outcomes with p, q the success probabilities.
    Accurate for |eta| <= 30 or so; the Bregman form is the stable one.
    """
    p = expit(np.asarray(eta, dtype=np.float64))
    q = expit(np.asarray(eta_prime, dtype=np.float64))
    out = p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# sampling


def sample_dataset(
    truth: UnitParameter,
    beta: InverseTemperature,
    n: int,
    seed: RngSeed,
) -> Dataset:
    """Draw n i.i.d. samples from the model at parameter ``truth``.

    Covariates are standard normal in R^d.  Finite beta: labels are +1 with
    probability sigma(beta * x.T truth).  Infinite beta: y = +1 iff
    x.T truth > 0 and -1 otherwise.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed.generator()
    x = rng.standard_normal((n, truth.dim))
    z = x @ truth.coords
    if beta.is_infinite:
        y = np.where(z > 0.0, 1.0, -1.0)
    else:
        p = expit(beta.value * z)
        y = np.where(rng.random(n) < p, 1.0, -1.0)
    return Dataset(x, y, seed=seed)


# ---------------------------------------------------------------------------
# parameter-space geometry


def param_distance_to_correlation(dist: float) -> float:
    """Map Euclidean distance between unit vectors to their inner product.

    rho = 1 - dist^2 / 2, valid for dist in [0, 2].
    """
    if not (0.0 <= dist <= 2.0):
        raise ValueError(f"distance {dist!r} outside [0, 2]")
    return 1.0 - 0.5 * dist * dist


def correlation_to_param_distance(rho: float) -> float:
    """Inverse map: dist = sqrt(2 * (1 - rho)), valid for rho in [-1, 1]."""
    if not (-1.0 <= rho <= 1.0):
        raise ValueError(f"correlation {rho!r} outside [-1, 1]")
    return math.sqrt(max(0.0, 2.0 * (1.0 - rho)))


def disagreement_probability(theta: UnitParameter, truth: UnitParameter) -> float:
    """P(sign(x.T theta) != sign(x.T truth)) under standard normal x.

    Equals arccos(theta.T truth) / pi.
    """
    rho = min(1.0, max(-1.0, theta.dot(truth)))
    return math.acos(rho) / math.pi


def signal_strength(beta: InverseTemperature, config: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Scalar c(beta) with E[y*x] = c(beta) * truth (Stein's identity).

    c(beta) = 2 * beta * E[g''(beta z)] for finite beta; sqrt(2/pi) for the
    noiseless case (mean of |z|).
    """
    if beta.is_infinite:
        return math.sqrt(2.0 / math.pi)
    b = beta.value
    curv = gauss_expect(lambda z: logistic_curvature(b * z), config, scale=1.0 / b)
    return 2.0 * b * curv


def population_error_rate(
    theta: UnitParameter,
    truth: UnitParameter,
    beta: InverseTemperature,
    config: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """P(h_theta(x) != y) when data follow the model at ``truth``.

    Computed as E[sigma(-beta * sign(z) * z')] over the correlated normal
    pair (z, z') = (x.T theta, x.T truth); for infinite beta this is the
    halfspace disagreement probability.
    """
    rho = min(1.0, max(-1.0, theta.dot(truth)))
    if beta.is_infinite:
        return disagreement_probability(theta, truth)
    b = beta.value
    if rho == 1.0:
        return gauss_expect(lambda z: expit(-b * np.abs(z)), config, scale=1.0 / b)
    if rho == -1.0:
        return gauss_expect(lambda z: expit(b * np.abs(z)), config, scale=1.0 / b)

    def f2(z, zp):
        return expit(-b * np.sign(z) * zp)

    return gauss_expect_2d(f2, rho, config, scale=1.0 / b)
