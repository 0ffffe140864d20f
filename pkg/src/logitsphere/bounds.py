"""Verifiers for the closed-form Gaussian-integral inequalities.

Every inequality checked here is a theorem, so a failing report is an
implementation bug, never an expected outcome.  Checks compare a
high-accuracy evaluation (quadrature or closed form) against the stated
bound and record the margin; ``pass`` means the relation holds with slack
no worse than -tolerance.

The inequalities, for standard normal z and beta > 0:

* normal tail      (1 - 1/t^2) phi(t)/t <= P(z >= t) <= phi(t)/t
* curvature        E[g''(beta z)] sandwiched between exp-moment expressions,
                   and E[exp(-beta|z|)] between (1/beta)(1 - 1/beta^2)*sqrt(2/pi)
                   and (1/beta)*sqrt(2/pi)
* link tail        E[sigma(-beta|z|)] below three explicit envelopes
* exp q-moment     E[exp(-beta|z|) |z|^q] <= q!/beta^q
* correlated KL    E[KL(Bern(sigma(beta z)) || Bern(sigma(beta z')))] equals
                   beta^2 (1-rho) E[g''(beta z)] (Stein's identity) and is
                   sandwiched by explicit (1-rho) envelopes
* hinge-gap identity  E[hinge(theta) - hinge(truth)] = (1/beta) * E[KL], with
                   an explicit quadratic lower bound in ||theta - truth||

``E[exp(-beta|z|)]`` itself has the closed form ``2 exp(beta^2/2) Phi(-beta)``,
evaluated through the scaled complementary error function (the Mills-ratio
route) so it never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx, expit

from .model import (
    InverseTemperature,
    UnitParameter,
    bernoulli_kl_bregman,
    log_partition,
    logistic_curvature,
)
from .quadrature import DEFAULT_CONFIG, QuadratureConfig, gauss_expect, gauss_expect_2d
from .rng import RngSeed

__all__ = [
    "BoundReport",
    "IdentityMismatchError",
    "expectation_exp_abs",
    "verify_normal_tail",
    "verify_g_second_moment",
    "verify_g_prime_abs",
    "verify_exp_q_moment",
    "verify_kl_sandwich",
    "verify_param_diff_identity",
    "expected_kl",
    "expected_hinge_gap",
    "default_grid_reports",
    "DEFAULT_BETA_GRID",
    "DEFAULT_RHO_GRID",
    "DEFAULT_Q_GRID",
]

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
DEFAULT_BETA_GRID = (0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)
DEFAULT_RHO_GRID = (-0.5, 0.0, 0.5, 0.9, 0.99, 1.0)
DEFAULT_Q_GRID = tuple(range(0, 9))
DEFAULT_REPORT_TOL = 1e-9


class IdentityMismatchError(RuntimeError):
    """Two routes to the same quantity disagreed beyond tolerance."""


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one inequality check.

    relation '<=': pass iff rhs - lhs >= -tolerance (margin = rhs - lhs).
    relation '>=': pass iff lhs - rhs >= -tolerance (margin = lhs - rhs).
    relation 'sandwich': lhs/rhs are the lower/upper bounds around ``value``;
    margin is the smaller slack.
    """

    name: str
    lhs: float
    rhs: float
    relation: str
    margin: float
    method: str
    tolerance: float
    passed: bool
    beta: float | None = None
    rho: float | None = None
    q: int | None = None
    value: float | None = None


def _report(name, lhs, rhs, relation, method, tol, beta=None, rho=None, q=None, value=None):
    if relation == "<=":
        margin = rhs - lhs
    elif relation == ">=":
        margin = lhs - rhs
    elif relation == "sandwich":
        margin = min(value - lhs, rhs - value)
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return BoundReport(
        name=name,
        lhs=float(lhs),
        rhs=float(rhs),
        relation=relation,
        margin=float(margin),
        method=method,
        tolerance=float(tol),
        passed=bool(margin >= -tol),
        beta=beta,
        rho=rho,
        q=q,
        value=value,
    )


# ---------------------------------------------------------------------------
# closed forms


def normal_upper_tail(t: float) -> float:
    """P(z >= t) via the complementary error function."""
    return 0.5 * erfc(t / math.sqrt(2.0))


def expectation_exp_abs(beta: float, config: QuadratureConfig | None = None) -> float:
    """E[exp(-beta |z|)] = 2 exp(beta^2/2) Phi(-beta) = erfcx(beta/sqrt(2)).

    The erfcx form is exact in the cancellation-prone large-beta regime.
    When a config is supplied the value is cross-checked by quadrature.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    value = float(erfcx(beta / math.sqrt(2.0)))
    if config is not None:
        quad = gauss_expect(lambda z: np.exp(-beta * np.abs(z)), config, scale=1.0 / beta)
        if abs(quad - value) > max(1e-10, 1e-8 * value):
            raise IdentityMismatchError(
                f"exp-moment closed form {value!r} vs quadrature {quad!r} at beta={beta}"
            )
    return value


# ---------------------------------------------------------------------------
# verifiers


def verify_normal_tail(t: float, tol: float = DEFAULT_REPORT_TOL) -> BoundReport:
    """Sandwich (1 - 1/t^2) phi(t)/t <= P(z >= t) <= phi(t)/t for t > 0.

    The lower bound is vacuous (negative) for t <= 1, which is still a valid
    inequality; it only becomes informative for t > 1.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    phi = math.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    upper = phi / t
    lower = (1.0 - 1.0 / (t * t)) * upper
    tail = normal_upper_tail(t)
    return _report(
        "normal_tail", lower, upper, "sandwich", "ClosedForm", tol, beta=t, value=tail
    )


def verify_g_second_moment(
    beta: float, tol: float = DEFAULT_REPORT_TOL, config: QuadratureConfig = DEFAULT_CONFIG
) -> list[BoundReport]:
    """Curvature sandwich and the exp-moment sandwich at one beta.

    (1/4) E[e^{-beta|z|}] <= E[g''(beta z)] <= min(1/2, E[e^{-beta|z|}]) and
    (1/beta)(1 - 1/beta^2) sqrt(2/pi) <= E[e^{-beta|z|}] <= (1/beta) sqrt(2/pi).
    """
    e_abs = expectation_exp_abs(beta)
    curv = gauss_expect(lambda z: logistic_curvature(beta * z), config, scale=1.0 / beta)
    reports = [
        _report(
            "g_curvature_moment",
            0.25 * e_abs,
            min(0.5, e_abs),
            "sandwich",
            "Quadrature",
            tol,
            beta=beta,
            value=curv,
        ),
        _report(
            "exp_abs_moment",
            (1.0 / beta) * (1.0 - 1.0 / beta**2) * SQRT_2_OVER_PI,
            (1.0 / beta) * SQRT_2_OVER_PI,
            "sandwich",
            "ClosedForm",
            tol,
            beta=beta,
            value=e_abs,
        ),
    ]
    return reports


def verify_g_prime_abs(
    beta: float, tol: float = DEFAULT_REPORT_TOL, config: QuadratureConfig = DEFAULT_CONFIG
) -> BoundReport:
    """E[sigma(-beta|z|)] <= min(1/2, 1/2 - (beta/4) sqrt(2/pi)(1 - beta^2/6),
    (1/beta) sqrt(2/pi))."""
    value = gauss_expect(lambda z: expit(-beta * np.abs(z)), config, scale=1.0 / beta)
    bound = min(
        0.5,
        0.5 - 0.25 * beta * SQRT_2_OVER_PI * (1.0 - beta**2 / 6.0),
        (1.0 / beta) * SQRT_2_OVER_PI,
    )
    return _report("link_tail_mean", value, bound, "<=", "Quadrature", tol, beta=beta, value=value)


def verify_exp_q_moment(
    beta: float,
    q: int,
    tol: float = DEFAULT_REPORT_TOL,
    config: QuadratureConfig = DEFAULT_CONFIG,
) -> BoundReport:
    """E[e^{-beta|z|} |z|^q] <= q!/beta^q for integer q >= 0.

    Also records (informationally, in ``value``) the observed sharper-rate
    constant value * beta^(q+1) / q!; nothing is asserted about it.
    """
    if q < 0 or q > 12:
        raise ValueError("q must lie in 0..12 (factorial growth guard)")
    value = gauss_expect(
        lambda z: np.exp(-beta * np.abs(z)) * np.abs(z) ** q, config, scale=1.0 / beta
    )
    bound = math.factorial(q) / beta**q
    return _report(
        "exp_q_moment", value, bound, "<=", "Quadrature", tol, beta=beta, q=q, value=value
    )


def expected_kl(
    beta: float, rho: float, config: QuadratureConfig = DEFAULT_CONFIG, identity_tol: float = 1e-8
) -> float:
    """E[KL(Bern(sigma(beta z)) || Bern(sigma(beta z')))] for corr(z, z') = rho.

    Computed two independent ways: (a) 2-D quadrature of the Bregman form
    and (b) the Stein reduction beta^2 (1-rho) E[g''(beta z)].  Raises
    :class:`IdentityMismatchError` if they differ beyond ``identity_tol``;
    returns the Stein value (the better conditioned of the two).
    """
    curv = gauss_expect(lambda z: logistic_curvature(beta * z), config, scale=1.0 / beta)
    stein = beta * beta * (1.0 - rho) * curv

    def bregman(z, zp):
        eta = beta * z
        etap = beta * zp
        return log_partition(etap) - log_partition(eta) - expit(eta) * (etap - eta)

    direct = gauss_expect_2d(bregman, rho, config, scale=1.0 / beta)
    if abs(direct - stein) > identity_tol:
        raise IdentityMismatchError(
            f"KL routes disagree at beta={beta}, rho={rho}: "
            f"2-D quadrature {direct!r} vs Stein reduction {stein!r}"
        )
    return stein


def verify_kl_sandwich(
    beta: float,
    rho: float,
    tol: float = DEFAULT_REPORT_TOL,
    config: QuadratureConfig = DEFAULT_CONFIG,
) -> BoundReport:
    """(beta/4)(1-rho)(1 - 1/beta^2) sqrt(2/pi) <= E[KL] <=
    (beta/2)(1-rho) min(beta, 2 sqrt(2/pi))."""
    value = expected_kl(beta, rho, config)
    lower = 0.25 * beta * (1.0 - rho) * (1.0 - 1.0 / beta**2) * SQRT_2_OVER_PI
    upper = 0.5 * beta * (1.0 - rho) * min(beta, 2.0 * SQRT_2_OVER_PI)
    return _report(
        "kl_sandwich", lower, upper, "sandwich", "Quadrature", tol, beta=beta, rho=rho, value=value
    )


def expected_hinge_gap(
    beta: float, rho: float, config: QuadratureConfig = DEFAULT_CONFIG
) -> float:
    """E[[-y x.T theta]_+ - [-y x.T truth]_+] = (1/beta) E[KL] at correlation rho."""
    return expected_kl(beta, rho, config) / beta


def verify_param_diff_identity(
    beta: float,
    theta: UnitParameter,
    truth: UnitParameter,
    n_mc: int,
    seed: RngSeed,
    config: QuadratureConfig = DEFAULT_CONFIG,
) -> list[BoundReport]:
    """Monte Carlo check of the hinge-gap identity, plus its lower bound.

    The mean hinge gap estimated from ``n_mc`` model draws must agree with
    (1/beta) * E[KL] within 4 Monte Carlo standard errors; for beta > 1 the
    quadrature value must also dominate
    (1/8) sqrt(2/pi) (1 - 1/beta^2) ||theta - truth||^2.
    """
    from .moments import sample_hinge_gaps  # local import to avoid a cycle

    rho = theta.dot(truth)
    quad = expected_hinge_gap(beta, rho, config)
    mean, se = sample_hinge_gaps(beta, rho, n_mc, seed)
    se = max(se, 1e-300)
    reports = [
        _report(
            "hinge_gap_identity",
            abs(mean - quad),
            4.0 * se,
            "<=",
            "MonteCarlo",
            0.0,
            beta=beta,
            rho=rho,
            value=mean,
        )
    ]
    if beta > 1.0:
        dist2 = theta.distance(truth) ** 2
        lower = 0.125 * SQRT_2_OVER_PI * (1.0 - 1.0 / beta**2) * dist2
        reports.append(
            _report(
                "hinge_gap_lower",
                quad,
                lower,
                ">=",
                "Quadrature",
                DEFAULT_REPORT_TOL,
                beta=beta,
                rho=rho,
                value=quad,
            )
        )
    return reports


# ---------------------------------------------------------------------------
# grid driver


def default_grid_reports(
    betas=DEFAULT_BETA_GRID,
    rhos=DEFAULT_RHO_GRID,
    qs=DEFAULT_Q_GRID,
    tol: float = DEFAULT_REPORT_TOL,
    config: QuadratureConfig = DEFAULT_CONFIG,
    kl_seed: RngSeed | None = None,
) -> list[BoundReport]:
    """All inequality reports over the grid, sorted by (name, beta, rho, q).

    Includes one report comparing the Bregman KL form against the direct
    two-outcome sum on 1000 seeded parameter pairs (max |difference|).
    """
    reports: list[BoundReport] = []
    for b in betas:
        reports.append(verify_normal_tail(b, tol))
        reports.extend(verify_g_second_moment(b, tol, config))
        reports.append(verify_g_prime_abs(b, tol, config))
        for q in qs:
            reports.append(verify_exp_q_moment(b, q, tol, config))
        for r in rhos:
            reports.append(verify_kl_sandwich(b, r, tol, config))

    from .model import bernoulli_kl_direct

    rng = (kl_seed or RngSeed(0xB4E6)).derive("kl_pairs").generator()
    etas = rng.uniform(-12.0, 12.0, size=(1000, 2))
    diff = np.abs(
        bernoulli_kl_bregman(etas[:, 0], etas[:, 1]) - bernoulli_kl_direct(etas[:, 0], etas[:, 1])
    )
    reports.append(
        _report(
            "kl_bregman_vs_direct_max_abs_diff",
            float(diff.max()),
            1e-12,
            "<=",
            "ClosedForm",
            0.0,
            value=float(diff.max()),
        )
    )
    reports.sort(key=lambda r: (r.name, r.beta or 0.0, r.rho or 0.0, r.q or 0))
    return reports
