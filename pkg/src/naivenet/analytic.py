"""Closed-form action laws and long-run mislearning probabilities.

Gaussian signals with state-conditional means +-mu and standard deviation
sigma.  In state 1 the log-action of agent n is Gaussian with mean
(2 mu^2/sigma^2) ||b||_1 and variance (4 mu^2/sigma^2) ||b||_2^2, so it lands
on the wrong side of zero with probability Phi(-(mu/sigma) ||b||_1/||b||_2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import PathWeights, constant_out_degree_limit_vector
from .signals import std_normal_cdf, std_normal_pdf


class DegenerateInput(ValueError):
    pass


class DisconnectedGroups(ValueError):
    """Two groups with no cross-group weight never pool information."""


class NoSocialLearning(ValueError):
    """q = 0: agents are isolated and the long-run limit is discontinuous."""


@dataclass(frozen=True)
class ActionDistribution:
    mean: float
    variance: float


@dataclass(frozen=True)
class MislearningProb:
    value: float
    family: str = ""
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class NonConvergent:
    """Actions almost surely fail to settle, so no mislearning probability exists."""

    family: str = ""
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __str__(self):
        return "NONCONVERGENT"


def _b(b):
    return np.asarray(b.b if isinstance(b, PathWeights) else b, dtype=float)


def action_distribution(b, sigma: float, mu: float = 1.0) -> ActionDistribution:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    v = _b(b)
    return ActionDistribution(
        mean=2.0 * mu**2 / sigma**2 * float(np.sum(v)),
        variance=4.0 * mu**2 / sigma**2 * float(np.sum(v * v)),
    )


def l1_l2_ratio(b) -> float:
    v = _b(b)
    l2 = math.sqrt(float(np.sum(v * v)))
    if l2 == 0.0:
        raise DegenerateInput("path-weight vector is identically zero")
    return float(np.sum(np.abs(v))) / l2


def prob_incorrect_agent(b, sigma: float, mu: float = 1.0) -> float:
    return std_normal_cdf(-(mu / sigma) * l1_l2_ratio(b))


def _geometric_ratio(xi: float) -> float:
    # l1/l2 of (1, 1/xi, 1/xi^2, ...)
    return math.sqrt((xi + 1.0) / (xi - 1.0))


def uniform_mislearning(q: float, sigma: float, mu: float = 1.0) -> MislearningProb:
    if q == 0:
        raise NoSocialLearning("q = 0 has no social learning; the limit is discontinuous there")
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    value = std_normal_cdf(-(mu / sigma) * math.sqrt((q + 2.0) / q))
    return MislearningProb(value, "uniform", {"q": q, "sigma": sigma})


def two_groups_xi(qs: float, qd: float) -> tuple[float, float]:
    """Roots of x^2 - qd x - (1 + qs) = 0, larger first."""
    if not (0.0 <= qs <= 1.0 and 0.0 <= qd <= 1.0):
        raise ValueError("qs and qd must lie in [0, 1]")
    root = math.sqrt(qd * qd + 4.0 * qs + 4.0)
    return (qd + root) / 2.0, (qd - root) / 2.0


def two_groups_mislearning(qs: float, qd: float, sigma: float, mu: float = 1.0) -> MislearningProb:
    if qd == 0:
        raise DisconnectedGroups("qd = 0 leaves the two groups disconnected")
    xi_plus, xi_minus = two_groups_xi(qs, qd)
    value = std_normal_cdf(-(mu / sigma) * _geometric_ratio(xi_plus))
    return MislearningProb(
        value, "two-groups", {"qs": qs, "qd": qd, "sigma": sigma},
        {"xi_plus": xi_plus, "xi_minus": xi_minus},
    )


def xi_partials(qs: float, qd: float) -> tuple[float, float]:
    """(d xi_plus / d qs, d xi_plus / d qd) from the root formula."""
    root = math.sqrt(qd * qd + 4.0 * qs + 4.0)
    return 1.0 / root, 0.5 * (1.0 + qd / root)


def dprob_dxi(xi: float, sigma: float, mu: float = 1.0) -> float:
    g = _geometric_ratio(xi)
    r = mu / sigma
    return std_normal_pdf(r * g) * r / (g * (xi - 1.0) ** 2)


def homophily_rebalance_derivative(qs: float, qd: float, sigma: float, h: float = 1e-4, mu: float = 1.0) -> float:
    """Central difference of mislearning along (qs + t, qd - t) at t = 0.

    Moves link weight from between-group to within-group ties while keeping
    qs + qd fixed, i.e. raises the homophily index (qs - qd)/(qs + qd).
    """
    if qs + h > 1.0 or qs - h < 0.0 or qd - h <= 0.0 or qd + h > 1.0:
        raise ValueError("finite-difference step leaves the parameter domain")
    up = two_groups_mislearning(qs + h, qd - h, sigma, mu).value
    down = two_groups_mislearning(qs - h, qd + h, sigma, mu).value
    return (up - down) / (2.0 * h)


def homophily_rebalance_derivative_exact(qs: float, qd: float, sigma: float, mu: float = 1.0) -> float:
    dqs, dqd = xi_partials(qs, qd)
    xi, _ = two_groups_xi(qs, qd)
    return (dqs - dqd) * dprob_dxi(xi, sigma, mu)


def _truncated_sq_norm(d: int, tail_tol: float) -> tuple[float, int]:
    """||v||_2^2 for the constant out-degree limit vector, truncated at K terms.

    v_k = d! (k-1)!/(k+d-1)! <= d!/k^d, so the tail past K is at most
    (d!)^2 K^(1-2d)/(2d-1).  K doubles until that bound falls under
    tail_tol relative to the partial sum.
    """
    K = 1024
    fact = math.factorial(d)
    while True:
        v = constant_out_degree_limit_vector(d, K)
        total = math.fsum(v * v)
        bound = fact**2 * K ** (1.0 - 2.0 * d) / (2.0 * d - 1.0)
        if bound <= tail_tol * total or K > 1 << 26:
            return total, K
        K *= 2


def constant_outdegree_mislearning(d: int, sigma: float, tail_tol: float = 1e-12, mu: float = 1.0) -> MislearningProb:
    """Long-run mislearning when every agent spreads total weight d over its predecessors.

    d = 1 learns correctly.  For d >= 2 the path weights approach the shape
    v_k = prod_{m<k} m/(m+d), whose l1 norm sums in closed form to d/(d-1);
    the l2 norm is a truncated series with an explicit tail bound.
    """
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    d = int(d)
    if d == 1:
        return MislearningProb(0.0, "constant-degree", {"d": d, "sigma": sigma})
    l1 = d / (d - 1.0)
    sq, K = _truncated_sq_norm(d, tail_tol)
    ratio = l1 / math.sqrt(sq)
    return MislearningProb(
        std_normal_cdf(-(mu / sigma) * ratio), "constant-degree", {"d": d, "sigma": sigma},
        {"l1": l1, "l2": math.sqrt(sq), "terms": K},
    )


def decay_mislearning(delta: float, sigma: float, mu: float = 1.0):
    """Long-run outcome when link weights decay as delta^(i-j).

    Above 1/2 the path weights follow the uniform-network recurrence with
    q = 2 delta - 1; exactly 1/2 weights all signals equally; below 1/2 the
    log-actions stay bounded and keep fluctuating.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    params = {"delta": delta, "sigma": sigma}
    if delta < 0.5:
        return NonConvergent("decay", params)
    if delta == 0.5:
        return MislearningProb(0.0, "decay", params)
    out = uniform_mislearning(2.0 * delta - 1.0, sigma, mu)
    return MislearningProb(out.value, "decay", params, {"equivalent_q": 2.0 * delta - 1.0})


def decay_threshold(qs: float, qd: float) -> float:
    """delta_0: the decay rate at which the largest characteristic root equals 1."""
    return 2.0 / (qd + math.sqrt(qd * qd + 4.0 * qs + 4.0))


def decay_two_groups(delta: float, qs: float, qd: float, sigma: float, mu: float = 1.0):
    if qd == 0:
        raise DisconnectedGroups("qd = 0 leaves the two groups disconnected")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    xi_plus, xi_minus = two_groups_xi(qs, qd)
    xi_plus *= delta
    xi_minus *= delta
    d0 = decay_threshold(qs, qd)
    params = {"delta": delta, "qs": qs, "qd": qd, "sigma": sigma}
    extras = {"delta0": d0, "xi_plus": xi_plus, "xi_minus": xi_minus}
    if math.isclose(delta, d0, rel_tol=1e-12, abs_tol=0.0):
        return MislearningProb(0.0, "decay-two-groups", params, extras)
    if delta < d0:
        return NonConvergent("decay-two-groups", params, extras)
    value = std_normal_cdf(-(mu / sigma) * _geometric_ratio(xi_plus))
    return MislearningProb(value, "decay-two-groups", params, extras)
