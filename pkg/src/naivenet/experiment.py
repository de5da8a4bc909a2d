"""Exact per-agent accuracy in the binary-action laboratory setting.

Agents guess L or R in sequence on an Erdos-Renyi network where each agent
observes each predecessor with probability q.  Signals are N(mu, sigma^2) in
state R and N(-mu, sigma^2) in state L.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import binom

from .signals import observation_llr_imputed, std_normal_cdf

NAIVE = "naive"
RATIONAL_BOUND = "rational-bound"


@dataclass(frozen=True)
class ExperimentSpec:
    q: float
    n_agents: int = 40
    mu: float = 1.0
    sigma: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass
class ActionCountDistribution:
    """P[k] = probability (state R) that k of the first m agents played L."""

    m: int
    probs: np.ndarray

    def get(self, k: int, k_prime: int) -> float:
        if k < 0 or k_prime < 0 or k + k_prime != self.m:
            return 0.0
        return float(self.probs[k])


def prob_guess_left(spec: ExperimentSpec, ell: float | None = None) -> np.ndarray:
    """F[i, i'] = P[agent guesses L | state R, observes i L's and i' R's].

    A naive agent guesses L iff 2 mu s/sigma^2 + ell (i' - i) < 0, i.e.
    s < sigma^2 ell (i - i')/(2 mu), and s ~ N(mu, sigma^2) in state R.
    """
    if ell is None:
        ell = observation_llr_imputed(spec.mu, spec.sigma)
    N = spec.n_agents
    i = np.arange(N)
    diff = i[:, None] - i[None, :]
    return std_normal_cdf(spec.sigma * ell * diff / (2.0 * spec.mu) - spec.mu / spec.sigma)


def naive_count_distributions(spec: ExperimentSpec, ell: float | None = None):
    """Yield (agent index n, count distribution before n moves, P[n guesses L | k])."""
    if spec.n_agents > 64:
        raise ValueError("exact recursion supports at most 64 agents")
    F = prob_guess_left(spec, ell)
    N = spec.n_agents
    pmf = [binom.pmf(np.arange(m + 1), m, spec.q) for m in range(N)]
    dist = ActionCountDistribution(0, np.array([1.0]))
    for n in range(1, N + 1):
        m = n - 1
        # observed counts are independent thinnings of the k L's and m-k R's
        p_left = np.array([
            pmf[k] @ F[: k + 1, : m - k + 1] @ pmf[m - k] for k in range(m + 1)
        ])
        yield n, dist, p_left
        new = np.zeros(m + 2)
        new[1:] += dist.probs * p_left
        new[:-1] += dist.probs * (1.0 - p_left)
        dist = ActionCountDistribution(m + 1, new)


def naive_accuracy_exact(spec: ExperimentSpec, ell: float | None = None) -> np.ndarray:
    """Probability each naive agent guesses the true state.

    Naive agents react only to how many observed predecessors played each
    action, so the distribution over (number of L's, number of R's) among
    the first agents is propagated forward one agent at a time.
    """
    acc = np.empty(spec.n_agents)
    for n, dist, p_left in naive_count_distributions(spec, ell):
        acc[n - 1] = float(dist.probs @ (1.0 - p_left))
    return acc


def _accuracy_with_one_observation(p: float, mu: float, sigma: float) -> float:
    """Best accuracy from a Gaussian signal plus one binary action of accuracy p.

    The action shifts the signal log-odds by +-c with c = ln(p/(1-p)); the
    threshold on s moves by sigma^2 c/(2 mu) in either direction.
    """
    r = mu / sigma
    if p <= 0.5:
        return std_normal_cdf(r)
    shift = sigma * math.log(p / (1.0 - p)) / (2.0 * mu)
    return p * std_normal_cdf(r + shift) + (1.0 - p) * std_normal_cdf(r - shift)


def rational_lower_bound(spec: ExperimentSpec) -> np.ndarray:
    """Accuracy under the best strategy that uses only the own signal and the
    action of the most recent observed predecessor (whose identity is known).

    Any rational agent does at least this well.
    """
    if not 0.0 < spec.q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    if spec.n_agents > 200:
        raise ValueError("rational bound supports at most 200 agents")
    q, N = spec.q, spec.n_agents
    alone = std_normal_cdf(spec.mu / spec.sigma)
    p = np.empty(N)
    p[0] = alone
    gain = np.empty(N)
    for n in range(1, N):
        gain[n - 1] = _accuracy_with_one_observation(p[n - 1], spec.mu, spec.sigma)
        j = np.arange(n)
        # agent j+1 (0-based j) is the latest observed predecessor
        w = q * (1.0 - q) ** (n - 1 - j)
        p[n] = (1.0 - q) ** n * alone + w @ gain[:n]
    return p


def autarky_accuracy(spec: ExperimentSpec) -> float:
    return std_normal_cdf(spec.mu / spec.sigma)


@dataclass(frozen=True)
class CurveTable:
    rows: list
    crossing: dict

    def to_csv(self, header: dict | None = None) -> str:
        buf = io.StringIO()
        if header is not None:
            buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        buf.write("agent,q,model,accuracy\n")
        for agent, q, model, acc in self.rows:
            buf.write(f"{agent},{q:.6g},{model},{acc:.6g}\n")
        return buf.getvalue()


def accuracy_curves(specs, model: str = NAIVE) -> CurveTable:
    """Per-agent accuracy for each spec, plus where the sparsest network overtakes the densest.

    ``crossing`` maps "first_sparse_ahead" to the first agent from which the
    lowest-q curve stays above the highest-q curve (None if it never does),
    and "dense_ahead_until" to the last agent before that.
    """
    fn = naive_accuracy_exact if model == NAIVE else rational_lower_bound
    curves = {}
    rows = []
    for spec in specs:
        acc = fn(spec)
        curves[spec.q] = acc
        rows.extend((k + 1, spec.q, model, float(a)) for k, a in enumerate(acc))
    crossing = {}
    if len(curves) >= 2:
        sparse, dense = curves[min(curves)], curves[max(curves)]
        n = min(len(sparse), len(dense))
        ahead = sparse[:n] > dense[:n]
        first = None
        for k in range(n - 1, -1, -1):
            if not ahead[k]:
                break
            first = k + 1
        crossing = {"first_sparse_ahead": first,
                    "dense_ahead_until": None if first is None else first - 1,
                    "sparse_q": min(curves), "dense_q": max(curves)}
    return CurveTable(rows, crossing)


def spec_header(spec: ExperimentSpec, model: str) -> dict:
    out = asdict(spec)
    out["model"] = model
    return out
