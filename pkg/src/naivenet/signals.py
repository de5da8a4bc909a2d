"""Private signal models and log-odds transforms.

All log-odds are ln(P[w=1 | .] / P[w=0 | .]). The Gaussian model draws
s ~ N(+mu, sigma^2) in state 1 and N(-mu, sigma^2) in state 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

GAUSSIAN = "gaussian"
BINARY = "binary"
TRIANGULAR = "triangular"

KINDS = (GAUSSIAN, BINARY, TRIANGULAR)


class UnsupportedCombination(ValueError):
    """Signal model cannot be paired with the requested action space or update."""


def std_normal_cdf(x):
    """Standard Gaussian distribution function.

    Accepts scalars or arrays; scalars return a Python float.
    """
    out = ndtr(x)
    if np.ndim(out) == 0:
        return float(out)
    return out


def std_normal_pdf(x):
    out = np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)
    if np.ndim(out) == 0:
        return float(out)
    return out


def posterior_to_llr(p01: float) -> float:
    if not 0.0 < p01 < 1.0:
        raise ValueError(f"posterior must lie strictly inside (0, 1), got {p01!r}")
    return math.log(p01) - math.log1p(-p01)


def llr_to_posterior(llr: float) -> float:
    # split by sign so exp never overflows
    if llr >= 0:
        return 1.0 / (1.0 + math.exp(-llr))
    e = math.exp(llr)
    return e / (1.0 + e)


def llr_gaussian(s, sigma: float, mu: float = 1.0):
    """Log-odds of a Gaussian signal: 2*mu*s/sigma^2 (2s/sigma^2 at mu=1)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return 2.0 * mu * s / sigma**2


def llr_triangular(s):
    """Log-odds of a triangular signal, for which P[w=1 | s] = s."""
    arr = np.asarray(s, dtype=float)
    if np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError("triangular signal must lie strictly inside (0, 1)")
    out = np.log(arr) - np.log1p(-arr)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SignalModel:
    kind: str
    mu: float = 1.0
    sigma: float = 1.0
    p: float = 0.75

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == GAUSSIAN:
            if not self.sigma > 0:
                raise ValueError("Gaussian signals need sigma > 0")
            if not self.mu > 0:
                raise ValueError("Gaussian signals need mu > 0 to be informative")
        if self.kind == BINARY and not 0.5 < self.p < 1.0:
            raise ValueError("binary signals need 1/2 < p < 1")

    @classmethod
    def gaussian(cls, mu: float = 1.0, sigma: float = 1.0) -> "SignalModel":
        return cls(GAUSSIAN, mu=mu, sigma=sigma)

    @classmethod
    def binary(cls, p: float) -> "SignalModel":
        return cls(BINARY, p=p)

    @classmethod
    def triangular(cls) -> "SignalModel":
        return cls(TRIANGULAR)

    def describe(self) -> str:
        if self.kind == GAUSSIAN:
            return f"gaussian(mu={self.mu:g};sigma={self.sigma:g})"
        if self.kind == BINARY:
            return f"binary(p={self.p:g})"
        return "triangular"

    @property
    def symmetric(self) -> bool:
        return True

    def sample(self, state, rng: np.random.Generator, size=None):
        """Draw raw signals given the state (scalar or array of 0/1)."""
        state = np.asarray(state)
        shape = size if size is not None else state.shape
        if self.kind == GAUSSIAN:
            sign = 2.0 * state - 1.0
            return sign * self.mu + self.sigma * rng.standard_normal(shape)
        if self.kind == BINARY:
            correct = rng.random(shape) < self.p
            return np.where(correct, state, 1 - state).astype(np.int8)
        u = rng.random(shape)
        # inverse cdf of 2s (state 1) and 2-2s (state 0)
        root = np.sqrt(u)
        return np.where(state == 1, root, 1.0 - root)

    def llr(self, s):
        """Private-signal log-odds for raw signal values."""
        if self.kind == GAUSSIAN:
            return llr_gaussian(np.asarray(s, dtype=float), self.sigma, self.mu)
        if self.kind == BINARY:
            k = math.log(self.p / (1.0 - self.p))
            return np.where(np.asarray(s) == 1, k, -k).astype(float)
        # sqrt(u) can round to exactly 1.0 for u within 1 ulp of 1
        s = np.clip(np.asarray(s, dtype=float), 1e-300, np.nextafter(1.0, 0.0))
        return np.log(s) - np.log1p(-s)

    def sample_llr(self, state, rng: np.random.Generator, size=None):
        return self.llr(self.sample(state, rng, size))


def sample_signal(model: SignalModel, state: int, rng: np.random.Generator) -> float:
    if state not in (0, 1):
        raise ValueError("state must be 0 or 1")
    return float(model.sample(state, rng, size=()))


def binary_action_kappa(model: SignalModel) -> float:
    """Naive update from seeing one binary action that favours state 1.

    The observer treats the action as revealing only that the predecessor's
    signal favoured state 1, so the update is the log-likelihood ratio of that
    event.
    """
    if model.kind == BINARY:
        return math.log(model.p / (1.0 - model.p))
    if model.kind == GAUSSIAN:
        r = model.mu / model.sigma
        return math.log(std_normal_cdf(r)) - math.log(std_normal_cdf(-r))
    raise UnsupportedCombination("triangular signals are not paired with binary actions")


def observation_llr_imputed(mu: float, sigma: float, form: str = "conditional-mean") -> float:
    """Naive update that imputes the conditional mean signal behind an observed action.

    ``form="conditional-mean"`` returns the log-odds of the signal
    E[s | s > 0, w=1] = mu + sigma*phi(mu/sigma)/Phi(mu/sigma), which is
    (2 mu/sigma^2) times that mean.  The exact naive recursion in
    ``experiment`` uses this value.

    ``form="printed"`` returns (2/sigma^2) * (mu + sigma*phi(-mu/sigma)) /
    (1 - Phi(-mu/sigma)), a variant that divides mu by Phi as well; it is
    kept for comparison only.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    r = mu / sigma
    if form == "conditional-mean":
        return (2.0 * mu / sigma**2) * (mu + sigma * std_normal_pdf(r) / std_normal_cdf(r))
    if form == "printed":
        return (2.0 / sigma**2) * (mu + sigma * std_normal_pdf(-r)) / (1.0 - std_normal_cdf(-r))
    raise ValueError(f"unknown form {form!r}")
