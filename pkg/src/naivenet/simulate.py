"""Trajectory simulation and seeded Monte Carlo.

Replications are grouped into fixed-size blocks. Block ``k`` draws from its
own stream, ``SeedSequence(seed, spawn_key=(k,))``, so an estimate depends
only on (config, seed) and never on how blocks are spread over workers.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .network import (
    AUTARKIC_MIX,
    TWO_GROUPS_RANDOM,
    NetworkGenerator,
    ObservationNetwork,
    build_weighted,
)
from .signals import (
    BINARY,
    GAUSSIAN,
    TRIANGULAR,
    SignalModel,
    UnsupportedCombination,
    binary_action_kappa,
    observation_llr_imputed,
)

CONTINUOUS = "continuous"
BINARY_ACTIONS = "binary"
MIXED = "mixed"

KAPPA = "kappa"
ELL = "ell"

DEFAULT_BLOCK = 1000
WORKERS_ENV = "NAIVENET_WORKERS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def rule_value(model: SignalModel, rule: str) -> float:
    """Log-odds a naive agent adds for one observed action favouring state 1."""
    if rule == KAPPA:
        return binary_action_kappa(model)
    if rule == ELL:
        if model.kind != GAUSSIAN:
            raise UnsupportedCombination("the imputed-mean update is defined for Gaussian signals only")
        return observation_llr_imputed(model.mu, model.sigma)
    raise ValueError(f"unknown update rule {rule!r}")


def _decide(post, s_llr):
    """Binary guess from a posterior log-odds; exact ties follow the private signal, then 0."""
    return np.where(post > 0, 1, np.where(post < 0, 0, (s_llr > 0).astype(int)))


# single trajectories --------------------------------------------------------

@dataclass
class Trajectory:
    state: int
    signals: np.ndarray
    signal_llr: np.ndarray
    log_actions: np.ndarray
    binary_actions: np.ndarray
    action_space: tuple

    @property
    def n(self) -> int:
        return len(self.signals)

    def guesses(self) -> np.ndarray:
        """0/1 guess of every agent (binary agents' actions, sign of continuous ones)."""
        binary = np.array([a == BINARY_ACTIONS for a in self.action_space])
        return np.where(binary, self.binary_actions, _decide(self.log_actions, self.signal_llr))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("agent,signal,log_action,binary_action\n")
        for k in range(self.n):
            la = "" if self.action_space[k] == BINARY_ACTIONS else f"{self.log_actions[k]:.6g}"
            ba = str(int(self.binary_actions[k])) if self.action_space[k] == BINARY_ACTIONS else ""
            buf.write(f"{k + 1},{float(self.signals[k]):.6g},{la},{ba}\n")
        return buf.getvalue()


def naive_log_action(s_tilde: float, neighbor_log_actions, weights) -> float:
    neighbor_log_actions = np.asarray(neighbor_log_actions, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if neighbor_log_actions.shape != weights.shape:
        raise ValueError("neighbour actions and weights differ in length")
    return float(s_tilde + neighbor_log_actions @ weights)


def _check_state(state):
    if state not in (0, 1):
        raise ValueError("state must be 0 or 1")


def run_continuous_trajectory(net: ObservationNetwork, model: SignalModel, state: int,
                              rng: np.random.Generator, signals=None) -> Trajectory:
    if model.kind == BINARY:
        raise UnsupportedCombination("binary signals are not paired with continuous actions")
    _check_state(state)
    n = net.n
    s = model.sample(state, rng, size=n) if signals is None else np.asarray(signals, dtype=float)
    st = np.asarray(model.llr(s), dtype=float)
    a = np.empty(n)
    M = net.weights
    for i in range(n):
        a[i] = naive_log_action(st[i], a[:i], M[i, :i])
    return Trajectory(state, s, st, a, np.zeros(n, dtype=int), (CONTINUOUS,) * n)


def _require_01(net):
    w = net.weights
    if np.any((w != 0) & (w != 1)):
        raise UnsupportedCombination("binary actions need a realised 0/1 network")


def run_binary_trajectory(net: ObservationNetwork, model: SignalModel, state: int,
                          update_rule: str, rng: np.random.Generator, signals=None) -> Trajectory:
    """Every agent guesses 1 iff s_llr + r * (n_R - n_L) > 0 over observed neighbours."""
    _check_state(state)
    _require_01(net)
    r = rule_value(model, update_rule)
    n = net.n
    s = model.sample(state, rng, size=n) if signals is None else np.asarray(signals)
    st = np.asarray(model.llr(s), dtype=float)
    x = np.zeros(n)
    post = np.empty(n)
    acts = np.zeros(n, dtype=int)
    M = net.weights
    for i in range(n):
        diff = M[i, :i] @ x[:i]
        post[i] = st[i] + r * diff
        acts[i] = _decide(post[i], st[i])
        x[i] = 2 * acts[i] - 1
    return Trajectory(state, s, st, post, acts, (BINARY_ACTIONS,) * n)


def run_mixed_trajectory(net: ObservationNetwork, model: SignalModel, state: int,
                         rng: np.random.Generator, signals=None, continuous_parity: int = 1) -> Trajectory:
    """Odd agents (by default) hold continuous log-actions, even agents guess 0/1.

    Everyone sums observed continuous log-actions and adds kappa per observed
    binary action favouring state 1 (minus kappa per action favouring 0).
    ``continuous_parity=0`` swaps the roles of the two groups.
    """
    if model.kind != GAUSSIAN:
        raise UnsupportedCombination("mixed action spaces are defined for Gaussian signals")
    _check_state(state)
    _require_01(net)
    kappa = binary_action_kappa(model)
    n = net.n
    s = model.sample(state, rng, size=n) if signals is None else np.asarray(signals, dtype=float)
    st = np.asarray(model.llr(s), dtype=float)
    cont = np.zeros(n)
    x = np.zeros(n)
    post = np.empty(n)
    acts = np.zeros(n, dtype=int)
    spaces = []
    M = net.weights
    for i in range(n):
        post[i] = st[i] + M[i, :i] @ cont[:i] + kappa * (M[i, :i] @ x[:i])
        if (i + 1) % 2 == continuous_parity % 2:
            cont[i] = post[i]
            spaces.append(CONTINUOUS)
        else:
            acts[i] = _decide(post[i], st[i])
            x[i] = 2 * acts[i] - 1
            spaces.append(BINARY_ACTIONS)
    return Trajectory(state, s, st, post, acts, tuple(spaces))


# Monte Carlo ----------------------------------------------------------------

@dataclass(frozen=True)
class SimulationConfig:
    generator: NetworkGenerator
    model: SignalModel
    n: int
    R: int
    seed: int = 0
    actions: str = CONTINUOUS
    rule: str = KAPPA
    target: int | None = None
    block_size: int = DEFAULT_BLOCK

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be at least 1")
        if self.n < 1:
            raise ValueError("horizon must be at least 1")
        if self.actions not in (CONTINUOUS, BINARY_ACTIONS, MIXED):
            raise ValueError(f"unknown action space {self.actions!r}")
        if self.actions == CONTINUOUS and self.model.kind == BINARY:
            raise UnsupportedCombination("binary signals are not paired with continuous actions")
        if self.actions == BINARY_ACTIONS and self.model.kind == TRIANGULAR:
            raise UnsupportedCombination("triangular signals are not paired with binary actions")
        if self.actions == MIXED and self.model.kind != GAUSSIAN:
            raise UnsupportedCombination("mixed action spaces are defined for Gaussian signals")
        if self.actions != CONTINUOUS and not self.generator.is_random:
            w = build_weighted(self.generator, self.n).weights
            if np.any((w != 0) & (w != 1)):
                raise UnsupportedCombination("binary actions need 0/1 links")
        if self.target is not None and not 1 <= self.target <= self.n:
            raise ValueError("target agent outside the horizon")

    @property
    def classified_agent(self) -> int:
        """1-based agent whose guess defines mislearning."""
        if self.target is not None:
            return self.target
        if self.generator.family == AUTARKIC_MIX:
            naive = np.flatnonzero(~self.generator.autarkic_mask(self.n))
            return int(naive[-1]) + 1
        return self.n

    def describe(self) -> str:
        return (f"agent {self.classified_agent} guesses against the state "
                f"({self.actions} actions)")


@dataclass(frozen=True)
class MislearningEstimate:
    estimate: float
    standard_error: float
    R: int
    classifier: str
    wrong: int
    wrong_by_state: tuple = (0, 0)
    runs_by_state: tuple = (0, 0)
    wrong_per_agent: tuple = ()

    def by_state(self, state: int) -> tuple[float, float]:
        runs = self.runs_by_state[state]
        p = self.wrong_by_state[state] / runs
        return p, math.sqrt(p * (1 - p) / runs)

    def per_agent_accuracy(self) -> np.ndarray:
        return 1.0 - np.asarray(self.wrong_per_agent, dtype=float) / self.R


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def _binary_mask(actions: str, n: int) -> np.ndarray:
    if actions == CONTINUOUS:
        return np.zeros(n, dtype=bool)
    if actions == BINARY_ACTIONS:
        return np.ones(n, dtype=bool)
    return (np.arange(n) % 2) == 1  # 1-based even agents


def propagate_block(gen: NetworkGenerator, model: SignalModel, n: int, states: np.ndarray,
                    rng: np.random.Generator, binary_mask: np.ndarray, r: float,
                    weights: np.ndarray | None = None):
    """Run a block of independent societies side by side.

    Returns (signal log-odds, posterior log-odds, guesses), each (B, n).
    Random families draw each agent's links freshly per society; fixed
    weighted families use ``weights``.
    """
    B = len(states)
    st = model.llr(model.sample(states[:, None], rng, size=(B, n)))
    st = np.asarray(st, dtype=float)
    post = np.zeros((B, n))
    cont = np.zeros((B, n))
    x = np.zeros((B, n))
    guess = np.zeros((B, n), dtype=np.int8)
    any_binary = bool(binary_mask.any())
    for i in range(n):
        if i == 0:
            total = st[:, 0].copy()
        elif weights is not None:
            w = weights[i, :i]
            total = st[:, i] + cont[:, :i] @ w
            if any_binary:
                total += r * (x[:, :i] @ w)
        else:
            probs = gen.row(i).astype(np.float32)
            links = (rng.random((B, i), dtype=np.float32) < probs).astype(np.float64)
            total = st[:, i] + np.einsum("ij,ij->i", links, cont[:, :i])
            if any_binary:
                total += r * np.einsum("ij,ij->i", links, x[:, :i])
        post[:, i] = total
        g = _decide(total, st[:, i])
        guess[:, i] = g
        if binary_mask[i]:
            x[:, i] = 2 * g - 1
        else:
            cont[:, i] = total
    return st, post, guess


def _run_block(args):
    cfg, block = args
    start = block * cfg.block_size
    B = min(cfg.block_size, cfg.R - start)
    rng = _block_rng(cfg.seed, block)
    states = rng.integers(0, 2, size=B)
    mask = _binary_mask(cfg.actions, cfg.n)
    r = rule_value(cfg.model, cfg.rule) if mask.any() else 0.0
    weights = None if cfg.generator.is_random else build_weighted(cfg.generator, cfg.n).weights
    _, _, guess = propagate_block(cfg.generator, cfg.model, cfg.n, states, rng, mask, r, weights)
    wrong = guess != states[:, None]
    t = cfg.classified_agent - 1
    w_t = wrong[:, t]
    return (
        wrong.sum(axis=0).astype(np.int64),
        (int(np.sum(w_t & (states == 0))), int(np.sum(w_t & (states == 1)))),
        (int(np.sum(states == 0)), int(np.sum(states == 1))),
    )


def _map_blocks(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def estimate_mislearning(cfg: SimulationConfig, workers: int | None = None) -> MislearningEstimate:
    workers = default_workers() if workers is None else workers
    nblocks = -(-cfg.R // cfg.block_size)
    results = _map_blocks(_run_block, [(cfg, b) for b in range(nblocks)], workers)
    per_agent = np.zeros(cfg.n, dtype=np.int64)
    wbs = [0, 0]
    rbs = [0, 0]
    for pa, w, r in results:
        per_agent += pa
        for s in (0, 1):
            wbs[s] += w[s]
            rbs[s] += r[s]
    wrong = wbs[0] + wbs[1]
    p = wrong / cfg.R
    return MislearningEstimate(
        estimate=p,
        standard_error=math.sqrt(p * (1 - p) / cfg.R),
        R=cfg.R,
        classifier=cfg.describe(),
        wrong=wrong,
        wrong_by_state=tuple(wbs),
        runs_by_state=tuple(rbs),
        wrong_per_agent=tuple(int(v) for v in per_agent),
    )


# disagreement and mixed action spaces ---------------------------------------

@dataclass(frozen=True)
class EventFrequency:
    frequency: float
    standard_error: float
    events: int
    R: int
    extras: dict = field(default_factory=dict)


def _disagreement_block(args):
    cfg, block = args
    start = block * cfg.block_size
    B = min(cfg.block_size, cfg.R - start)
    rng = _block_rng(cfg.seed, block)
    states = rng.integers(0, 2, size=B)
    mask = np.ones(cfg.n, dtype=bool)
    r = rule_value(cfg.model, KAPPA)
    _, _, g = propagate_block(cfg.generator, cfg.model, cfg.n, states, rng, mask, r)
    odd, even = g[:, 0::2], g[:, 1::2]
    split = (
        (np.all(odd == 0, axis=1) & np.all(even == 1, axis=1))
        | (np.all(odd == 1, axis=1) & np.all(even == 0, axis=1))
    )
    return int(split.sum())


def estimate_disagreement(qs: float, qd: float, model: SignalModel, horizon: int, R: int,
                          seed: int = 0, workers: int | None = None,
                          block_size: int = DEFAULT_BLOCK) -> EventFrequency:
    """Frequency with which odd agents all play one action and even agents all the other.

    Binary actions, naive update kappa, two-groups random network.
    """
    if horizon < 2:
        raise ValueError("a split between groups needs a horizon of at least 2")
    if model.kind == TRIANGULAR:
        raise UnsupportedCombination("triangular signals are not paired with binary actions")
    gen = NetworkGenerator.two_groups_random(qs, qd)
    cfg = SimulationConfig(gen, model, horizon, R, seed, BINARY_ACTIONS, KAPPA, block_size=block_size)
    workers = default_workers() if workers is None else workers
    nblocks = -(-R // block_size)
    events = sum(_map_blocks(_disagreement_block, [(cfg, b) for b in range(nblocks)], workers))
    p = events / R
    return EventFrequency(p, math.sqrt(p * (1 - p) / R), events, R)


def _mixed_block(args):
    cfg, block, threshold, from_agent, tail = args
    start = block * cfg.block_size
    B = min(cfg.block_size, cfg.R - start)
    rng = _block_rng(cfg.seed, block)
    states = rng.integers(0, 2, size=B)
    mask = _binary_mask(MIXED, cfg.n)
    r = rule_value(cfg.model, KAPPA)
    _, post, g = propagate_block(cfg.generator, cfg.model, cfg.n, states, rng, mask, r)
    odd_idx = np.arange(from_agent - 1, cfg.n)
    odd_idx = odd_idx[~mask[odd_idx]]
    even_idx = np.flatnonzero(mask)[-tail:]
    high = np.all(post[:, odd_idx] > threshold, axis=1)
    low = np.all(post[:, odd_idx] < -threshold, axis=1)
    follow_high = high & np.all(g[:, even_idx] == 1, axis=1)
    follow_low = low & np.all(g[:, even_idx] == 0, axis=1)
    return int(high.sum()), int(follow_high.sum()), int(low.sum()), int(follow_low.sum())


def estimate_mixed_following(qs: float, qd: float, model: SignalModel, horizon: int, R: int,
                             seed: int = 0, threshold: float = 10.0, from_agent: int = 151,
                             tail: int = 10, workers: int | None = None,
                             block_size: int = DEFAULT_BLOCK) -> EventFrequency:
    """Among runs where every continuous (odd) agent from ``from_agent`` on is past
    +threshold, how often the last ``tail`` binary (even) agents all play 1.

    The mirror event (below -threshold, all play 0) is reported in ``extras``.
    """
    if from_agent > horizon:
        raise ValueError("from_agent beyond the horizon")
    gen = NetworkGenerator.two_groups_random(qs, qd)
    cfg = SimulationConfig(gen, model, horizon, R, seed, MIXED, KAPPA, block_size=block_size)
    workers = default_workers() if workers is None else workers
    nblocks = -(-R // block_size)
    tasks = [(cfg, b, threshold, from_agent, tail) for b in range(nblocks)]
    res = np.array(_map_blocks(_mixed_block, tasks, workers)).sum(axis=0)
    high, fh, low, fl = (int(v) for v in res)
    p = fh / high if high else float("nan")
    se = math.sqrt(p * (1 - p) / high) if high else float("nan")
    return EventFrequency(p, se, fh, high, {"low_runs": low, "low_followed": fl})


# convergence ------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceSummary:
    median_terminal_gap: float
    median_tail_gap: float
    median_final_abs: float
    median_final_per_agent: float
    tail_start: int
    R: int


def convergence_diagnostic(gen: NetworkGenerator, model: SignalModel, horizon: int, R: int,
                           seed: int = 0) -> ConvergenceSummary:
    """Successive log-action gaps |a_{k+1} - a_k| over the last 20% of the horizon.

    Signals are drawn in state 1.  Reports medians across replications of the
    final gap, of the mean tail gap, of |a_n| and of a_n / n.
    """
    if gen.is_random:
        raise ValueError("convergence diagnostic runs on deterministic weighted families")
    if model.kind == BINARY:
        raise UnsupportedCombination("binary signals are not paired with continuous actions")
    M = build_weighted(gen, horizon).weights
    rng = _block_rng(seed, 0)
    states = np.ones(R, dtype=int)
    _, post, _ = propagate_block(gen, model, horizon, states, rng, np.zeros(horizon, bool), 0.0, M)
    start = max(1, int(math.floor(0.8 * horizon)))
    gaps = np.abs(np.diff(post[:, start - 1:], axis=1))
    return ConvergenceSummary(
        median_terminal_gap=float(np.median(gaps[:, -1])),
        median_tail_gap=float(np.median(gaps.mean(axis=1))),
        median_final_abs=float(np.median(np.abs(post[:, -1]))),
        median_final_per_agent=float(np.median(post[:, -1] / horizon)),
        tail_start=start,
        R=R,
    )


def with_seed(cfg: SimulationConfig, seed: int) -> SimulationConfig:
    return replace(cfg, seed=seed)
