"""Observation networks, their generators, path weights and influence.

Agents are 1-based in the public API (agent 1 moves first). Internally the
weight matrix is a 0-based strictly lower-triangular numpy array, so
``weights[i-1, j-1]`` is the weight agent i puts on agent j.
"""

from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

UNIFORM = "uniform"
TWO_GROUPS = "two-groups"
DECAYING = "decay"
DECAYING_TWO_GROUPS = "decay-two-groups"
CONSTANT_OUT_DEGREE = "constant-degree"
ER_RANDOM = "er"
TWO_GROUPS_RANDOM = "two-groups-random"
AUTARKIC_MIX = "autarkic-mix"

DETERMINISTIC_FAMILIES = (UNIFORM, TWO_GROUPS, DECAYING, DECAYING_TWO_GROUPS, CONSTANT_OUT_DEGREE, AUTARKIC_MIX)
RANDOM_FAMILIES = (ER_RANDOM, TWO_GROUPS_RANDOM)

_PARAMS = {
    UNIFORM: ("q",),
    TWO_GROUPS: ("qs", "qd"),
    DECAYING: ("delta",),
    DECAYING_TWO_GROUPS: ("delta", "qs", "qd"),
    CONSTANT_OUT_DEGREE: ("d",),
    ER_RANDOM: ("q",),
    TWO_GROUPS_RANDOM: ("qs", "qd"),
    AUTARKIC_MIX: ("n1", "n2"),
}


class WrongConstructor(ValueError):
    """A random family was built deterministically, or vice versa."""


class NetworkViolation(ValueError):
    pass


def _check_unit(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class NetworkGenerator:
    """A parametric network family.

    ``params`` holds the family parameters by name (see ``_PARAMS``). An
    autarkic mix additionally carries the ``base`` generator it masks.
    """

    family: str
    params: dict = field(default_factory=dict)
    base: "NetworkGenerator | None" = None

    def __post_init__(self):
        if self.family not in _PARAMS:
            raise ValueError(f"unknown network family {self.family!r}")
        missing = [k for k in _PARAMS[self.family] if k not in self.params]
        if missing:
            raise ValueError(f"{self.family} needs parameters {missing}")
        p = self.params
        for key in ("q", "qs", "qd"):
            if key in p:
                _check_unit(key, p[key])
        if "delta" in p and not 0.0 < p["delta"] <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.family == CONSTANT_OUT_DEGREE and (int(p["d"]) != p["d"] or p["d"] < 1):
            raise ValueError("d must be a positive integer")
        if self.family == AUTARKIC_MIX:
            if self.base is None or self.base.family not in DETERMINISTIC_FAMILIES:
                raise ValueError("autarkic mix needs a deterministic base generator")
            if int(p["n1"]) < 1 or int(p["n2"]) < 1:
                raise ValueError("n1 and n2 must be positive")

    # constructors ---------------------------------------------------------
    @classmethod
    def uniform(cls, q):
        return cls(UNIFORM, {"q": q})

    @classmethod
    def two_groups(cls, qs, qd):
        return cls(TWO_GROUPS, {"qs": qs, "qd": qd})

    @classmethod
    def decaying(cls, delta):
        return cls(DECAYING, {"delta": delta})

    @classmethod
    def decaying_two_groups(cls, delta, qs, qd):
        return cls(DECAYING_TWO_GROUPS, {"delta": delta, "qs": qs, "qd": qd})

    @classmethod
    def constant_out_degree(cls, d):
        return cls(CONSTANT_OUT_DEGREE, {"d": int(d)})

    @classmethod
    def erdos_renyi(cls, q):
        return cls(ER_RANDOM, {"q": q})

    @classmethod
    def two_groups_random(cls, qs, qd):
        return cls(TWO_GROUPS_RANDOM, {"qs": qs, "qd": qd})

    @classmethod
    def autarkic_mix(cls, base, n1, n2):
        return cls(AUTARKIC_MIX, {"n1": int(n1), "n2": int(n2)}, base=base)

    # queries -------------------------------------------------------------
    @property
    def is_random(self) -> bool:
        return self.family in RANDOM_FAMILIES

    def autarkic_mask(self, n: int) -> np.ndarray:
        """Boolean mask of autarkic agents (0-based): blocks of n1 naive then n2 autarkic."""
        if self.family != AUTARKIC_MIX:
            return np.zeros(n, dtype=bool)
        n1, n2 = int(self.params["n1"]), int(self.params["n2"])
        return (np.arange(n) % (n1 + n2)) >= n1

    def row(self, i: int) -> np.ndarray:
        """Weights (or link probabilities) of 0-based agent ``i`` on agents 0..i-1."""
        p = self.params
        j = np.arange(i)
        dist = i - j
        fam = self.family
        if fam in (UNIFORM, ER_RANDOM):
            return np.full(i, float(p["q"]))
        if fam in (TWO_GROUPS, TWO_GROUPS_RANDOM):
            return np.where(dist % 2 == 0, float(p["qs"]), float(p["qd"]))
        if fam == DECAYING:
            return float(p["delta"]) ** dist
        if fam == DECAYING_TWO_GROUPS:
            base = np.where(dist % 2 == 0, float(p["qs"]), float(p["qd"]))
            return base * float(p["delta"]) ** dist
        if fam == CONSTANT_OUT_DEGREE:
            if i == 0:
                return np.zeros(0)
            return np.full(i, p["d"] / i)
        # autarkic mix: autarkic agents observe nobody, and nobody's path
        # may pass through them (their own weight rows are zero)
        r = self.base.row(i)
        if self.autarkic_mask(i + 1)[i]:
            return np.zeros(i)
        return r

    def to_json(self, n: int | None = None) -> str:
        return json.dumps(self.to_dict(n), sort_keys=True)

    def to_dict(self, n: int | None = None) -> dict:
        out = {"family": self.family, "params": dict(self.params)}
        if self.base is not None:
            out["base"] = self.base.to_dict()
        if n is not None:
            out["n"] = n
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkGenerator":
        base = cls.from_dict(d["base"]) if d.get("base") else None
        return cls(d["family"], dict(d["params"]), base=base)

    @classmethod
    def from_json(cls, text: str) -> tuple["NetworkGenerator", int | None]:
        d = json.loads(text)
        return cls.from_dict(d), d.get("n")

    def describe(self) -> str:
        parts = [f"{k}={v:g}" for k, v in self.params.items()]
        if self.base is not None:
            parts.append(f"base={self.base.describe()}")
        return ";".join(parts)


@dataclass(frozen=True, eq=False)
class ObservationNetwork:
    weights: np.ndarray
    autarkic: tuple = ()
    weight_cap: float | None = 1.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if not self.autarkic:
            object.__setattr__(self, "autarkic", (False,) * w.shape[0])
        elif len(self.autarkic) != w.shape[0]:
            raise ValueError("autarkic flags must have one entry per agent")

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def weight(self, i: int, j: int) -> float:
        """M_{i,j} with 1-based agents."""
        return float(self.weights[i - 1, j - 1])

    def neighbors(self, i: int) -> list[int]:
        return [j + 1 for j in np.flatnonzero(self.weights[i - 1])]

    def __eq__(self, other):
        if not isinstance(other, ObservationNetwork):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and tuple(self.autarkic) == tuple(other.autarkic)
        )

    @classmethod
    def empty(cls, n: int) -> "ObservationNetwork":
        return cls(np.zeros((n, n)))

    @classmethod
    def complete(cls, n: int) -> "ObservationNetwork":
        return cls(np.tril(np.ones((n, n)), k=-1))


def build_weighted(gen: NetworkGenerator, n: int) -> ObservationNetwork:
    if gen.is_random:
        raise WrongConstructor(f"{gen.family} is a random family; use sample_network")
    if n < 1:
        raise ValueError("n must be positive")
    w = np.zeros((n, n))
    for i in range(1, n):
        w[i, :i] = gen.row(i)
    cap = None if _base_family(gen) == CONSTANT_OUT_DEGREE else 1.0
    return ObservationNetwork(w, tuple(bool(x) for x in gen.autarkic_mask(n)), weight_cap=cap)


def _base_family(gen):
    return gen.base.family if gen.family == AUTARKIC_MIX else gen.family


def sample_network(gen: NetworkGenerator, n: int, rng: np.random.Generator) -> ObservationNetwork:
    if not gen.is_random:
        raise WrongConstructor(f"{gen.family} is deterministic; use build_weighted")
    w = np.zeros((n, n))
    for i in range(1, n):
        w[i, :i] = rng.random(i) < gen.row(i)
    return ObservationNetwork(w)


@dataclass(frozen=True)
class PathWeights:
    target: int
    b: np.ndarray

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.b)))

    @property
    def l2(self) -> float:
        return float(np.sqrt(np.sum(np.square(self.b))))


def path_weights(net: ObservationNetwork, target: int) -> PathWeights:
    """Row ``target`` of (I - M)^-1 by back-substitution.

    b[target] = 1 and, walking j downward,
    b[j] = sum_{k=j+1}^{target} b[k] * M[k, j].
    """
    if not 1 <= target <= net.n:
        raise IndexError(f"target {target} outside 1..{net.n}")
    t = target - 1
    M = net.weights
    b = np.zeros(target)
    b[t] = 1.0
    for j in range(t - 1, -1, -1):
        b[j] = b[j + 1 : t + 1] @ M[j + 1 : t + 1, j]
    return PathWeights(target, b)


def influence(net: ObservationNetwork, i: int, n: int) -> float:
    if not 1 <= i <= n:
        raise IndexError("need 1 <= i <= n")
    pw = path_weights(net, n)
    return float(pw.b[i - 1] / pw.l1)


def influence_vector(net: ObservationNetwork, n: int) -> np.ndarray:
    pw = path_weights(net, n)
    return pw.b / pw.l1


def correct_learning_diagnostic(gen: NetworkGenerator, horizons) -> list[tuple[int, float]]:
    """Max influence of any strict predecessor on agent n, for each horizon n."""
    out = []
    for n in horizons:
        n = int(n)
        if n < 2:
            raise ValueError("horizons must be at least 2")
        inf = influence_vector(build_weighted(gen, n), n)
        out.append((n, float(inf[:-1].max())))
    return out


def validate(net: ObservationNetwork):
    """Return None if the network is well formed, else a NetworkViolation."""
    M = net.weights
    upper = np.argwhere(np.triu(M) != 0)
    if len(upper):
        i, j = upper[0] + 1
        return NetworkViolation(f"upper-triangular weight at ({i},{j})")
    if not np.all(np.isfinite(M)):
        i, j = np.argwhere(~np.isfinite(M))[0] + 1
        return NetworkViolation(f"non-finite weight at ({i},{j})")
    bad = M < 0
    if net.weight_cap is not None:
        bad |= M > net.weight_cap
    if bad.any():
        i, j = np.argwhere(bad)[0] + 1
        return NetworkViolation(f"weight out of range at ({i},{j}): {M[i - 1, j - 1]!r}")
    for a, flag in enumerate(net.autarkic):
        if flag and np.any(M[a] != 0):
            return NetworkViolation(f"autarkic agent {a + 1} has nonzero observation weights")
    return None


def brute_force_path_weights(net: ObservationNetwork, target: int) -> np.ndarray:
    """Sum of weight products over every directed path from ``target`` back to each agent.

    Exponential in n; meant as a check for small networks.
    """
    t = target - 1
    M = net.weights
    b = np.zeros(target)
    b[t] = 1.0
    for j in range(t):
        inner = range(j + 1, t)
        total = 0.0
        for r in range(len(inner) + 1):
            for mids in itertools.combinations(inner, r):
                chain = (t,) + tuple(reversed(mids)) + (j,)
                prod = 1.0
                for a, c in zip(chain, chain[1:]):
                    prod *= M[a, c]
                    if prod == 0.0:
                        break
                total += prod
        b[j] = total
    return b


# serialization ------------------------------------------------------------

def to_edge_csv(net: ObservationNetwork) -> str:
    buf = io.StringIO()
    aut = ",".join(str(k + 1) for k, f in enumerate(net.autarkic) if f)
    cap = "none" if net.weight_cap is None else repr(net.weight_cap)
    buf.write(f"# n={net.n} autarkic={aut} cap={cap}\n")
    buf.write("i,j,weight\n")
    for i, j in np.argwhere(net.weights != 0):
        buf.write(f"{i + 1},{j + 1},{float(net.weights[i, j])!r}\n")
    return buf.getvalue()


def from_edge_csv(text: str, n: int | None = None) -> ObservationNetwork:
    autarkic = ()
    cap = 1.0
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "n" and n is None:
                    n = int(val)
                elif key == "autarkic" and val:
                    autarkic = tuple(int(v) for v in val.split(","))
                elif key == "cap":
                    cap = None if val == "none" else float(val)
            continue
        if line.startswith("i,"):
            continue
        i, j, w = line.split(",")
        edges.append((int(i), int(j), float(w)))
    if n is None:
        n = max((i for i, _, _ in edges), default=0)
    M = np.zeros((n, n))
    for i, j, w in edges:
        M[i - 1, j - 1] = w
    flags = tuple(k + 1 in autarkic for k in range(n))
    return ObservationNetwork(M, flags, weight_cap=cap)


def constant_out_degree_limit_vector(d: int, length: int) -> np.ndarray:
    """Limiting shape of path weights on the constant out-degree network.

    Entry k (1-based) is prod_{m=1}^{k-1} m/(m+d); for large n the path
    weights b_{n,i} are proportional to this vector in i.
    """
    k = np.arange(1, length + 1, dtype=float)
    logs = np.array([math.lgamma(x) for x in k]) + math.lgamma(d + 1)
    logs -= np.array([math.lgamma(x + d) for x in k])
    return np.exp(logs)
