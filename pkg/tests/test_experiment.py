import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from naivenet.experiment import (
    NAIVE,
    RATIONAL_BOUND,
    ExperimentSpec,
    accuracy_curves,
    autarky_accuracy,
    naive_accuracy_exact,
    naive_count_distributions,
    prob_guess_left,
    rational_lower_bound,
)
from naivenet.signals import observation_llr_imputed

ALONE = 0.5 * math.erfc(-0.5 / math.sqrt(2))


def Phi(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def naive_by_enumeration(spec, ell):
    """Oracle: enumerate every action history of a short game, conditioning on state R."""
    n, q, mu, sigma = spec.n_agents, spec.q, spec.mu, spec.sigma
    acc = np.zeros(n)
    # distribution over histories (tuple of 1 = R, 0 = L)
    hist = {(): 1.0}
    for t in range(n):
        new = {}
        for h, ph in hist.items():
            p_r = 0.0
            for mask in itertools.product((0, 1), repeat=t):
                pm = math.prod(q if m else 1 - q for m in mask)
                nr = sum(1 for m, a in zip(mask, h) if m and a == 1)
                nl = sum(1 for m, a in zip(mask, h) if m and a == 0)
                # guess R iff 2s/sigma^2 + ell (nr - nl) > 0
                thr = -sigma**2 * ell * (nr - nl) / 2
                p_r += pm * (1 - Phi((thr - mu) / sigma))
            acc[t] += ph * p_r
            new[h + (1,)] = new.get(h + (1,), 0.0) + ph * p_r
            new[h + (0,)] = new.get(h + (0,), 0.0) + ph * (1 - p_r)
        hist = new
    return acc


class TestSpec:
    def test_defaults(self):
        s = ExperimentSpec(0.5)
        assert (s.n_agents, s.mu, s.sigma) == (40, 1.0, 2.0)

    @pytest.mark.parametrize("q", [-0.1, 1.1])
    def test_q_range(self, q):
        with pytest.raises(ValueError):
            ExperimentSpec(q)


class TestNaive:
    def test_first_agent(self):
        for q in (0.1, 0.5, 1.0):
            assert naive_accuracy_exact(ExperimentSpec(q, 5))[0] == pytest.approx(0.6915, abs=1e-4)

    def test_dense_table(self):
        acc = naive_accuracy_exact(ExperimentSpec(0.75))
        np.testing.assert_allclose(acc[32:40], 0.7768, atol=5e-4)

    def test_sparse_table(self):
        acc = naive_accuracy_exact(ExperimentSpec(0.25))
        table = [0.8773, 0.8780, 0.8786, 0.8792, 0.8797, 0.8801, 0.8805, 0.8808]
        np.testing.assert_allclose(acc[32:40], table, atol=5e-4)

    @pytest.mark.parametrize("q", [0.25, 0.6, 1.0])
    def test_matches_history_enumeration(self, q):
        spec = ExperimentSpec(q, 7)
        ell = observation_llr_imputed(1.0, 2.0)
        np.testing.assert_allclose(naive_accuracy_exact(spec), naive_by_enumeration(spec, ell), atol=1e-12)

    def test_guess_left_formula(self):
        spec = ExperimentSpec(0.5, 6)
        ell = 1.1
        F = prob_guess_left(spec, ell)
        assert F[3, 1] == pytest.approx(Phi(2.0 * ell * 2 / 2 - 0.5))
        assert F[0, 0] == pytest.approx(1 - ALONE)

    def test_count_distributions_sum_to_one(self):
        for n, dist, p_left in naive_count_distributions(ExperimentSpec(0.4, 30)):
            assert dist.probs.sum() == pytest.approx(1.0, abs=1e-10)
            assert np.all(dist.probs >= 0) and dist.m == n - 1
            assert dist.get(-1, n) == 0.0
            assert np.all((p_left >= 0) & (p_left <= 1))

    def test_q_zero_is_autarky(self):
        np.testing.assert_allclose(naive_accuracy_exact(ExperimentSpec(0.0, 10)), ALONE)

    def test_size_limit(self):
        with pytest.raises(ValueError):
            naive_accuracy_exact(ExperimentSpec(0.5, 65))


class TestRationalBound:
    def test_first_agent(self):
        assert rational_lower_bound(ExperimentSpec(0.75))[0] == pytest.approx(0.6915, abs=1e-4)

    def test_second_agent_by_quadrature(self):
        # agent 2 sees agent 1 with prob q and then follows the better of signal and signal+action
        q = 0.75
        p1 = ALONE
        c = math.log(p1 / (1 - p1))
        # in state R: guess R iff s > -sigma^2 c/2 after seeing R, s > +sigma^2 c/2 after seeing L
        seen = p1 * (1 - Phi((-2.0 * c - 1) / 2)) + (1 - p1) * (1 - Phi((2.0 * c - 1) / 2))
        expected = (1 - q) * p1 + q * seen
        assert rational_lower_bound(ExperimentSpec(q, 2))[1] == pytest.approx(expected, abs=1e-12)

    @settings(max_examples=30)
    @given(st.floats(0.01, 1.0))
    def test_never_below_autarky(self, q):
        spec = ExperimentSpec(q, 30)
        assert np.all(rational_lower_bound(spec) >= autarky_accuracy(spec) - 1e-12)

    def test_monte_carlo_of_constrained_strategy(self):
        # oracle: simulate agents that use only their signal and the latest observed predecessor
        rng = np.random.default_rng(0)
        R, n, q, sigma = 100_000, 12, 0.75, 2.0
        p = rational_lower_bound(ExperimentSpec(q, n))
        s = 1.0 + sigma * rng.standard_normal((R, n))
        acts = np.zeros((R, n), dtype=bool)
        for i in range(n):
            llr = 2 * s[:, i] / sigma**2
            if i:
                links = rng.random((R, i)) < q
                has = links.any(axis=1)
                last = np.where(has, i - 1 - np.argmax(links[:, ::-1], axis=1), 0)
                pj = p[last]
                c = np.log(pj / (1 - pj))
                seen = acts[np.arange(R), last]
                llr = llr + np.where(has, np.where(seen, c, -c), 0.0)
            acts[:, i] = llr > 0
        mc = acts.mean(axis=0)
        se = np.sqrt(p * (1 - p) / R)
        assert np.all(np.abs(mc - p) < 4 * se)

    def test_scale_invariance(self):
        # the bound depends on (mu, sigma) only through mu/sigma
        a = rational_lower_bound(ExperimentSpec(0.5, 20, mu=1.0, sigma=2.0))
        b = rational_lower_bound(ExperimentSpec(0.5, 20, mu=2.0, sigma=4.0))
        np.testing.assert_allclose(a, b, atol=1e-14)

    def test_state_relabeling(self):
        # accuracy in state L computed with mirrored signals equals accuracy in state R
        rng = np.random.default_rng(1)
        R, n, q, sigma = 50_000, 6, 0.5, 2.0
        p = rational_lower_bound(ExperimentSpec(q, n))
        for state in (1, -1):
            s = state * 1.0 + sigma * rng.standard_normal((R, n))
            llr = 2 * s / sigma**2
            guess = np.where(llr[:, 0] > 0, 1, -1)
            assert np.mean(guess == state) == pytest.approx(p[0], abs=4 * math.sqrt(p[0] * (1 - p[0]) / R))

    def test_domain(self):
        with pytest.raises(ValueError):
            rational_lower_bound(ExperimentSpec(0.0, 10))
        with pytest.raises(ValueError):
            rational_lower_bound(ExperimentSpec(0.5, 201))


class TestCurves:
    def test_crossing(self):
        table = accuracy_curves([ExperimentSpec(0.25), ExperimentSpec(0.75)])
        c = table.crossing
        assert c["first_sparse_ahead"] is not None and c["first_sparse_ahead"] <= 33
        assert c["dense_ahead_until"] >= 1
        assert len(table.rows) == 80

    def test_single_spec(self):
        table = accuracy_curves([ExperimentSpec(0.5, 10)], RATIONAL_BOUND)
        assert [r[0] for r in table.rows] == list(range(1, 11))
        assert table.crossing == {}
        accs = [r[3] for r in table.rows]
        assert np.all(np.diff(accs) >= -1e-12)

    def test_csv(self):
        table = accuracy_curves([ExperimentSpec(0.75, 3)], NAIVE)
        text = table.to_csv({"q": [0.75]})
        lines = text.splitlines()
        assert json.loads(lines[0][2:]) == {"q": [0.75]}
        assert lines[1] == "agent,q,model,accuracy"
        assert lines[2] == "1,0.75,naive,0.691462"
