import math

import numpy as np
import pytest

from bneck.model import (
    CostRole,
    CostTable,
    DivergentCostError,
    EntryProfile,
    GameParams,
    InvalidParameterError,
    NonTerminatingProfileError,
    QueueState,
    binom_pmf,
    cost_enter,
    cost_wait,
    enumerate_states,
    step_cost_total,
    total_cost_evaluate,
)

import oracles

S = QueueState
SQRT5 = math.sqrt(5.0)


class TestTypes:
    def test_params_validation(self):
        GameParams(1, 1.5)
        with pytest.raises(InvalidParameterError):
            GameParams(0, 8.0)
        with pytest.raises(InvalidParameterError):
            GameParams(3, 1.0)

    def test_state_validation(self):
        with pytest.raises(InvalidParameterError):
            S(-1, 0)
        assert S(2, 1).total == 3

    def test_profile_probability_range(self):
        with pytest.raises(InvalidParameterError):
            EntryProfile({S(2, 0): 1.5})
        with pytest.raises(InvalidParameterError):
            EntryProfile({S(1, 1): 0.3})  # m = 1 states store q = 1

    def test_cost_table_validation(self):
        with pytest.raises(InvalidParameterError):
            CostTable(CostRole.PER_OUTSIDE_PLAYER, {S(0, 1): 1.0})
        with pytest.raises(InvalidParameterError):
            CostTable(CostRole.TOTAL_SOCIAL, {S(1, 0): -0.5})
        assert CostTable(CostRole.TOTAL_SOCIAL, {S(0, 2): 3.0})[S(0, 2)] == 3.0


class TestEnumerateStates:
    def test_n1(self):
        assert enumerate_states(1) == [S(1, 0)]

    def test_n2(self):
        assert enumerate_states(2) == [S(1, 0), S(1, 1), S(2, 0)]

    def test_n3_count_and_last(self):
        states = enumerate_states(3)
        assert len(states) == 6  # n(n+1)/2
        assert states[-1] == S(3, 0)

    @pytest.mark.parametrize("n", [1, 2, 5, 12])
    def test_continuations_precede(self, n):
        states = enumerate_states(n)
        assert len(states) == n * (n + 1) // 2
        pos = {s: j for j, s in enumerate(states)}
        for s in states:
            for i in range(s.m):
                if s.k + i - 1 < 0 or s.m - i < 1:
                    continue
                succ = S(s.m - i, s.k + i - 1)
                assert pos[succ] < pos[s]

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            enumerate_states(0)


class TestBinomPmf:
    def test_examples(self):
        assert binom_pmf(3, 0, 0.5) == pytest.approx(0.125, abs=0)
        assert binom_pmf(0, 0, 0.7) == 1.0
        # high-precision oracle value (mpmath, 50 digits)
        assert binom_pmf(100, 2, 1e-6) == pytest.approx(4.9495149235265971e-9, rel=1e-12)

    def test_errors(self):
        with pytest.raises(InvalidParameterError):
            binom_pmf(3, 4, 0.5)
        with pytest.raises(InvalidParameterError):
            binom_pmf(3, -1, 0.5)
        with pytest.raises(InvalidParameterError):
            binom_pmf(3, 1, 1.5)

    def test_against_scipy(self):
        stats = pytest.importorskip("scipy.stats")
        rng = np.random.default_rng(5)
        for _ in range(300):
            m = int(rng.integers(0, 400))
            i = int(rng.integers(0, m + 1))
            q = float(rng.random())
            assert binom_pmf(m, i, q) == pytest.approx(
                float(stats.binom.pmf(i, m, q)), rel=1e-10, abs=1e-300
            )

    def test_against_mpmath_extremes(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 60
        cases = [
            (10_000, 3, 1e-15),
            (10_000, 0, 1e-15),
            (10_000, 17, 1e-6),
            (2_000, 1000, 0.5),
            (1_000, 999, 1 - 1e-9),
            (512, 511, 0.75),
        ]
        for m, i, q in cases:
            exact = mp.binomial(m, i) * mp.mpf(q) ** i * (1 - mp.mpf(q)) ** (m - i)
            got = binom_pmf(m, i, q)
            assert got >= 0.0 and math.isfinite(got)
            assert got == pytest.approx(float(exact), rel=1e-10, abs=1e-290)

    @pytest.mark.parametrize("m", [1, 2, 5, 17, 100, 419, 1000])
    def test_sums_to_one(self, m):
        for q in (1e-15, 1e-6, 0.1, 0.5, 0.9, 1 - 1e-6, 0.0, 1.0):
            total = math.fsum(binom_pmf(m, i, q) for i in range(m + 1))
            assert abs(total - 1.0) <= 1e-12


class TestCostEnter:
    def test_examples(self):
        assert cost_enter(S(2, 0), 0.5, 8.0) == pytest.approx(2.0)
        assert cost_enter(S(1, 4), 0.7, 9.0) == pytest.approx(4 * 9.0)
        assert cost_enter(S(3, 1), 0.2, 10.0) == pytest.approx(12.0)

    def test_linear_in_q(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m, k = int(rng.integers(1, 30)), int(rng.integers(0, 10))
            w = 2.0 + float(rng.random()) * 50
            q1, q2 = sorted(rng.random(2))
            lam = float(rng.random())
            mid = lam * q1 + (1 - lam) * q2
            lhs = cost_enter(S(m, k), mid, w)
            rhs = lam * cost_enter(S(m, k), q1, w) + (1 - lam) * cost_enter(S(m, k), q2, w)
            assert lhs == pytest.approx(rhs, rel=1e-12)
        assert cost_enter(S(7, 3), 0.0, 11.0) == 3 * 11.0


class TestCostWait:
    def test_two_player_empty_queue(self):
        cont = {S(1, 0): 0.0}
        assert cost_wait(S(2, 0), 0.5, 8.0, cont) == pytest.approx(2.0)

    def test_lone_agent_recursion(self):
        for k in range(1, 6):
            cont = {S(1, k - 1): float(k - 1)}
            assert cost_wait(S(1, k), 0.33, 5.0, cont) == pytest.approx(float(k))

    def test_queue_of_one_at_q0(self):
        cont = {S(2, 0): SQRT5, S(1, 1): 1.0}
        assert cost_wait(S(2, 1), 0.0, 10.0, cont) == pytest.approx(1 + SQRT5, rel=1e-14)

    def test_divergent_at_zero(self):
        with pytest.raises(DivergentCostError):
            cost_wait(S(3, 0), 0.0, 8.0, {S(2, 0): 1.0, S(1, 1): 1.0})

    def test_diverges_as_q_to_zero(self):
        cont = {S(2, 0): 2.0, S(1, 1): 1.0}
        assert cost_wait(S(3, 0), 1e-9, 8.0, cont) > 1e6
        assert cost_wait(S(3, 0), 1e-300, 8.0, cont) > 1e250

    def test_continuous_in_q_for_nonempty_queue(self):
        cont = {S(3, 0): 3.0, S(2, 1): 2.5, S(1, 2): 2.0}
        qs = np.linspace(0, 1, 1001)
        vals = [cost_wait(S(3, 1), float(q), 7.0, cont) for q in qs]
        diffs = np.abs(np.diff(vals))
        assert diffs.max() < 0.05  # Lipschitz on a fine grid, no jumps


class TestStepCostTotal:
    def test_examples(self):
        assert step_cost_total(S(2, 0), 2, 8.0) == pytest.approx(8.0)
        assert step_cost_total(S(5, 0), 0, 3.0) == pytest.approx(5.0)
        assert step_cost_total(S(0, 3), 0, 5.0) == pytest.approx(10.0)

    def test_drain_sums_to_closed_form(self):
        w, k = 5.0, 3
        total = sum(step_cost_total(S(0, j), 0, w) for j in range(1, k + 1))
        assert total == pytest.approx(w * k * (k - 1) / 2.0)

    def test_errors(self):
        with pytest.raises(InvalidParameterError):
            step_cost_total(S(2, 0), 3, 8.0)


class TestTotalCostEvaluate:
    def test_all_enter_small_w(self):
        table, total = total_cost_evaluate(EntryProfile.all_enter(3), GameParams(3, 1.5))
        assert total == pytest.approx(4.5, rel=1e-14)
        assert table[S(0, 2)] == pytest.approx(1.5)

    def test_two_player_parametric(self):
        w = 8.0
        for p in (0.05, 0.3, 0.5, 0.9, 1.0):
            profile = EntryProfile({S(2, 0): p, S(1, 0): 1.0, S(1, 1): 1.0})
            _, total = total_cost_evaluate(profile, GameParams(2, w))
            expected = (2 - 2 * p + p * p * w) / (p * (2 - p))
            assert total == pytest.approx(expected, rel=1e-12)

    def test_two_player_collision(self):
        profile = EntryProfile.all_enter(2)
        _, total = total_cost_evaluate(profile, GameParams(2, 8.0))
        assert total == pytest.approx(8.0)

    def test_non_terminating(self):
        profile = EntryProfile({S(2, 0): 0.0, S(1, 0): 1.0, S(1, 1): 1.0})
        with pytest.raises(NonTerminatingProfileError):
            total_cost_evaluate(profile, GameParams(2, 8.0))

    @pytest.mark.parametrize("n", [2, 3, 5, 8, 12])
    def test_matches_direct_recursion(self, n):
        rng = np.random.default_rng(n)
        w = 2.0 + 10 * float(rng.random())
        for _ in range(4):
            p = [math.nan, 1.0] + [0.02 + 0.9 * float(x) for x in rng.random(n - 1)]
            profile = EntryProfile.from_empty_queue_probs(p, n)
            _, total = total_cost_evaluate(profile, GameParams(n, w))
            assert total == pytest.approx(
                oracles.total_cost_direct(p, n, w), rel=1e-10
            )

    def test_lone_agent_rule_zero_cost_for_heads_off_path(self):
        # T(1, k) must price the wait-out behavior: k + w k(k-1)/2
        profile = EntryProfile.all_enter(4)
        table, _ = total_cost_evaluate(profile, GameParams(4, 3.0))
        for k in range(0, 4):
            assert table[S(1, k)] == pytest.approx(k + 3.0 * k * (k - 1) / 2.0)
