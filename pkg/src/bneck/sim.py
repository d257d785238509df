"""Monte Carlo simulation of the queue game under an arbitrary entry profile.

Each trial plays the discrete-time loop of the game: outside agents flip
independent entry coins, entrants are appended to the queue in a uniformly
random order (Fisher-Yates on the trial's stream), the head of a non-empty
queue is processed, the remaining queue members pay w and the outside agents
pay 1.  Consecutive no-entry steps at an empty queue form a geometric
self-loop and are sampled in one shot rather than replayed, which changes
nothing in distribution.

Trial i draws from a Philox stream keyed by (seed, i), so results are
reproducible regardless of execution order, and aggregation is
order-independent at double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .model import (
    EntryProfile,
    GameParams,
    InvalidParameterError,
    NonTerminatingProfileError,
    QueueState,
    _binom_row,
    one_minus_pow,
)

__all__ = ["SimReport", "simulate_once", "simulate", "trial_rng"]


@dataclass(frozen=True)
class SimReport:
    trials: int
    mean_total: float
    std_error: float
    per_agent_mean: float
    max_steps_hit: int
    seed: int
    agent_means: Tuple[float, ...]


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream that is a pure function of (seed, trial)."""
    return np.random.Generator(
        np.random.Philox(
            np.random.SeedSequence(entropy=seed % 2**64, spawn_key=(trial,))
        )
    )


def default_step_cap(profile: EntryProfile, params: GameParams) -> int:
    """Heuristic cap: 1e6 * n / min empty-queue entry probability."""
    min_q = profile.min_empty_queue_prob(params.n)
    if min_q <= 0.0:
        raise NonTerminatingProfileError(
            "profile has zero entry probability at an empty-queue state"
        )
    return int(1e6 * params.n / min_q)


def simulate_once(
    profile: EntryProfile,
    params: GameParams,
    rng: np.random.Generator,
    max_steps: Optional[int] = None,
) -> Tuple[float, np.ndarray, int, bool]:
    """One play of the game; returns (total cost, per-agent costs, steps, truncated)."""
    n, w = params.n, params.w
    if max_steps is None:
        max_steps = default_step_cap(profile, params)
    costs = np.zeros(n)
    outside = list(range(n))
    queue: list[int] = []
    steps = 0
    truncated = False
    while outside:
        m, k = len(outside), len(queue)
        if m == 1 and k >= 1:
            # lone-agent rule: wait out the drain, then enter the empty queue
            costs[outside[0]] += k
            for pos, agent in enumerate(queue):
                costs[agent] += w * pos
            steps += k + 1
            outside.clear()
            queue.clear()
            break
        state = QueueState(m, k)
        q = profile.dynamics_q(state)
        if k == 0:
            if q <= 0.0:
                truncated = True
                break
            if q < 1.0:
                success = min(1.0, one_minus_pow(q, m))
                waited = int(rng.geometric(success)) - 1
                if steps + waited > max_steps:
                    truncated = True
                    break
                if waited:
                    for agent in outside:
                        costs[agent] += waited
                    steps += waited
            # entrant count conditional on at least one entering
            row = _binom_row(m, q)[1:]
            cdf = np.cumsum(row)
            i = 1 + int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            i = min(i, m)
            order = rng.permutation(m)[:i]
            entrants = [outside[j] for j in order]
        else:
            if q > 0.0:
                coins = rng.random(m)
                chosen = [j for j in range(m) if coins[j] < q]
            else:
                chosen = []
            if len(chosen) > 1:
                chosen = [chosen[j] for j in rng.permutation(len(chosen))]
            entrants = [outside[j] for j in chosen]
        entrant_set = set(entrants)
        outside = [a for a in outside if a not in entrant_set]
        queue.extend(entrants)
        if queue:
            queue.pop(0)  # head processed, pays nothing this step
            for agent in queue:
                costs[agent] += w
        for agent in outside:
            costs[agent] += 1.0
        steps += 1
        if steps > max_steps:
            truncated = True
            break
    if not truncated:
        for pos, agent in enumerate(queue):
            costs[agent] += w * pos
        steps += len(queue)
    return float(costs.sum()), costs, steps, truncated


def simulate(
    profile: EntryProfile,
    params: GameParams,
    trials: int,
    seed: int,
    max_steps: Optional[int] = None,
) -> SimReport:
    """Aggregate independent trials into a SimReport.

    Reproducible for fixed (profile, params, trials, seed): trial i uses a
    substream derived only from (seed, i).
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if max_steps is None:
        max_steps = default_step_cap(profile, params)
    n = params.n
    totals = np.empty(trials)
    agent_sums = np.zeros(n)
    truncations = 0
    for t in range(trials):
        total, per_agent, _, truncated = simulate_once(
            profile, params, trial_rng(seed, t), max_steps
        )
        totals[t] = total
        agent_sums += per_agent
        truncations += int(truncated)
    mean = float(np.mean(totals))
    se = float(np.std(totals, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SimReport(
        trials=trials,
        mean_total=mean,
        std_error=se,
        per_agent_mean=mean / n,
        max_steps_hit=truncations,
        seed=seed,
        agent_means=tuple(float(x) for x in agent_sums / trials),
    )
