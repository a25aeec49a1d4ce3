"""Tabular Q-learning on product-MDP simulators, plus a value-iteration
oracle for desk-scale verification.

Training runs independent seeded sessions; each episode restarts the
simulator at the product initial state while the Q-table and visit counts
persist across episodes within a session.  Exploration follows a
visit-count epsilon schedule and the learning rate decays per state-action
pair under a Robbins-Monro-compatible power law.  Value iteration is a
test oracle only and takes no part in training.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import asdict, dataclass

import numpy as np

from .mdp import PositionalPolicy
from .product import ProductMdp, evaluate_policy


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one experiment.

    ``epsilon_scope`` controls the visit counts behind the exploration
    schedule: "episode" restarts them with every episode (the default;
    exploration survives long enough for the trap-heavy products to be
    learned), "session" accumulates them across a whole session.
    """

    gamma: float = 0.95
    r_p: float = 2.0
    episodes: int = 200
    steps_per_episode: int = 1000
    sessions: int = 10
    epsilon_numerator: float = 0.95
    alpha_exponent: float = 0.85
    rng_seed: int = 0
    epsilon_scope: str = "episode"

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.r_p <= 0:
            raise ValueError("r_p must be positive")
        for name in ("episodes", "steps_per_episode", "sessions"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0.5 < self.alpha_exponent <= 1.0:
            raise ValueError(
                "alpha_exponent must lie in (0.5, 1] so that the step sizes "
                "sum to infinity while their squares stay summable"
            )
        if self.epsilon_numerator <= 0:
            raise ValueError("epsilon_numerator must be positive")
        if self.epsilon_scope not in ("episode", "session"):
            raise ValueError("epsilon_scope must be 'episode' or 'session'")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def epsilon(n: int, numerator: float = 0.95) -> float:
    """Exploration probability after the n-th visit to a state (n >= 1)."""
    if n < 1:
        raise ValueError("visit count must include the current visit")
    return min(1.0, numerator / n)


def alpha(k: int, exponent: float = 0.85) -> float:
    """Learning rate for the k-th update of a state-action pair (k >= 1)."""
    if k < 1:
        raise ValueError("update count must include the current update")
    return float(k) ** (-exponent)


class QTable:
    """Action values plus visit counts, initialized to zero on every
    enabled state-action pair of a product."""

    def __init__(self, product: ProductMdp):
        self.enabled = product.mdp.enabled
        self.values: dict[tuple[int, str], float] = {
            (s, a): 0.0 for s in range(product.num_states) for a in self.enabled[s]
        }
        self.state_visits: dict[int, int] = dict.fromkeys(range(product.num_states), 0)
        self.pair_visits: dict[tuple[int, str], int] = dict.fromkeys(self.values, 0)

    def best_value(self, s: int) -> float:
        return max(self.values[(s, a)] for a in self.enabled[s])

    def best_action(self, s: int) -> str:
        actions = self.enabled[s]
        if not actions:
            raise ValueError(f"no action values recorded for state {s}")
        best = actions[0]
        best_v = self.values[(s, best)]
        for a in actions[1:]:
            v = self.values[(s, a)]
            if v > best_v:
                best, best_v = a, v
        return best


def q_update(
    q: QTable, s: int, a: str, r: float, s_next: int, gamma: float, step_size: float
) -> QTable:
    """One-step Q-learning update toward ``r + gamma * max_a' Q(s', a')``."""
    target = r + gamma * q.best_value(s_next)
    q.values[(s, a)] += step_size * (target - q.values[(s, a)])
    return q


def greedy_policy(q: QTable) -> PositionalPolicy:
    """Greedy action per state, ties broken by the lowest action id."""
    choice = {}
    for s, actions in enumerate(q.enabled):
        for a in actions:
            if (s, a) not in q.values:
                raise KeyError(f"Q-table is missing the entry for ({s}, {a!r})")
        choice[s] = q.best_action(s)
    return PositionalPolicy(choice)


@dataclass(frozen=True)
class LearningCurve:
    """Per-episode average reward (total reward / steps) per session, plus
    the across-session mean and standard deviation per episode."""

    per_session: np.ndarray  # shape (sessions, episodes)
    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class TrainResult:
    qtables: tuple[QTable, ...]
    curve: LearningCurve
    policies: tuple[PositionalPolicy, ...]
    first_positive_episode: tuple[int | None, ...]
    first_sat1_episode: tuple[int | None, ...]
    final_sat_probability: tuple[float, ...]


def train(
    product: ProductMdp,
    scheme,
    cfg: TrainConfig,
    track_satisfaction: bool = True,
) -> TrainResult:
    """Q-learning over ``cfg.sessions`` independent seeded sessions.

    ``scheme`` is a reward callable with a per-episode ``reset()`` (see the
    product module).  After each episode the greedy policy is evaluated
    exactly to record when it first positively satisfies the specification
    and when its satisfaction probability first reaches one; the evaluation
    never feeds back into learning.
    """
    rows: dict[tuple[int, str], tuple[tuple[int, ...], tuple[float, ...]]] = {}
    for (s, a), row in product.mdp.prob.items():
        dsts = tuple(dst for dst, _ in row)
        cum = []
        acc = 0.0
        for _, p in row:
            acc += p
            cum.append(acc)
        rows[(s, a)] = (dsts, tuple(cum))
    enabled = product.mdp.enabled

    seeds = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.sessions)
    curves = np.zeros((cfg.sessions, cfg.episodes))
    qtables: list[QTable] = []
    policies: list[PositionalPolicy] = []
    first_pos: list[int | None] = []
    first_sat1: list[int | None] = []
    final_sat: list[float] = []

    for si in range(cfg.sessions):
        rng = np.random.default_rng(seeds[si])
        q = QTable(product)
        state_visits = q.state_visits
        pair_visits = q.pair_visits
        values = q.values
        pos_ep: int | None = None
        sat1_ep: int | None = None
        for ep in range(cfg.episodes):
            scheme.reset()
            if cfg.epsilon_scope == "episode":
                state_visits = dict.fromkeys(state_visits, 0)
                q.state_visits = state_visits
            s = product.mdp.initial
            total = 0.0
            for _ in range(cfg.steps_per_episode):
                state_visits[s] += 1
                eps = epsilon(state_visits[s], cfg.epsilon_numerator)
                actions = enabled[s]
                if rng.random() < eps:
                    a = actions[rng.integers(len(actions))]
                else:
                    a = actions[0]
                    best_v = values[(s, a)]
                    for cand in actions[1:]:
                        v = values[(s, cand)]
                        if v > best_v:
                            a, best_v = cand, v
                dsts, cum = rows[(s, a)]
                u = rng.random()
                dst = dsts[bisect_right(cum, u)] if len(dsts) > 1 else dsts[0]
                r = scheme((s, a, dst))
                pair_visits[(s, a)] += 1
                step_size = alpha(pair_visits[(s, a)], cfg.alpha_exponent)
                q_update(q, s, a, r, dst, cfg.gamma, step_size)
                total += r
                s = dst
            curves[si, ep] = total / cfg.steps_per_episode
            if track_satisfaction and sat1_ep is None:
                ev = evaluate_policy(product, greedy_policy(q))
                if pos_ep is None and ev.positively_satisfies:
                    pos_ep = ep + 1
                if ev.sat_probability == 1.0:
                    sat1_ep = ep + 1
        pol = greedy_policy(q)
        qtables.append(q)
        policies.append(pol)
        first_pos.append(pos_ep)
        first_sat1.append(sat1_ep)
        final_sat.append(
            evaluate_policy(product, pol).sat_probability if track_satisfaction else float("nan")
        )

    curve = LearningCurve(
        per_session=curves,
        mean=curves.mean(axis=0),
        std=curves.std(axis=0),
    )
    return TrainResult(
        qtables=tuple(qtables),
        curve=curve,
        policies=tuple(policies),
        first_positive_episode=tuple(first_pos),
        first_sat1_episode=tuple(first_sat1),
        final_sat_probability=tuple(final_sat),
    )


def value_iteration(
    product: ProductMdp, gamma: float, r_p: float, tol: float = 1e-10
) -> tuple[dict[int, float], PositionalPolicy]:
    """Optimal discounted values under the accepting-transition reward.

    Synchronous Bellman-optimality iteration to a sup-norm error below
    ``tol``; the returned greedy policy breaks ties by lowest action id.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    accepting = product.accepting_transitions()
    n = product.num_states
    enabled = product.mdp.enabled
    prob = product.mdp.prob
    reward = {
        (s, a, dst): (r_p if (s, a, dst) in accepting else 0.0)
        for (s, a), row in prob.items()
        for dst, _ in row
    }

    v = [0.0] * n
    threshold = tol if gamma == 0.0 else tol * (1.0 - gamma) / gamma
    while True:
        new_v = [0.0] * n
        delta = 0.0
        for s in range(n):
            best = -np.inf
            for a in enabled[s]:
                total = 0.0
                for dst, p in prob[(s, a)]:
                    total += p * (reward[(s, a, dst)] + gamma * v[dst])
                if total > best:
                    best = total
            new_v[s] = best
            delta = max(delta, abs(best - v[s]))
        v = new_v
        if delta <= threshold:
            break

    choice = {}
    for s in range(n):
        best_a = None
        best_val = -np.inf
        for a in enabled[s]:
            total = 0.0
            for dst, p in prob[(s, a)]:
                total += p * (reward[(s, a, dst)] + gamma * v[dst])
            if total > best_val:
                best_a, best_val = a, total
        choice[s] = best_a
    return {s: v[s] for s in range(n)}, PositionalPolicy(choice)
