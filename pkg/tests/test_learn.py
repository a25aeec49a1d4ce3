import math

import numpy as np
import pytest

from omegarl import (
    LabeledMdp,
    QTable,
    TGba,
    TrainConfig,
    Transition,
    alpha,
    build_product,
    epsilon,
    evaluate_policy,
    greedy_policy,
    q_update,
    train,
    value_iteration,
)
from omegarl.product import AcceptingReward


def two_state_loop_product():
    """One action everywhere: s0 -> s1, then a rewarded self-loop at s1."""
    m = LabeledMdp(
        num_states=2,
        initial=0,
        ap=frozenset({"a"}),
        enabled=(("go",), ("go",)),
        prob={(0, "go"): ((1, 1.0),), (1, "go"): ((1, 1.0),)},
        label={(1, "go", 1): frozenset({"a"})},
    )
    loop_a = Transition(0, frozenset({"a"}), 0)
    loop_empty = Transition(0, frozenset(), 0)
    b = TGba(
        1,
        0,
        frozenset({"a"}),
        frozenset({loop_a, loop_empty}),
        (frozenset({loop_a}),),
    )
    return build_product(m, b)


def test_epsilon_schedule():
    assert epsilon(1) == 0.95
    assert epsilon(19) == pytest.approx(0.05, abs=1e-15)
    values = [epsilon(n) for n in range(1, 200)]
    assert values == sorted(values, reverse=True)
    assert epsilon(10**9) < 1e-8
    with pytest.raises(ValueError):
        epsilon(0)


def test_alpha_schedule():
    assert alpha(1) == 1.0
    assert alpha(16, 0.85) == pytest.approx(math.exp(-0.85 * math.log(16)), abs=1e-12)
    assert alpha(16, 0.85) == pytest.approx(0.0947, abs=2e-4)
    with pytest.raises(ValueError):
        alpha(0)


def test_train_config_validation():
    with pytest.raises(ValueError, match="alpha_exponent"):
        TrainConfig(alpha_exponent=0.4)
    with pytest.raises(ValueError, match="gamma"):
        TrainConfig(gamma=1.0)
    with pytest.raises(ValueError, match="episodes"):
        TrainConfig(episodes=0)
    with pytest.raises(ValueError, match="epsilon_scope"):
        TrainConfig(epsilon_scope="weekly")
    cfg = TrainConfig()
    assert cfg.gamma == 0.95 and cfg.r_p == 2.0 and cfg.alpha_exponent == 0.85
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg


def test_q_update_one_step_target():
    p = two_state_loop_product()
    q = QTable(p)
    q_update(q, 0, "go", 2.0, 1, gamma=0.95, step_size=1.0)
    assert q.values[(0, "go")] == 2.0
    q2 = QTable(p)
    q_update(q2, 0, "go", 0.0, 1, gamma=0.95, step_size=0.7)
    assert q2.values[(0, "go")] == 0.0  # zero TD error leaves the entry alone


def test_q_update_fixed_point_of_optimal_values(augmented_product):
    """At the optimal Q-values the expected update is zero, so sampled TD
    errors must average out within noise for every state-action pair."""
    gamma, r_p = 0.95, 2.0
    values, _ = value_iteration(augmented_product, gamma, r_p)
    accepting = augmented_product.accepting_transitions()
    prob = augmented_product.mdp.prob
    enabled = augmented_product.mdp.enabled

    q_star = {}
    for (s, a), row in prob.items():
        q_star[(s, a)] = sum(
            p * ((r_p if (s, a, d) in accepting else 0.0) + gamma * values[d])
            for d, p in row
        )

    def best(s):
        return max(q_star[(s, a)] for a in enabled[s])

    rng = np.random.default_rng(51)
    pairs = sorted(prob)
    samples_per_pair = 10**5 // len(pairs) + 1
    for (s, a) in pairs:
        row = prob[(s, a)]
        dsts = [d for d, _ in row]
        ps = np.array([p for _, p in row])
        draws = rng.choice(len(dsts), size=samples_per_pair, p=ps)
        tds = np.array(
            [
                (r_p if (s, a, dsts[k]) in accepting else 0.0)
                + gamma * best(dsts[k])
                - q_star[(s, a)]
                for k in draws
            ]
        )
        se = tds.std() / math.sqrt(samples_per_pair)
        assert abs(tds.mean()) <= 5 * se + 1e-9


def test_greedy_policy_tie_breaking_and_errors(augmented_product):
    q = QTable(augmented_product)
    pi = greedy_policy(q)
    for s, acts in enumerate(augmented_product.mdp.enabled):
        assert pi.choice[s] == acts[0]  # all-zero table: lowest action id
    del q.values[(0, augmented_product.mdp.enabled[0][0])]
    with pytest.raises(KeyError):
        greedy_policy(q)


def test_greedy_policy_matches_value_iteration(augmented_product):
    gamma, r_p = 0.95, 2.0
    values, vi_policy = value_iteration(augmented_product, gamma, r_p)
    accepting = augmented_product.accepting_transitions()
    q = QTable(augmented_product)
    for (s, a), row in augmented_product.mdp.prob.items():
        q.values[(s, a)] = sum(
            p * ((r_p if (s, a, d) in accepting else 0.0) + gamma * values[d])
            for d, p in row
        )
    assert greedy_policy(q).choice == vi_policy.choice


def test_value_iteration_geometric_series():
    p = two_state_loop_product()
    values, policy = value_iteration(p, gamma=0.5, r_p=1.0)
    assert values[1] == pytest.approx(2.0, abs=1e-9)
    assert values[0] == pytest.approx(1.0, abs=1e-9)
    assert policy.choice == {0: "go", 1: "go"}


def test_value_iteration_finds_satisfying_policy(augmented_product):
    _, policy = value_iteration(augmented_product, gamma=0.95, r_p=2.0)
    assert evaluate_policy(augmented_product, policy).sat_probability == 1.0


def test_value_iteration_gamma_zero_is_myopic(augmented_product):
    r_p = 2.0
    accepting = augmented_product.accepting_transitions()
    _, policy = value_iteration(augmented_product, gamma=0.0, r_p=r_p)
    for s, acts in enumerate(augmented_product.mdp.enabled):
        def immediate(a):
            return sum(
                p * (r_p if (s, a, d) in accepting else 0.0)
                for d, p in augmented_product.mdp.prob[(s, a)]
            )
        best = max(immediate(a) for a in acts)
        chosen = policy.choice[s]
        assert immediate(chosen) == pytest.approx(best, abs=1e-12)
        for a in acts:  # lowest-id tie break among maximizers
            if immediate(a) == pytest.approx(best, abs=1e-12):
                assert chosen == a
                break


def test_train_is_deterministic(augmented_product):
    cfg = TrainConfig(episodes=6, steps_per_episode=80, sessions=2, rng_seed=9)
    r1 = train(augmented_product, AcceptingReward(augmented_product, cfg.r_p), cfg)
    r2 = train(augmented_product, AcceptingReward(augmented_product, cfg.r_p), cfg)
    assert np.array_equal(r1.curve.per_session, r2.curve.per_session)
    assert [p.choice for p in r1.policies] == [p.choice for p in r2.policies]


def test_train_q_values_bounded(augmented_product):
    cfg = TrainConfig(episodes=10, steps_per_episode=300, sessions=2, rng_seed=3)
    result = train(augmented_product, AcceptingReward(augmented_product, cfg.r_p), cfg)
    bound = cfg.r_p / (1.0 - cfg.gamma)
    for q in result.qtables:
        assert all(0.0 <= v <= bound + 1e-9 for v in q.values.values())


def test_train_collects_reward_and_reports_curves(augmented_product):
    cfg = TrainConfig(episodes=12, steps_per_episode=300, sessions=2, rng_seed=5)
    result = train(augmented_product, AcceptingReward(augmented_product, cfg.r_p), cfg)
    assert result.curve.per_session.shape == (2, 12)
    assert result.curve.mean.shape == (12,)
    assert (result.curve.per_session >= 0.0).all()
    assert result.curve.per_session.sum() > 0.0


def test_train_session_scope_available(augmented_product):
    cfg = TrainConfig(
        episodes=4, steps_per_episode=50, sessions=1, rng_seed=2, epsilon_scope="session"
    )
    result = train(
        augmented_product,
        AcceptingReward(augmented_product, cfg.r_p),
        cfg,
        track_satisfaction=False,
    )
    assert result.curve.per_session.shape == (1, 4)
