from fractions import Fraction

import numpy as np
import pytest

from mdpwf import (
    EXACT,
    FLOAT,
    AsymMdp,
    RandomMdpConfig,
    eval_positional,
    optimal_action_set,
    random_mdp,
    solve_discounted,
)


def test_alice_optimal_values(investment):
    res = solve_discounted(investment, 0, mode=EXACT)
    assert res.values.values == [Fraction(11), Fraction(18)]
    assert investment.mdp.actions[0][res.strategy[0]] == "b"


def test_bob_unrestricted(investment):
    res = solve_discounted(investment, 1, mode=EXACT)
    assert res.values.values[0] == Fraction(9, 2)
    assert investment.mdp.actions[0][res.strategy[0]] == "a"


def test_bob_restricted_to_alice_optimal(investment):
    res = solve_discounted(investment, 1, mode=EXACT, restriction=[[1], [0]])
    assert res.values.values[0] == Fraction(2)


def test_q_values_and_action_set(investment):
    res = solve_discounted(investment, 0, mode=EXACT)
    assert res.q.value(0, 0) == Fraction(31, 3)  # 3 + (2/3) * 11
    assert res.q.value(0, 1) == Fraction(11)
    sets = optimal_action_set(investment, res.q, res.values, mode=EXACT)
    assert sets == [[1], [0]]


def test_identical_actions_both_kept():
    asym = AsymMdp.build(
        states=["s0"],
        principals=[("A", Fraction(1, 2))],
        actions=[
            ("s0", "a", [("s0", 1)], 1),
            ("s0", "b", [("s0", 1)], 1),
        ],
    )
    res = solve_discounted(asym, 0, mode=EXACT)
    sets = optimal_action_set(asym, res.q, res.values, mode=EXACT)
    assert sets[0] == [0, 1]


def test_float_tie_tolerance_keeps_near_ties():
    asym = AsymMdp.build(
        states=["s0"],
        principals=[("A", Fraction(1, 2))],
        actions=[
            ("s0", "a", [("s0", 1)], 1),
            ("s0", "b", [("s0", 1)], 1 - 1e-12),
        ],
    )
    res = solve_discounted(asym, 0, mode=FLOAT)
    sets = optimal_action_set(asym, res.q, res.values, tie_tolerance=1e-9, mode=FLOAT)
    assert sets[0] == [0, 1]


def test_vi_requires_float_mode(investment):
    with pytest.raises(ValueError):
        solve_discounted(investment, 0, mode=EXACT, method="vi")


def test_empty_restriction_rejected(investment):
    with pytest.raises(ValueError):
        solve_discounted(investment, 0, restriction=[[], [0]])


def _bellman_residual(asym, res, restriction=None):
    # max_a q(s, a) must reproduce v(s)
    worst = 0.0
    for s in range(asym.n_states):
        allowed = range(len(asym.mdp.actions[s])) if restriction is None else restriction[s]
        best = max(float(res.q.value(s, a)) for a in allowed)
        worst = max(worst, abs(best - float(res.values.values[s])))
    return worst


def test_exact_bellman_residual_zero(investment):
    res = solve_discounted(investment, 0, mode=EXACT)
    for s in range(investment.n_states):
        best = max(
            res.q.value(s, a) for a in range(len(investment.mdp.actions[s]))
        )
        assert best == res.values.values[s]


def test_pi_vi_agree_on_seeded_instances():
    worst = 0.0
    for seed in range(100):
        cfg = RandomMdpConfig(
            num_states=3 + seed % 8,
            actions_per_state=2,
            num_principals=2,
            discounts=[Fraction(9, 10), Fraction(3, 10)],
            seed=seed,
        )
        asym = random_mdp(cfg)
        for i in range(2):
            pi = solve_discounted(asym, i, mode=FLOAT, method="pi")
            vi = solve_discounted(asym, i, mode=FLOAT, method="vi")
            gap = float(
                np.max(np.abs(np.asarray(pi.values.values) - np.asarray(vi.values.values)))
            )
            worst = max(worst, gap)
            assert _bellman_residual(asym, pi) < 1e-8
    assert worst < 2 * FLOAT.tolerance


def test_returned_strategy_evaluates_to_values():
    for seed in range(40):
        cfg = RandomMdpConfig(
            num_states=5,
            actions_per_state=3,
            num_principals=2,
            discounts=[Fraction(4, 5), Fraction(2, 5)],
            seed=seed,
        )
        asym = random_mdp(cfg)
        res = solve_discounted(asym, 0, mode=FLOAT, method="pi")
        ev = eval_positional(asym, res.strategy, FLOAT)
        gap = np.max(
            np.abs(np.asarray(ev.per_principal[0]) - np.asarray(res.values.values))
        )
        assert gap < 1e-9


def test_exact_strategy_evaluates_to_values(investment):
    res = solve_discounted(investment, 0, mode=EXACT)
    ev = eval_positional(investment, res.strategy, EXACT)
    assert list(ev.per_principal[0]) == list(res.values.values)
