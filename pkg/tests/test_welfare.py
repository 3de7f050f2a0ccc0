from fractions import Fraction

import pytest

from mdpwf import (
    EXACT,
    FLOAT,
    AsymMdp,
    CertificationError,
    HorizonExceededError,
    RandomMdpConfig,
    advantages,
    badly_spaced,
    enumerate_positional,
    eval_positional,
    find_kappa,
    kappa_estimate,
    long_term,
    optimize,
    random_mdp,
    solve_discounted,
)


def _names(asym, sigma):
    return [asym.mdp.actions[s][a] for s, a in enumerate(sigma)]


def test_long_term_investment(investment):
    lt = long_term(investment, EXACT)
    assert _names(investment, lt.tail) == ["b", "b"]
    assert lt.restricted == [[1], [0]]
    assert lt.values[0].values == [Fraction(11), Fraction(18)]
    assert lt.values[1].values == [Fraction(2), Fraction(9)]


def test_long_term_single_principal(investment):
    solo = AsymMdp(
        mdp=investment.mdp,
        principals=investment.principals[:1],
        rewards=[[r[:1] for r in per_s] for per_s in investment.rewards],
    )
    lt = long_term(solo, EXACT)
    direct = solve_discounted(solo, 0, mode=EXACT)
    assert lt.values[0].values == direct.values.values
    assert lt.tail == direct.strategy


def test_advantages_investment(investment):
    lt = long_term(investment, EXACT)
    adv = advantages(investment, lt, EXACT)
    assert adv.delta0[(0, 0)] == [Fraction(-2, 3), Fraction(5, 3)]
    assert adv.delta0[(0, 1)] == [Fraction(0), Fraction(0)]
    assert adv.delta0[(1, 0)] == [Fraction(0), Fraction(0)]
    assert adv.minimal_nonzero[(0, 0)] == 0
    assert adv.retained == {(0, 1), (1, 0)}


def test_advantage_sign_pattern_on_deviating_example(ex4):
    lt = long_term(ex4, EXACT)
    adv = advantages(ex4, lt, EXACT)
    row = adv.delta0[(0, 0)]  # action a at s0
    assert row[0] < 0 < row[1]


def test_certification_rejects_tampered_values(investment):
    lt = long_term(investment, EXACT)
    lt.values[0].values[0] += 1
    with pytest.raises(CertificationError):
        advantages(investment, lt, EXACT)


def test_find_kappa_investment(investment):
    lt = long_term(investment, EXACT)
    adv = advantages(investment, lt, EXACT)
    lam0, lam1 = investment.discounts
    d = adv.delta0[(0, 0)]
    # the aggregate advantage stays positive through depth 1 and flips at 2
    assert d[0] + d[1] == Fraction(1)
    assert lam0 * d[0] + lam1 * d[1] == Fraction(1, 9)
    assert lam0**2 * d[0] + lam1**2 * d[1] == Fraction(-1, 9)
    assert find_kappa(investment, adv, mode=EXACT) == 2


@pytest.mark.parametrize(
    "name,expected",
    [("appendix_ex2", 2), ("appendix_ex3", 1), ("appendix_ex4", 1)],
)
def test_find_kappa_worked_examples(name, expected):
    # depths hand-checked by evaluating every advantage prefix sum
    from mdpwf import builtin

    asym = builtin(name)
    lt = long_term(asym, EXACT)
    adv = advantages(asym, lt, EXACT)
    assert find_kappa(asym, adv, mode=EXACT) == expected


def test_find_kappa_badly_spaced_family():
    b10 = badly_spaced(10)
    lt = long_term(b10, FLOAT)
    adv = advantages(b10, lt, FLOAT)
    assert find_kappa(b10, adv, mode=FLOAT) == 761
    # exact arithmetic lands on the same crossing
    lt_e = long_term(b10, EXACT)
    adv_e = advantages(b10, lt_e, EXACT)
    assert find_kappa(b10, adv_e, mode=EXACT) == 761


def test_find_kappa_horizon_cap():
    b10 = badly_spaced(10)
    lt = long_term(b10, FLOAT)
    adv = advantages(b10, lt, FLOAT)
    with pytest.raises(HorizonExceededError):
        find_kappa(b10, adv, max_kappa=10, mode=FLOAT)


def test_kappa_estimate_investment(investment):
    lt = long_term(investment, EXACT)
    adv = advantages(investment, lt, EXACT)
    est = kappa_estimate(investment, adv, EXACT)
    entry = est.per_action[(0, 0)]
    assert entry.minimal_index == 0
    assert entry.kappa_prime == Fraction(5, 2)
    assert entry.kappa == 2  # ceil(log2 2.5)
    assert est.per_action[(0, 1)].kappa == 0
    assert est.bound == 2


def test_kappa_estimate_bounds_adaptive():
    for seed in range(40):
        cfg = RandomMdpConfig(
            num_states=4,
            actions_per_state=2,
            num_principals=3,
            discounts=[Fraction(9, 10), Fraction(1, 2), Fraction(1, 5)],
            seed=seed,
        )
        asym = random_mdp(cfg)
        lt = long_term(asym, FLOAT)
        adv = advantages(asym, lt, FLOAT)
        assert kappa_estimate(asym, adv, FLOAT).bound >= find_kappa(asym, adv, mode=FLOAT)


def test_optimize_investment_exact(investment):
    res = optimize(investment, mode=EXACT)
    assert res.kappa == 2
    assert [_names(investment, row)[0] for row in res.strategy.prefix] == ["a", "a"]
    assert _names(investment, res.strategy.tail) == ["b", "b"]
    rep = res.reports["s0"]
    assert rep.social_welfare == Fraction(127, 9)
    assert rep.baseline == Fraction(13)
    assert rep.deviation_gain == Fraction(10, 9)
    assert rep.per_principal == [Fraction(89, 9), Fraction(38, 9)]


def test_optimize_six_state_example(ex3):
    res = optimize(ex3, mode=EXACT)
    assert res.kappa == 1
    assert _names(ex3, res.strategy.tail) == ["b", "d", "f", "g", "h", "k"]
    rep = res.reports["s0"]
    # V0(s0) = 0.99^2 * (5 + 0.99 * 1100), V1(s0) = 23/45000, no deviation
    assert res.long_term.values[0].values[0] == Fraction(5361147, 5000)
    assert res.long_term.values[1].values[0] == Fraction(23, 45000)
    assert rep.deviation_gain == 0
    assert rep.social_welfare == Fraction(24125173, 22500)


def test_optimize_seven_state_example(ex4):
    res = optimize(ex4, mode=EXACT)
    assert res.kappa == 1
    assert _names(ex4, res.strategy.tail) == ["b", "d", "f", "g", "j", "k", "m"]
    rep = res.reports["s0"]
    # gain = delta(s0, a, 0) + delta(s0, a, 1), substituted by hand
    assert rep.deviation_gain == Fraction(15921503, 3400000)
    assert res.strategy.prefix[0][0] == 0  # deviate with a at s0
    assert abs(float(rep.social_welfare) - 122.325373) < 1e-6


def test_optimize_four_state_example(ex2):
    res = optimize(ex2, mode=EXACT)
    assert res.kappa == 2
    assert _names(ex2, res.strategy.tail) == ["b", "d", "e", "f"]
    assert res.long_term.values[0].values[0] == Fraction(450, 23)
    assert res.long_term.values[1].values[0] == Fraction(150, 287)
    # the only profitable deviation sits at s1, unreachable before the
    # horizon from s0, so the start state keeps the tail behaviour
    assert res.reports["s0"].deviation_gain == 0
    assert res.reports["s1"].deviation_gain > 0


def _prefix_sums_ok(asym, adv, j, slack):
    lams = [float(d) for d in asym.discounts]
    for key, row in adv.delta0.items():
        acc = 0.0
        imin = adv.minimal_nonzero[key]
        if imin is None:
            continue
        scale = lams[imin] ** j
        for p, d in enumerate(row):
            acc += (lams[p] ** j / scale) * float(d)
            if acc > slack:
                return False
    return True


def test_absorption_and_late_layers(investment, ex3, ex4):
    for asym in (investment, ex3, ex4):
        lt = long_term(asym, FLOAT)
        adv = advantages(asym, lt, FLOAT)
        kappa = find_kappa(asym, adv, mode=FLOAT)
        for j in range(kappa, kappa + 6):
            assert _prefix_sums_ok(asym, adv, j, 1e-12)
            # aggregate layer rewards are nonpositive past the horizon
            for key, row in adv.delta0.items():
                agg = sum(
                    float(d) * float(lam) ** j
                    for d, lam in zip(row, asym.discounts)
                )
                assert agg <= 1e-12


def test_retained_layer_rewards_zero(investment):
    res = optimize(investment, mode=EXACT)
    for (s, a) in res.advantage.retained:
        assert all(d == 0 for d in res.advantage.delta0[(s, a)])


def test_dominance_over_tail_and_positional():
    for seed in range(30):
        cfg = RandomMdpConfig(
            num_states=3,
            actions_per_state=2,
            num_principals=2,
            discounts=[Fraction(9, 10), Fraction(3, 20)],
            seed=seed,
        )
        asym = random_mdp(cfg)
        res = optimize(asym, mode=FLOAT)
        sw = float(res.reports["s0"].social_welfare)
        tail_sw = float(eval_positional(asym, res.strategy.tail, FLOAT).social_welfare[0])
        best_pos = float(enumerate_positional(asym, 0, mode=FLOAT).best_social_welfare)
        assert sw >= tail_sw - 1e-9
        assert sw >= best_pos - 1e-9


def test_argmax_invariance_under_reward_scaling(investment):
    c = Fraction(7, 3)
    scaled = AsymMdp(
        mdp=investment.mdp,
        principals=investment.principals,
        rewards=[
            [[r * c for r in per_a] for per_a in per_s] for per_s in investment.rewards
        ],
    )
    base = optimize(investment, mode=EXACT)
    res = optimize(scaled, mode=EXACT)
    assert res.kappa == base.kappa
    assert res.strategy.prefix == base.strategy.prefix
    assert res.strategy.tail == base.strategy.tail
    assert res.reports["s0"].social_welfare == c * base.reports["s0"].social_welfare


def test_decomposition_seeded():
    for seed in range(40):
        cfg = RandomMdpConfig(
            num_states=4,
            actions_per_state=2,
            num_principals=2,
            discounts=[Fraction(9, 10), Fraction(3, 20)],
            seed=seed,
        )
        asym = random_mdp(cfg)
        res = optimize(asym, mode=FLOAT)
        for name in asym.mdp.states:
            rep = res.reports[name]
            assert abs(
                float(rep.social_welfare)
                - float(rep.baseline)
                - float(rep.deviation_gain)
            ) < 1e-9
            assert float(rep.deviation_gain) >= 0


def test_counting_strategy_well_formed(ex4):
    res = optimize(ex4, mode=FLOAT)
    res.strategy.check(ex4)
    for s, a in enumerate(res.strategy.tail):
        assert a in res.long_term.restricted[s]


def test_float_and_exact_modes_agree_seeded():
    for seed in range(10):
        cfg = RandomMdpConfig(
            num_states=3,
            actions_per_state=2,
            num_principals=2,
            discounts=[Fraction(9, 10), Fraction(3, 20)],
            seed=seed,
        )
        asym = random_mdp(cfg)
        f = optimize(asym, mode=FLOAT)
        e = optimize(asym, mode=EXACT)
        for name in asym.mdp.states:
            scale = max(1.0, abs(float(e.reports[name].social_welfare)))
            assert (
                abs(
                    float(f.reports[name].social_welfare)
                    - float(e.reports[name].social_welfare)
                )
                < 1e-7 * scale
            )


def test_five_principal_cascade():
    cfg = RandomMdpConfig(
        num_states=3,
        actions_per_state=2,
        num_principals=5,
        discounts=["9/10", "7/10", "1/2", "3/10", "1/10"],
        seed=1,
    )
    asym = random_mdp(cfg)
    e = optimize(asym, mode=EXACT)
    f = optimize(asym, mode=FLOAT)
    assert e.kappa == f.kappa
    assert abs(
        float(e.reports["s0"].social_welfare) - float(f.reports["s0"].social_welfare)
    ) < 1e-9
    # final restriction is nonempty and well-formed
    lt = e.long_term
    for s in range(asym.n_states):
        assert lt.restricted[s]
        assert set(lt.restricted[s]) <= set(range(2))
    # every prefix sum is nonpositive at the found horizon for all 5 prefixes
    adv = e.advantage
    kappa = e.kappa
    for key, row in adv.delta0.items():
        acc = Fraction(0)
        for p, d in enumerate(row):
            acc += asym.discounts[p] ** kappa * d
            assert acc <= 0


def test_optimize_value_iteration_backend(investment, ex4):
    for asym, expected in ((investment, Fraction(127, 9)), (ex4, None)):
        pi = optimize(asym, mode=FLOAT, method="pi")
        vi = optimize(asym, mode=FLOAT, method="vi")
        assert vi.kappa == pi.kappa
        assert vi.strategy.tail == pi.strategy.tail
        gap = abs(
            float(vi.reports["s0"].social_welfare)
            - float(pi.reports["s0"].social_welfare)
        )
        assert gap < 1e-6
        if expected is not None:
            assert abs(float(vi.reports["s0"].social_welfare) - float(expected)) < 1e-6


def test_optimize_badly_spaced_end_to_end():
    # the full pipeline over 761 unrolled layers, not just the depth scan
    b10 = badly_spaced(10)
    res = optimize(b10, mode=FLOAT)
    assert res.kappa == 761
    s1 = b10.state_index("S1")
    move = b10.action_index(s1, "move")
    # deviating to the absorbing state pays while the horizon runs
    assert res.strategy.prefix[0][s1] == move
    assert res.strategy.tail[s1] == b10.action_index(s1, "loop")
    rep = res.reports["S1"]
    assert float(rep.deviation_gain) > 0
    assert abs(
        float(rep.social_welfare)
        - float(rep.baseline)
        - float(rep.deviation_gain)
    ) < 1e-9
