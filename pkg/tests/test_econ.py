"""Tests for the household economy: tax schedules, production, utility,
Gini, and the step-level budget identity."""

import math

import mpmath
import numpy as np
import pytest

from lamp.econ import (
    C_MIN,
    CollapseError,
    Economy,
    GovAction,
    HouseholdAction,
    ScenarioConfig,
    asset_tax,
    build_global_obs,
    env_reset,
    env_step,
    group_means,
    household_income,
    income_tax,
    produce,
    utility,
    wealth_gini,
)

mpmath.mp.dps = 50


def oracle_income_tax(i, tau, xi):
    i, tau, xi = mpmath.mpf(i), mpmath.mpf(tau), mpmath.mpf(xi)
    if i == 0:
        return mpmath.mpf(0)
    return i - (1 - tau) * i ** (1 - xi) / (1 - xi)


def oracle_asset_tax(a, tau_a, xi_a):
    a, tau_a, xi_a = mpmath.mpf(a), mpmath.mpf(tau_a), mpmath.mpf(xi_a)
    if a == 0:
        return mpmath.mpf(0)
    return a - (1 - tau_a) / (1 - xi_a) * a ** (1 - xi_a)


def oracle_gini(assets):
    n = len(assets)
    total = sum(assets)
    if total <= 0:
        return 0.0
    acc = 0.0
    for i in range(n):
        for j in range(n):
            acc += abs(assets[i] - assets[j])
    return acc / (2.0 * n * total)


def test_income_tax_flat_reduction():
    # xi = 0 collapses the schedule to a flat tax
    rng = np.random.default_rng(0)
    for _ in range(1000):
        i = float(rng.uniform(0.0, 100.0))
        tau = float(rng.uniform(0.0, 0.9))
        assert abs(income_tax(i, tau, 0.0) - tau * i) < 1e-12
        assert abs(asset_tax(i, tau, 0.0) - tau * i) < 1e-12


def test_income_tax_zero_income():
    assert income_tax(0.0, 0.3, 0.5) == 0.0
    assert asset_tax(0.0, 0.3, 0.5) == 0.0


def test_income_tax_known_value():
    assert abs(income_tax(5.0, 0.3, 0.0) - 1.5) < 1e-15
    # i=4, tau=0.5, xi=0.5: T = 4 - 0.5 * 2 / 0.5 = 2
    assert abs(income_tax(4.0, 0.5, 0.5) - 2.0) < 1e-12


def test_tax_matches_arbitrary_precision_oracle():
    rng = np.random.default_rng(1)
    for _ in range(500):
        i = float(rng.uniform(1e-6, 100.0))
        tau = float(rng.uniform(0.0, 0.9))
        xi = float(rng.uniform(0.0, 0.999))
        got = income_tax(i, tau, xi)
        want = float(oracle_income_tax(i, tau, xi))
        assert abs(got - want) < 1e-10
        got_a = asset_tax(i, tau, xi)
        want_a = float(oracle_asset_tax(i, tau, xi))
        assert abs(got_a - want_a) < 1e-10


def test_tax_rejects_bad_inputs():
    with pytest.raises(ValueError):
        income_tax(-1.0, 0.2, 0.1)
    with pytest.raises(ValueError):
        income_tax(1.0, 0.2, 1.0)
    with pytest.raises(ValueError):
        asset_tax(-0.5, 0.2, 0.1)


def test_produce_known_value():
    # K = 4, L = 2, alpha = 0.5: Y = sqrt(8), wage = 0.5 * Y / 2
    assets = np.array([1.0, 3.0])
    eff = np.array([1.0, 1.0])
    hours = np.array([1.0, 1.0])
    y, w = produce(assets, eff, hours, 0.5)
    assert abs(y - math.sqrt(8.0)) < 1e-12
    assert abs(w - 0.5 * math.sqrt(8.0) / 2.0) < 1e-12


def test_produce_zero_labor_carries_wage():
    assets = np.array([1.0, 3.0])
    eff = np.array([1.0, 1.0])
    hours = np.zeros(2)
    y, w = produce(assets, eff, hours, 0.36, prev_wage=1.25)
    assert y == 0.0
    assert w == 1.25


def test_household_income():
    assert abs(household_income(2.0, 1.5, 0.5, 0.04, 10.0) - (1.5 + 0.4)) < 1e-12


def test_utility_known_values():
    # eta = 2: c^-1 / -1 = -1/c; minus h^2/2
    assert abs(utility(1.0, 1.0, 2.0, 1.0) - (-1.5)) < 1e-12
    assert abs(utility(2.0, 0.0, 2.0, 1.0) - (-0.5)) < 1e-12
    # log mode
    assert abs(utility(math.e, 0.0, 1.0, 1.0, log_mode=True) - 1.0) < 1e-12
    with pytest.raises(CollapseError):
        utility(0.0, 0.5, 2.0, 1.0)
    with pytest.raises(CollapseError):
        utility(-1.0, 0.5, 2.0, 1.0)


def test_utility_monotone_in_consumption():
    rng = np.random.default_rng(2)
    for _ in range(200):
        c = float(rng.uniform(0.1, 10.0))
        h = float(rng.uniform(0.0, 1.0))
        eta = float(rng.uniform(0.5, 4.0))
        if abs(eta - 1.0) < 1e-6:
            continue
        g = float(rng.uniform(0.5, 3.0))
        assert utility(c + 0.01, h, eta, g) > utility(c, h, eta, g)
        assert utility(c, h + 0.01, eta, g) < utility(c, h, eta, g)


def test_gini_all_equal_is_exact_zero():
    for v in (0.3, 1.0, 7.25):
        assert wealth_gini(np.full(10, v)) == 0.0


def test_gini_single_holder_is_exact():
    for scale in (1.0, 3.7, 1e-4, 2.5e6):
        a = np.zeros(10)
        a[4] = scale
        assert wealth_gini(a) == 0.9


def test_gini_empty_and_zero():
    assert wealth_gini(np.zeros(5)) == 0.0
    assert wealth_gini(np.array([])) == 0.0


def test_gini_matches_pairwise_oracle():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(2, 30))
        a = rng.uniform(0.0, 10.0, n)
        assert abs(wealth_gini(a) - oracle_gini(list(a))) < 1e-12


def test_gini_pigou_dalton():
    # a transfer from richer to poorer that preserves their order lowers the Gini
    rng = np.random.default_rng(4)
    for _ in range(200):
        n = int(rng.integers(3, 20))
        a = rng.uniform(0.1, 10.0, n)
        i, j = np.argmax(a), np.argmin(a)
        eps = (a[i] - a[j]) * 0.25
        b = a.copy()
        b[i] -= eps
        b[j] += eps
        assert wealth_gini(b) < wealth_gini(a)


def test_group_means_splits():
    # 10 agents: top-10% is the single richest, bottom-50% the poorest five
    assets = np.arange(1.0, 11.0)
    vals = np.arange(10.0, 110.0, 10.0)
    rich, poor = group_means(vals, assets)
    assert rich == 100.0
    assert poor == 30.0


def test_global_obs_vector_layout():
    obs = build_global_obs(1.5, np.arange(1.0, 11.0), np.ones(10), np.ones(10))
    v = obs.as_vector()
    assert v.shape == (7,)
    assert v[0] == 1.5


def test_scenario_presets_carry_table_values():
    s1 = ScenarioConfig.preset("s1")
    assert (s1.depreciation_rate, s1.consumption_tax_rate, s1.interest_rate, s1.gini_weight) == (
        0.06,
        0.065,
        0.04,
        1.0,
    )
    s2 = ScenarioConfig.preset("s2")
    assert (s2.depreciation_rate, s2.consumption_tax_rate, s2.interest_rate, s2.gini_weight) == (
        0.12,
        0.02,
        0.08,
        1.0,
    )
    s3 = ScenarioConfig.preset("s3")
    assert (s3.depreciation_rate, s3.consumption_tax_rate, s3.interest_rate, s3.gini_weight) == (
        0.10,
        0.10,
        0.10,
        0.5,
    )
    for cfg in (s1, s2, s3):
        assert cfg.n_households == 10
        assert cfg.max_years == 300
    with pytest.raises(ValueError):
        ScenarioConfig.preset("s9")


def test_scenario_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(depreciation_rate=0.0, consumption_tax_rate=0.1, interest_rate=0.05, gini_weight=1.0)
    with pytest.raises(ValueError):
        GovAction(tau=1.0)
    with pytest.raises(ValueError):
        GovAction(xi=0.9999)


def test_action_from_raw_clips():
    act = HouseholdAction.from_raw([-3.0, 3.0], h_max=1.0)
    assert act.savings_rate == 0.0
    assert act.labor == 1.0
    act = HouseholdAction.from_raw([0.0, 0.0], h_max=2.0)
    assert act.savings_rate == 0.5
    assert act.labor == 1.0


def test_reset_is_deterministic():
    cfg = ScenarioConfig.preset("s1")
    s_a = env_reset(cfg, seed=[7, 0])
    s_b = env_reset(cfg, seed=[7, 0])
    assert np.array_equal(s_a.assets, s_b.assets)
    assert np.array_equal(s_a.efficiencies, s_b.efficiencies)
    assert s_a.wage == s_b.wage and s_a.gdp == s_b.gdp
    s_c = env_reset(cfg, seed=[8, 0])
    assert not np.array_equal(s_c.assets, s_a.assets)


def random_actions(rng, cfg):
    acts = []
    for _ in range(cfg.n_households):
        acts.append(
            HouseholdAction(
                savings_rate=float(rng.uniform(0.05, 0.95)),
                labor=float(rng.uniform(0.05, 1.0)) * cfg.h_max,
            )
        )
    return acts


@pytest.mark.parametrize("name", ["s1", "s2", "s3"])
def test_budget_identity(name):
    # (1 + tau_s) * c + p*z - z must vanish for every household at every step
    cfg = ScenarioConfig.preset(name)
    rng = np.random.default_rng(10)
    state = env_reset(cfg, seed=[11, 0])
    steps = 0
    while steps < 300:
        acts = random_actions(rng, cfg)
        state, rewards, gov_r, done, info = env_step(state, cfg.government, acts, cfg)
        z = info.incomes - info.income_taxes + info.assets_before - info.asset_taxes
        resid = (1.0 + cfg.consumption_tax_rate) * info.consumptions + info.savings - z
        assert np.all(np.abs(resid) < 1e-9)
        steps += 1
        if done:
            state = env_reset(cfg, seed=[11, steps])


def test_step_rewards_match_utility():
    cfg = ScenarioConfig.preset("s1")
    rng = np.random.default_rng(12)
    state = env_reset(cfg, seed=[13, 0])
    acts = random_actions(rng, cfg)
    state, rewards, gov_r, done, info = env_step(state, cfg.government, acts, cfg)
    for k in range(cfg.n_households):
        want = utility(info.consumptions[k], acts[k].labor, cfg.eta, cfg.gamma_frisch)
        assert abs(rewards[k] - want) < 1e-12


def test_full_savings_collapses():
    # p = 1 leaves zero consumption, which ends the episode with the penalty
    cfg = ScenarioConfig.preset("s1")
    state = env_reset(cfg, seed=[14, 0])
    acts = [HouseholdAction(savings_rate=1.0, labor=0.5) for _ in range(cfg.n_households)]
    state, rewards, gov_r, done, info = env_step(state, cfg.government, acts, cfg)
    assert done
    assert info.done_reason == "collapse"
    assert np.all(rewards == cfg.collapse_reward)


def test_depreciation_applies_to_savings():
    cfg = ScenarioConfig.preset("s1")
    state0 = env_reset(cfg, seed=[15, 0])
    acts = [HouseholdAction(savings_rate=0.5, labor=0.5) for _ in range(cfg.n_households)]
    state1, _, _, _, info = env_step(state0, cfg.government, acts, cfg)
    want = (1.0 - cfg.depreciation_rate) * info.savings
    assert np.allclose(state1.assets, want, rtol=0, atol=1e-12)


def test_debt_recursion():
    cfg = ScenarioConfig.preset("s1")
    state0 = env_reset(cfg, seed=[16, 0])
    acts = [HouseholdAction(savings_rate=0.4, labor=0.6) for _ in range(cfg.n_households)]
    state1, _, _, _, info = env_step(state0, cfg.government, acts, cfg)
    want = (1.0 + cfg.interest_rate) * 0.0 + info.spending - info.tax_revenue
    assert abs(state1.debt - want) < 1e-12
    state2, _, _, _, info2 = env_step(state1, cfg.government, acts, cfg)
    want2 = (1.0 + cfg.interest_rate) * state1.debt + info2.spending - info2.tax_revenue
    assert abs(state2.debt - want2) < 1e-12


def test_gov_reward_tracks_growth_and_gini():
    cfg = ScenarioConfig.preset("s1")
    state0 = env_reset(cfg, seed=[17, 0])
    acts = [HouseholdAction(savings_rate=0.5, labor=0.7) for _ in range(cfg.n_households)]
    state1, _, gov_r, _, info = env_step(state0, cfg.government, acts, cfg)
    growth = (state1.gdp - state0.gdp) / max(state0.gdp, 1e-8)
    want = growth - cfg.gini_weight * wealth_gini(state1.assets)
    assert abs(gov_r - want) < 1e-12


def test_truncation_at_horizon():
    cfg = ScenarioConfig.from_dict(
        {
            "depreciation_rate": 0.06,
            "consumption_tax_rate": 0.065,
            "interest_rate": 0.04,
            "gini_weight": 1.0,
            "max_years": 3,
        }
    )
    econ = Economy(cfg)
    econ.reset(seed=[18, 0])
    acts = [HouseholdAction(savings_rate=0.5, labor=0.5) for _ in range(cfg.n_households)]
    for t in range(1, 4):
        state, _, _, done, info = econ.step(cfg.government, acts)
        assert state.t == t
        if t < 3:
            assert not done
        else:
            assert done and info.done_reason == "truncation"


def test_welfare_accumulates():
    cfg = ScenarioConfig.preset("s2")
    econ = Economy(cfg)
    econ.reset(seed=[19, 0])
    acts = [HouseholdAction(savings_rate=0.5, labor=0.5) for _ in range(cfg.n_households)]
    total = 0.0
    for _ in range(5):
        state, rewards, _, done, info = econ.step(cfg.government, acts)
        total += float(np.sum(rewards))
        assert abs(info.macro.social_welfare - total) < 1e-9
        assert abs(state.welfare - total) < 1e-9
        if done:
            break
