"""Heterogeneous-household economy with HSV taxation.

A population of households chooses savings rates and labor supply each
period; a government levies progressive income, asset, and consumption
taxes and spends a fraction of output. Production is Cobb-Douglas over
aggregate capital (household assets) and efficiency-weighted labor, with
the wage set to the marginal product of labor. Episodes end at a fixed
horizon or when the economy collapses (non-positive disposable resources,
vanishing consumption, or non-finite quantities).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from typing import Sequence

import numpy as np

# Progressivity cap: both tax schedules are singular at xi = 1.
XI_MAX = 1.0 - 1e-3
# Consumption at or below this floor collapses the economy.
C_MIN = 1e-8
# Floor on the previous-GDP denominator in the government's growth term.
GROWTH_EPS = 1e-8


class CollapseError(ValueError):
    """Raised by utility() when consumption is non-positive."""


@dataclass(frozen=True)
class GovAction:
    """Five-part fiscal action: two HSV schedules plus a spending ratio."""

    tau: float = 0.2
    xi: float = 0.1
    tau_a: float = 0.02
    xi_a: float = 0.05
    spend_ratio: float = 0.1

    def __post_init__(self):
        if not (0.0 <= self.tau < 1.0 and 0.0 <= self.tau_a < 1.0):
            raise ValueError(f"tax levels must lie in [0, 1): tau={self.tau}, tau_a={self.tau_a}")
        if not (0.0 <= self.xi <= XI_MAX and 0.0 <= self.xi_a <= XI_MAX):
            raise ValueError(f"progressivity must lie in [0, {XI_MAX}]: xi={self.xi}, xi_a={self.xi_a}")
        if not (0.0 <= self.spend_ratio < 1.0):
            raise ValueError(f"spend_ratio must lie in [0, 1): {self.spend_ratio}")


@dataclass(frozen=True)
class HouseholdAction:
    """Savings rate in [0, 1] and labor hours in [0, h_max]."""

    savings_rate: float
    labor: float

    @classmethod
    def from_raw(cls, raw: Sequence[float], h_max: float) -> "HouseholdAction":
        """Map a raw policy output in [-1, 1]^2 onto the action box."""
        p = float(np.clip((raw[0] + 1.0) / 2.0, 0.0, 1.0))
        h = float(np.clip((raw[1] + 1.0) / 2.0, 0.0, 1.0)) * h_max
        return cls(savings_rate=p, labor=h)


@dataclass(frozen=True)
class ScenarioConfig:
    """Structural parameters of one economic scenario."""

    depreciation_rate: float
    consumption_tax_rate: float
    interest_rate: float
    gini_weight: float
    n_households: int = 10
    max_years: int = 300
    eta: float = 2.0
    gamma_frisch: float = 1.0
    capital_share: float = 0.36
    h_max: float = 1.0
    log_utility: bool = False
    asset_log_mean: float = 0.0
    asset_log_sd: float = 0.5
    efficiency_log_mean: float = 0.0
    efficiency_log_sd: float = 0.5
    collapse_reward: float = -100.0
    government: GovAction = field(default_factory=GovAction)

    def __post_init__(self):
        for name in ("depreciation_rate", "consumption_tax_rate", "interest_rate", "capital_share"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.n_households < 2:
            raise ValueError("need at least 2 households")
        if self.max_years < 1:
            raise ValueError("max_years must be >= 1")
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")
        if self.eta == 1.0 and not self.log_utility:
            raise ValueError("eta = 1 requires log_utility mode")
        if self.gamma_frisch <= 0.0:
            raise ValueError("gamma_frisch must be positive")
        if self.h_max <= 0.0:
            raise ValueError("h_max must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        gov = data.pop("government", None)
        if gov is not None:
            data["government"] = GovAction(**gov)
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def preset(cls, name: str) -> "ScenarioConfig":
        """Load one of the bundled scenarios (s1, s2, s3)."""
        ref = resources.files("lamp.scenarios").joinpath(f"{name}.json")
        if not ref.is_file():
            raise ValueError(f"unknown scenario preset {name!r}")
        return cls.from_dict(json.loads(ref.read_text()))

    @classmethod
    def load(cls, spec: str) -> "ScenarioConfig":
        """Resolve a preset name or a path to a scenario file."""
        if spec in ("s1", "s2", "s3"):
            return cls.preset(spec)
        return cls.from_file(spec)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GlobalObs:
    """Wage plus group means over the top-10% and bottom-50% wealth groups."""

    wage: float
    asset_mean_rich: float
    asset_mean_poor: float
    income_mean_rich: float
    income_mean_poor: float
    efficiency_mean_rich: float
    efficiency_mean_poor: float

    FIELDS = (
        "wage",
        "asset_mean_rich",
        "asset_mean_poor",
        "income_mean_rich",
        "income_mean_poor",
        "efficiency_mean_rich",
        "efficiency_mean_poor",
    )

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in self.FIELDS], dtype=np.float64)

    DIM = 7


@dataclass(frozen=True)
class MacroIndicators:
    """Indicator vector watched by the news scheduler."""

    wealth_gini: float
    social_welfare: float
    gdp_per_capita: float

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.wealth_gini, self.social_welfare, self.gdp_per_capita], dtype=np.float64
        )


@dataclass
class EconomyState:
    """Full simulator state for one period."""

    t: int
    assets: np.ndarray
    efficiencies: np.ndarray
    wage: float
    gdp: float
    debt: float
    incomes: np.ndarray
    welfare: float
    last_global_obs: GlobalObs


@dataclass(frozen=True)
class StepInfo:
    """Per-step diagnostics; carries the macro indicators plus the raw
    bookkeeping needed to recheck the household budget identity."""

    macro: MacroIndicators
    done_reason: str  # "", "truncation", or "collapse"
    incomes: np.ndarray
    income_taxes: np.ndarray
    asset_taxes: np.ndarray
    consumptions: np.ndarray
    savings: np.ndarray  # chosen savings p*z, before depreciation
    assets_before: np.ndarray
    tax_revenue: float
    spending: float


def income_tax(i: float, tau: float, xi: float) -> float:
    """Progressive income tax T(i) = i - (1-tau) * i^(1-xi) / (1-xi)."""
    if i < 0.0:
        raise ValueError(f"income must be nonnegative, got {i}")
    if not (0.0 <= xi < 1.0):
        raise ValueError(f"progressivity must lie in [0, 1), got {xi}")
    if i == 0.0:
        return 0.0
    return i - (1.0 - tau) * i ** (1.0 - xi) / (1.0 - xi)


def asset_tax(a: float, tau_a: float, xi_a: float) -> float:
    """Progressive asset tax T_a(a) = a - (1-tau_a) / (1-xi_a) * a^(1-xi_a)."""
    if a < 0.0:
        raise ValueError(f"assets must be nonnegative, got {a}")
    if not (0.0 <= xi_a < 1.0):
        raise ValueError(f"progressivity must lie in [0, 1), got {xi_a}")
    if a == 0.0:
        return 0.0
    return a - (1.0 - tau_a) / (1.0 - xi_a) * a ** (1.0 - xi_a)


def produce(
    assets: np.ndarray,
    efficiencies: np.ndarray,
    hours: np.ndarray,
    capital_share: float,
    prev_wage: float = 0.0,
) -> tuple[float, float]:
    """Cobb-Douglas output and the marginal-product wage.

    Capital is the asset stock, labor is efficiency-weighted hours. With
    zero aggregate labor, output is zero and the previous wage carries over.
    """
    capital = float(np.sum(assets))
    labor = float(np.sum(efficiencies * hours))
    if labor <= 0.0:
        return 0.0, prev_wage
    output = capital**capital_share * labor ** (1.0 - capital_share)
    wage = (1.0 - capital_share) * output / labor
    return output, wage


def household_income(wage: float, e: float, h: float, r: float, a: float) -> float:
    """Labor earnings plus exogenous interest on assets."""
    return wage * e * h + r * a


def utility(c: float, h: float, eta: float, gamma_frisch: float, log_mode: bool = False) -> float:
    """CRRA consumption utility minus isoelastic labor disutility."""
    if c <= 0.0:
        raise CollapseError(f"consumption must be positive, got {c}")
    if h < 0.0:
        raise ValueError(f"labor must be nonnegative, got {h}")
    if log_mode or eta == 1.0:
        cons = math.log(c)
    else:
        cons = c ** (1.0 - eta) / (1.0 - eta)
    return cons - h ** (1.0 + gamma_frisch) / (1.0 + gamma_frisch)


def wealth_gini(assets: np.ndarray) -> float:
    """Gini coefficient of the asset vector; 0 for an equal or empty economy.

    Uses the mean-absolute-difference form on scale-normalized values so
    that equal vectors give exactly 0 and a single holder among n gives
    exactly (n-1)/n at any scale.
    """
    a = np.asarray(assets, dtype=np.float64)
    total = float(a.sum())
    n = a.size
    if n == 0 or total <= 0.0:
        return 0.0
    b = a / total
    diff_sum = float(np.abs(b[:, None] - b[None, :]).sum())
    return diff_sum / (2.0 * n * float(b.sum()))


def group_means(values: np.ndarray, assets: np.ndarray) -> tuple[float, float]:
    """Means of `values` over the top-10% and bottom-50% wealth groups."""
    n = assets.size
    rich_count = max(1, math.ceil(0.1 * n))
    poor_count = max(1, n // 2)
    order = np.argsort(assets, kind="stable")
    poor = order[:poor_count]
    rich = order[::-1][:rich_count]
    return float(np.mean(values[rich])), float(np.mean(values[poor]))


def build_global_obs(
    wage: float, assets: np.ndarray, incomes: np.ndarray, efficiencies: np.ndarray
) -> GlobalObs:
    a_rich, a_poor = group_means(assets, assets)
    i_rich, i_poor = group_means(incomes, assets)
    e_rich, e_poor = group_means(efficiencies, assets)
    return GlobalObs(wage, a_rich, a_poor, i_rich, i_poor, e_rich, e_poor)


def macro_indicators(state: EconomyState, rewards_so_far) -> MacroIndicators:
    """Indicators from the current state and all utilities logged so far."""
    welfare = float(np.sum(np.asarray(rewards_so_far, dtype=np.float64)))
    return MacroIndicators(
        wealth_gini=wealth_gini(state.assets),
        social_welfare=welfare,
        gdp_per_capita=state.gdp / state.assets.size,
    )


def env_reset(config: ScenarioConfig, seed) -> EconomyState:
    """Draw a fresh population; deterministic for a fixed seed.

    The initial wage and GDP come from a reference production run at half
    the maximum labor supply so that first-period growth and news deltas
    have a sensible baseline.
    """
    rng = np.random.default_rng(seed)
    n = config.n_households
    assets = rng.lognormal(config.asset_log_mean, config.asset_log_sd, n)
    efficiencies = rng.lognormal(config.efficiency_log_mean, config.efficiency_log_sd, n)
    ref_hours = np.full(n, config.h_max / 2.0)
    gdp, wage = produce(assets, efficiencies, ref_hours, config.capital_share, prev_wage=0.0)
    incomes = wage * efficiencies * ref_hours + config.interest_rate * assets
    obs = build_global_obs(wage, assets, incomes, efficiencies)
    return EconomyState(
        t=0,
        assets=assets,
        efficiencies=efficiencies,
        wage=wage,
        gdp=gdp,
        debt=0.0,
        incomes=incomes,
        welfare=0.0,
        last_global_obs=obs,
    )


def env_step(
    state: EconomyState,
    gov: GovAction,
    hh_actions: Sequence[HouseholdAction],
    config: ScenarioConfig,
) -> tuple[EconomyState, np.ndarray, float, bool, StepInfo]:
    """Advance the economy one period.

    Each household earns income at the new marginal-product wage, pays
    income and asset taxes, splits disposable resources between savings
    and consumption, and receives its period utility as reward. The
    chosen savings satisfy (1+tau_s)*c + p*z = z exactly; depreciation
    then scales the carried asset stock.
    """
    n = config.n_households
    if len(hh_actions) != n:
        raise ValueError(f"expected {n} household actions, got {len(hh_actions)}")

    assets = state.assets
    eff = state.efficiencies
    p = np.array([act.savings_rate for act in hh_actions], dtype=np.float64)
    hours = np.array([act.labor for act in hh_actions], dtype=np.float64)

    gdp, wage = produce(assets, eff, hours, config.capital_share, prev_wage=state.wage)
    r = config.interest_rate
    incomes = wage * eff * hours + r * assets
    inc_taxes = np.array([income_tax(i, gov.tau, gov.xi) for i in incomes])
    ast_taxes = np.array([asset_tax(a, gov.tau_a, gov.xi_a) for a in assets])
    disposable = incomes - inc_taxes + assets - ast_taxes

    tau_s = config.consumption_tax_rate
    savings = p * disposable
    consumptions = (1.0 - p) * disposable / (1.0 + tau_s)

    finite = (
        np.all(np.isfinite(disposable))
        and np.all(np.isfinite(consumptions))
        and np.all(np.isfinite(savings))
        and math.isfinite(gdp)
        and math.isfinite(wage)
    )
    failed = ~np.isfinite(consumptions) | (disposable <= 0.0) | (consumptions <= C_MIN)
    collapsed = (not finite) or bool(np.any(failed))

    rewards = np.empty(n)
    for i in range(n):
        if failed[i] or not finite:
            rewards[i] = config.collapse_reward
        else:
            rewards[i] = utility(
                consumptions[i], hours[i], config.eta, config.gamma_frisch, config.log_utility
            )

    new_assets = (1.0 - config.depreciation_rate) * np.maximum(savings, 0.0)

    spending = gov.spend_ratio * gdp
    tax_revenue = float(np.sum(inc_taxes + ast_taxes + tau_s * consumptions))
    new_debt = (1.0 + r) * state.debt + spending - tax_revenue

    gini = wealth_gini(new_assets)
    growth = (gdp - state.gdp) / max(state.gdp, GROWTH_EPS)
    gov_reward = growth - config.gini_weight * gini

    welfare = state.welfare + float(np.sum(rewards))
    new_t = state.t + 1
    truncated = new_t >= config.max_years
    done = collapsed or truncated
    reason = "collapse" if collapsed else ("truncation" if truncated else "")

    obs = build_global_obs(wage, new_assets, incomes, eff)
    next_state = EconomyState(
        t=new_t,
        assets=new_assets,
        efficiencies=eff,
        wage=wage,
        gdp=gdp,
        debt=new_debt,
        incomes=incomes,
        welfare=welfare,
        last_global_obs=obs,
    )
    macro = MacroIndicators(
        wealth_gini=gini, social_welfare=welfare, gdp_per_capita=gdp / n
    )
    info = StepInfo(
        macro=macro,
        done_reason=reason,
        incomes=incomes,
        income_taxes=inc_taxes,
        asset_taxes=ast_taxes,
        consumptions=consumptions,
        savings=savings,
        assets_before=assets.copy(),
        tax_revenue=tax_revenue,
        spending=spending,
    )
    return next_state, rewards, gov_reward, done, info


class Economy:
    """Thin stateful wrapper around env_reset / env_step."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.state: EconomyState | None = None

    def reset(self, seed) -> EconomyState:
        self.state = env_reset(self.config, seed)
        return self.state

    def step(self, gov: GovAction, hh_actions: Sequence[HouseholdAction]):
        if self.state is None:
            raise RuntimeError("call reset() before step()")
        self.state, rewards, gov_reward, done, info = env_step(
            self.state, gov, hh_actions, self.config
        )
        return self.state, rewards, gov_reward, done, info

    def indicators(self) -> MacroIndicators:
        if self.state is None:
            raise RuntimeError("call reset() before indicators()")
        s = self.state
        return MacroIndicators(
            wealth_gini=wealth_gini(s.assets),
            social_welfare=s.welfare,
            gdp_per_capita=s.gdp / self.config.n_households,
        )
