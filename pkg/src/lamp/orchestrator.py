"""End-to-end run loop: scheduling, language, acting, training, metrics.

One run executes a fixed number of episodes on a scenario. Each step
classifies the news type, generates news and per-agent reasoning through
the language backend, lets every household act through its policy,
advances the economy, trains the critic and actors from replay, and
harvests experience. Baseline policies (numeric-only trainer, uniform
random, myopic grid rule) share the same loop with the language stages
switched off, so their artifacts are directly comparable.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from lamp.backend import make_backend, rank_quantiles
from lamp.econ import (
    C_MIN,
    GlobalObs,
    GovAction,
    HouseholdAction,
    MacroIndicators,
    ScenarioConfig,
    env_reset,
    env_step,
    wealth_gini,
)
from lamp.embed import (
    CachingEncoder,
    EmbedSources,
    HashingEncoder,
    RemoteEncoder,
    build_agent_embedding,
)
from lamp.maddpg import AgentNets, Dims, Hyper, ReplayBuffer, Transition, act, train_step
from lamp.metrics import EpisodeRow, Event, RunMetrics, StepRow, write_metrics
from lamp.speak import (
    SelectionEvent,
    SelectorParams,
    StatementSet,
    broadcast,
    generate_candidates,
    reflect,
    reinforce_update,
    select_statement,
)
from lamp.think import (
    ExperiencePools,
    ReasoningRecord,
    classify_news_type,
    build_entry,
    load_pools,
    make_long_news,
    make_short_news,
    reason_long,
    reason_short,
    save_pools,
)

ABLATIONS = frozenset({"speak", "experience_pool", "long_term", "short_term", "timing_scheduler"})
POLICIES = ("lamp", "maddpg", "random", "rule")
BACKENDS = ("scripted", "remote")
LOCAL_OBS_DIM = 4  # [asset, efficiency, income, wage]
NO_REASONING_TEXT = "No prior reasoning is available."


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs; defaults are the desk-scale settings."""

    scenario: str = "s1"
    seed: int = 7
    episodes: int = 20
    steps: int = 100
    backend: str = "scripted"
    policy: str = "lamp"
    ablations: frozenset = frozenset()
    out_dir: str | None = None

    gamma: float = 0.975
    tau_polyak: float = 5e-3
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    buffer_capacity: int = 1_000_000
    batch_size: int = 256
    warmup_factor: int = 2
    hidden: int = 64
    noise_std: float = 0.1

    long_interval: int = 20
    sigma: float = 0.4
    k1: int = 3
    k2: int = 5
    k3: int = 3
    d_lang: int = 5
    d_e: int = 256
    embed_mode: str = "union"
    embed_endpoint: str | None = None

    train_selector: bool = False
    selector_lr: float = 1e-3
    eval_harvest: bool = False
    pool_file: str | None = None
    fallback_to_scripted: bool = False
    random_government: bool = False
    random_short_rate: float | None = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        object.__setattr__(self, "ablations", frozenset(self.ablations))
        unknown = self.ablations - ABLATIONS
        if unknown:
            raise ValueError(f"unknown ablations {sorted(unknown)}; valid: {sorted(ABLATIONS)}")
        if self.ablations and self.policy != "lamp":
            raise ValueError("ablations only apply to the lamp policy")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if not 1 <= self.steps <= 300:
            raise ValueError("steps per episode must lie in [1, 300]")
        positive = (
            "gamma",
            "tau_polyak",
            "actor_lr",
            "critic_lr",
            "buffer_capacity",
            "batch_size",
            "warmup_factor",
            "hidden",
            "long_interval",
            "sigma",
            "k1",
            "k2",
            "k3",
            "d_e",
            "selector_lr",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.noise_std < 0.0 or self.d_lang < 0:
            raise ValueError("noise_std and d_lang must be nonnegative")
        if self.policy == "lamp" and self.d_lang < 1:
            raise ValueError("the lamp policy needs d_lang >= 1")
        if self.random_short_rate is not None and not 0.0 <= self.random_short_rate <= 1.0:
            raise ValueError("random_short_rate must lie in [0, 1]")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ablations"] = sorted(self.ablations)
        return d


def random_policy(obs, rng: np.random.Generator) -> np.ndarray:
    """Uniform raw action on [-1, 1]^2; obs is ignored by design."""
    del obs
    return rng.uniform(-1.0, 1.0, 2)


# arange/20 gives each node the same rounding as the scalar i/20.0
RULE_GRID = np.arange(21) / 20.0


def rule_policy(obs, gov: GovAction, scenario: ScenarioConfig) -> np.ndarray:
    """Myopic one-period utility maximizer over a 21x21 action grid.

    Evaluates every (savings rate, labor) pair against the current wage
    and tax schedules and returns the raw action of the best cell; cells
    that would collapse the household score the collapse reward.
    """
    a, e, wage = float(obs[0]), float(obs[1]), float(obs[3])
    p = np.repeat(RULE_GRID, RULE_GRID.size)
    hfrac = np.tile(RULE_GRID, RULE_GRID.size)
    hours = hfrac * scenario.h_max

    income = wage * e * hours + scenario.interest_rate * a
    inc_tax = income - (1.0 - gov.tau) * np.power(income, 1.0 - gov.xi) / (1.0 - gov.xi)
    if a > 0.0:
        ast_tax = a - (1.0 - gov.tau_a) / (1.0 - gov.xi_a) * a ** (1.0 - gov.xi_a)
    else:
        ast_tax = 0.0
    z = income - inc_tax + a - ast_tax
    c = (1.0 - p) * z / (1.0 + scenario.consumption_tax_rate)

    util = np.full(c.shape, scenario.collapse_reward)
    ok = (z > 0.0) & (c > C_MIN)
    if scenario.log_utility or scenario.eta == 1.0:
        cons_part = np.log(c[ok])
    else:
        cons_part = np.power(c[ok], 1.0 - scenario.eta) / (1.0 - scenario.eta)
    g = scenario.gamma_frisch
    util[ok] = cons_part - np.power(hours[ok], 1.0 + g) / (1.0 + g)

    best = int(np.argmax(util))
    return np.array([2.0 * p[best] - 1.0, 2.0 * hfrac[best] - 1.0])


@dataclass
class _AgentTexts:
    """Latest language products of one agent; all feed its embedding."""

    reasoning: str | None = None
    reflection: str | None = None
    statement: str | None = None
    record: ReasoningRecord | None = None


def _reset_indicators(state, n: int) -> MacroIndicators:
    return MacroIndicators(
        wealth_gini=wealth_gini(state.assets),
        social_welfare=state.welfare,
        gdp_per_capita=state.gdp / n,
    )


class Runner:
    """One configured run in one mode (train, eval, or simulate)."""

    def __init__(self, config: RunConfig, mode: str, checkpoint: str | None = None):
        if mode not in ("train", "eval", "simulate"):
            raise ValueError(f"mode must be train, eval, or simulate, got {mode!r}")
        self.config = config
        self.mode = mode
        self.scenario = ScenarioConfig.load(config.scenario)
        n = self.scenario.n_households

        self.language_on = config.policy == "lamp"
        self.trainable = config.policy in ("lamp", "maddpg")
        self.training = mode == "train" and self.trainable
        self.explore = self.training

        seed = config.seed
        self.rng_noise = np.random.default_rng([seed, 2])
        self.rng_sample = np.random.default_rng([seed, 3])
        self.rng_select = np.random.default_rng([seed, 4])
        self.rng_random = np.random.default_rng([seed, 5])
        self.rng_trigger = np.random.default_rng([seed, 6])
        self.rng_gov = np.random.default_rng([seed, 7])

        self.timing_random = "timing_scheduler" in config.ablations
        self.p_long = 1.0 / config.long_interval
        if self.timing_random:
            if config.random_short_rate is None:
                raise ValueError(
                    "timing_scheduler ablation needs random_short_rate; "
                    "run through run_training/run_eval which calibrate it"
                )
            self.p_short = min(config.random_short_rate, 1.0 - self.p_long)
        else:
            self.p_short = 0.0

        self.encoder = None
        self.backend = None
        self.pools = None
        self.selector = None
        d_e = 0
        if self.language_on:
            inner = (
                RemoteEncoder(config.embed_endpoint, config.d_e)
                if config.embed_endpoint
                else HashingEncoder(config.d_e, seed=0)
            )
            self.encoder = CachingEncoder(inner)
            d_e = self.encoder.d_e
            self.backend = make_backend(
                config.backend, n, seed=seed, fallback_to_scripted=config.fallback_to_scripted
            )
            if config.pool_file and os.path.exists(config.pool_file):
                self.pools = load_pools(config.pool_file)
                if self.pools.n_agents != n:
                    raise ValueError(
                        f"pool file holds {self.pools.n_agents} agents, scenario has {n}"
                    )
            else:
                self.pools = ExperiencePools(n, config.k1, config.k2, config.k3)
            self.selector = SelectorParams.init(d_e, np.random.default_rng([seed, 8]))
            self.sources = EmbedSources.from_mode(config.embed_mode)

        d_lang = config.d_lang if self.language_on else 0
        self.dims = Dims(
            n_agents=n, obs_dim=LOCAL_OBS_DIM, global_dim=GlobalObs.DIM, d_lang=d_lang, d_e=d_e
        )
        self.hyper = Hyper(
            gamma=config.gamma,
            tau=config.tau_polyak,
            critic_lr=config.critic_lr,
            actor_lr=config.actor_lr,
            batch_size=config.batch_size,
            warmup_factor=config.warmup_factor,
            hidden=config.hidden,
            noise_std=config.noise_std,
        )
        self.nets = None
        self.buffer = None
        if self.trainable:
            if checkpoint:
                self.nets = AgentNets.load(checkpoint, self.dims, self.hyper)
            else:
                self.nets = AgentNets.init(self.dims, np.random.default_rng([seed, 1]), self.hyper)
            self.buffer = ReplayBuffer(config.buffer_capacity)

        # remote calls block on the network, so per-agent requests fan out;
        # the scripted backend is pure CPU and runs the loop inline
        self._executor = (
            ThreadPoolExecutor(max_workers=min(n, 8)) if config.backend == "remote" else None
        )
        self._returns: list[float] = []

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)

    def _fan_out(self, tasks):
        if self._executor is None or len(tasks) <= 1:
            return [task() for task in tasks]
        return [f.result() for f in [self._executor.submit(t) for t in tasks]]

    def _gov_action(self) -> GovAction:
        if not self.config.random_government:
            return self.scenario.government
        r = self.rng_gov
        return GovAction(
            tau=float(r.uniform(0.0, 0.5)),
            xi=float(r.uniform(0.0, 0.5)),
            tau_a=float(r.uniform(0.0, 0.2)),
            xi_a=float(r.uniform(0.0, 0.5)),
            spend_ratio=float(r.uniform(0.0, 0.3)),
        )

    def run(self) -> RunMetrics:
        episodes: list[EpisodeRow] = []
        steps: list[StepRow] = []
        events: list[Event] = []
        for ep in range(self.config.episodes):
            episodes.append(self._run_episode(ep, steps, events))
        return RunMetrics(
            config=self._config_snapshot(), episodes=episodes, steps=steps, events=events
        )

    def _config_snapshot(self) -> dict:
        d = self.config.to_dict()
        d["mode"] = self.mode
        if self.timing_random:
            d["random_long_rate"] = self.p_long
            d["random_short_rate"] = self.p_short
        d["scenario_params"] = self.scenario.to_dict()
        return d

    def _scheduled_kind(self, s: int, ind_hist: list[np.ndarray], ep: int, events) -> str:
        if s < 1:
            return "none"
        if self.timing_random:
            u = float(self.rng_trigger.random())
            if u < self.p_long:
                kind = "long"
            elif u < self.p_long + self.p_short:
                kind = "short"
            else:
                kind = "none"
            events.append(Event(ep, s, "rand_trigger", detail=kind))
            return kind
        return classify_news_type(
            ind_hist[s], ind_hist[s - 1], s, self.config.long_interval, self.config.sigma
        )

    def _run_episode(self, ep: int, steps_out: list[StepRow], events: list[Event]) -> EpisodeRow:
        config = self.config
        scenario = self.scenario
        n = scenario.n_households
        ablations = config.ablations

        state = env_reset(scenario, [config.seed, 0, ep])
        if self.language_on:
            self.pools.clear_short()
        texts = [_AgentTexts() for _ in range(n)]
        last_long_news = None
        latest_news_text: str | None = None
        obs_hist = [state.last_global_obs]
        ind_hist = [_reset_indicators(state, n).as_vector()]

        pending: Transition | None = None
        episode_entries = []
        selection_events: list[SelectionEvent] = []
        reward_mean_sum = 0.0
        total_consumption = 0.0
        total_labor = 0.0
        final_gini = wealth_gini(state.assets)
        years = 0
        selector_rng = self.rng_select

        for s in range(config.steps):
            calls = 0
            news = None
            checkpoint_step = False

            if self.language_on:
                scheduled = self._scheduled_kind(s, ind_hist, ep, events)
                checkpoint_step = scheduled == "long"
                kind = scheduled
                if kind == "long" and "long_term" in ablations:
                    kind = "none"
                if kind == "short" and "short_term" in ablations:
                    kind = "none"

                if kind == "long":
                    start = max(0, s - config.long_interval)
                    news = make_long_news(
                        obs_hist[start], obs_hist[s], ind_hist[start], ind_hist[s],
                        s - start, s, self.backend,
                    )
                    calls += 1
                    last_long_news = news
                elif kind == "short":
                    news = make_short_news(
                        obs_hist[s - 1], obs_hist[s], ind_hist[s - 1], ind_hist[s],
                        last_long_news, s, self.backend,
                    )
                    calls += 1
                if news is not None:
                    events.append(Event(ep, s, "news", detail=news.kind))
                    latest_news_text = news.text

                quantiles = rank_quantiles(state.assets)
                retrieved = [[] for _ in range(n)]
                if checkpoint_step and "experience_pool" not in ablations:
                    for i in range(n):
                        retrieved[i] = self.pools.retrieve(
                            i, float(state.efficiencies[i]), float(state.assets[i]), self.encoder
                        )
                        events.append(
                            Event(ep, s, "retrieve", agent=i, detail=str(len(retrieved[i])))
                        )

                if news is not None:
                    records = self._reason_all(news, state, retrieved, quantiles, last_long_news)
                    calls += n
                    for i, rec in enumerate(records):
                        texts[i].record = rec
                        texts[i].reasoning = rec.reasoning
                        events.append(Event(ep, s, "reason", agent=i, detail=news.kind))

                if checkpoint_step and "speak" not in ablations:
                    calls += self._speak_and_reflect(
                        ep, s, state, texts, quantiles, selection_events, selector_rng, events
                    )

            local_obs = np.column_stack(
                [state.assets, state.efficiencies, state.incomes, np.full(n, state.wage)]
            )
            pooled_rows = None
            if self.language_on:
                ms = []
                pooled_rows = np.empty((n, self.dims.d_e))
                for i in range(n):
                    m_i, pooled_i = build_agent_embedding(
                        texts[i].reasoning,
                        texts[i].reflection,
                        texts[i].statement,
                        latest_news_text,
                        self.nets.projection,
                        self.encoder,
                        self.sources,
                    )
                    ms.append(m_i)
                    pooled_rows[i] = pooled_i
                x = np.concatenate([state.last_global_obs.as_vector(), *ms])
            elif self.trainable:
                x = state.last_global_obs.as_vector()
            else:
                x = None

            if pending is not None:
                pending.x_next = x.copy()
                pending.obs_next = local_obs.copy()
                self.buffer.push(pending)
                pending = None

            gov = self._gov_action()
            raw = self._act_all(local_obs, x, gov)
            events.append(Event(ep, s, "act"))

            hh_actions = [HouseholdAction.from_raw(raw[i], scenario.h_max) for i in range(n)]
            assets_before = state.assets.copy()
            state_next, rewards, _, done, info = env_step(state, gov, hh_actions, scenario)
            events.append(Event(ep, s, "env_step"))

            if self.trainable:
                pending = Transition(
                    x=x,
                    obs=local_obs,
                    actions=raw.copy(),
                    rewards=rewards.copy(),
                    x_next=x,
                    obs_next=local_obs,
                    done=done,
                    pooled=pooled_rows,
                )
                if done:
                    self._finalize(pending, state_next, ms if self.language_on else None)
                    pending = None

            actor_loss = None
            critic_loss = None
            if self.training and len(self.buffer) >= max(self.hyper.warmup, self.hyper.batch_size):
                tm = train_step(self.nets, self.buffer, self.hyper, self.rng_sample)
                actor_loss = tm.actor_loss
                critic_loss = tm.critic_loss
                events.append(Event(ep, s, "train"))

            if self.language_on:
                for i in range(n):
                    entry = build_entry(
                        i,
                        float(rewards[i]),
                        float(state.efficiencies[i]),
                        float(assets_before[i]),
                        float(raw[i, 0]),
                        float(raw[i, 1]),
                        texts[i].reasoning or NO_REASONING_TEXT,
                        self.encoder,
                    )
                    self.pools.register(entry)
                    self.pools.harvest_short(i, [entry])
                    episode_entries.append(entry)
                events.append(Event(ep, s, "harvest_short", detail=str(n)))

            steps_out.append(
                StepRow(
                    episode=ep,
                    step=s,
                    actor_loss=actor_loss,
                    critic_loss=critic_loss,
                    avg_household_reward=float(np.mean(rewards)),
                    utility_sum=float(np.sum(rewards)),
                    news_kind=news.kind if news is not None else "none",
                    backend_calls=calls,
                )
            )
            reward_mean_sum += float(np.mean(rewards))
            total_consumption += float(np.sum(info.consumptions))
            total_labor += float(sum(a.labor for a in hh_actions))
            final_gini = info.macro.wealth_gini
            obs_hist.append(state_next.last_global_obs)
            ind_hist.append(info.macro.as_vector())
            state = state_next
            years += 1
            if done:
                break

        if pending is not None:
            # horizon truncation is not a terminal: keep done=False so the
            # critic bootstraps from the final state
            self._finalize(pending, state, ms if self.language_on else None)
            pending = None

        harvest_long_on = self.mode != "eval" or config.eval_harvest
        if self.language_on and harvest_long_on:
            added = self.pools.harvest_long(episode_entries)
            events.append(Event(ep, years - 1, "harvest_long", detail=str(len(added))))

        episode_return = reward_mean_sum
        if self.language_on and config.train_selector and self.mode == "train":
            baseline = float(np.mean(self._returns)) if self._returns else 0.0
            reinforce_update(
                self.selector, selection_events, episode_return, baseline, lr=config.selector_lr
            )
        self._returns.append(episode_return)

        return EpisodeRow(
            episode=ep,
            years=years,
            avg_household_reward=reward_mean_sum / years,
            social_welfare=state.welfare,
            total_consumption=total_consumption,
            total_labor=total_labor,
            final_gini=final_gini,
            gdp=state.gdp,
        )

    def _finalize(self, pending: Transition, state_next, ms) -> None:
        n = self.scenario.n_households
        pending.obs_next = np.column_stack(
            [
                state_next.assets,
                state_next.efficiencies,
                state_next.incomes,
                np.full(n, state_next.wage),
            ]
        )
        if ms is not None:
            pending.x_next = np.concatenate([state_next.last_global_obs.as_vector(), *ms])
        else:
            pending.x_next = state_next.last_global_obs.as_vector()
        self.buffer.push(pending)

    def _reason_all(self, news, state, retrieved, quantiles, last_long_news):
        backend = self.backend
        n = self.scenario.n_households

        def task(i):
            e = float(state.efficiencies[i])
            a = float(state.assets[i])
            q = float(quantiles[i])
            if news.kind == "long":
                return lambda: reason_long(news, e, a, retrieved[i], q, i, backend)
            return lambda: reason_short(news, last_long_news, e, a, q, i, backend)

        return self._fan_out([task(i) for i in range(n)])

    def _speak_and_reflect(
        self, ep, s, state, texts, quantiles, selection_events, selector_rng, events
    ) -> int:
        """Candidate generation, statement selection, broadcast, and
        reflection for every agent; returns the backend-call count."""
        backend = self.backend
        config = self.config
        n = self.scenario.n_households

        def cand_task(i):
            rec = texts[i].record or ReasoningRecord(
                agent_id=i, period=s, status=1, reasoning=NO_REASONING_TEXT, news_kind="short"
            )
            e = float(state.efficiencies[i])
            a = float(state.assets[i])
            q = float(quantiles[i])
            return lambda: generate_candidates(e, a, rec, q, i, s, backend)

        candidate_lists = self._fan_out([cand_task(i) for i in range(n)])
        sets = []
        for i, cands in enumerate(candidate_lists):
            idx, probs, vecs = select_statement(cands, self.selector, self.encoder, selector_rng)
            sets.append(StatementSet(agent_id=i, candidates=cands, selected_index=idx, probs=probs))
            if config.train_selector:
                selection_events.append(SelectionEvent(candidate_vecs=vecs, probs=probs, chosen=idx))
            events.append(Event(ep, s, "speak", agent=i, detail=str(idx)))
        statements = broadcast(sets)
        for i in range(n):
            texts[i].statement = statements[i]

        speaker_quantiles = [float(v) for v in quantiles]

        def reflect_task(i):
            rec = texts[i].record or ReasoningRecord(
                agent_id=i, period=s, status=1, reasoning=NO_REASONING_TEXT, news_kind="short"
            )
            e = float(state.efficiencies[i])
            a = float(state.assets[i])
            return lambda: reflect(
                e, a, statements, rec, statements[i], speaker_quantiles, i, s, backend
            )

        reflections = self._fan_out([reflect_task(i) for i in range(n)])
        for i, res in enumerate(reflections):
            texts[i].reflection = res.text
            events.append(Event(ep, s, "reflect", agent=i))
        return 2 * n

    def _act_all(self, local_obs: np.ndarray, x, gov: GovAction) -> np.ndarray:
        config = self.config
        n = self.scenario.n_households
        raw = np.empty((n, 2))
        for i in range(n):
            if self.trainable:
                m_i = x[self.dims.m_slice(i)] if self.language_on else None
                raw[i] = act(
                    self.nets,
                    i,
                    local_obs[i],
                    m_i,
                    explore=self.explore,
                    rng=self.rng_noise,
                    noise_std=config.noise_std,
                )
            elif config.policy == "random":
                raw[i] = random_policy(local_obs[i], self.rng_random)
            else:
                raw[i] = rule_policy(local_obs[i], gov, self.scenario)
        return raw


def _resolve_rates(config: RunConfig, mode: str) -> RunConfig:
    """Fill random_short_rate for the random-trigger ablation by
    measuring the rule scheduler's short-news frequency on the same
    configuration and seed."""
    if "timing_scheduler" not in config.ablations or config.random_short_rate is not None:
        return config
    base = replace(
        config,
        ablations=config.ablations - {"timing_scheduler"},
        out_dir=None,
        pool_file=None,
    )
    runner = Runner(base, mode)
    try:
        metrics = runner.run()
    finally:
        runner.close()
    shorts = sum(1 for e in metrics.events if e.kind == "news" and e.detail == "short")
    draws = sum(1 for r in metrics.steps if r.step >= 1)
    rate = shorts / draws if draws else 0.0
    return replace(config, random_short_rate=rate)


def _write_run(runner: Runner, metrics: RunMetrics, out_dir: str | None) -> None:
    if not out_dir:
        return
    write_metrics(metrics, out_dir)
    if runner.trainable and runner.mode == "train":
        runner.nets.save(os.path.join(out_dir, "checkpoint.npz"))
    if runner.language_on:
        save_pools(runner.pools, os.path.join(out_dir, "pools.jsonl"))


def run_training(config: RunConfig, checkpoint: str | None = None) -> tuple[RunMetrics, AgentNets | None]:
    config = _resolve_rates(config, "train")
    runner = Runner(config, "train", checkpoint=checkpoint)
    try:
        metrics = runner.run()
    finally:
        runner.close()
    _write_run(runner, metrics, config.out_dir)
    if config.pool_file and runner.language_on:
        save_pools(runner.pools, config.pool_file)
    return metrics, runner.nets


def run_simulation(config: RunConfig, checkpoint: str | None = None) -> RunMetrics:
    config = _resolve_rates(config, "simulate")
    runner = Runner(config, "simulate", checkpoint=checkpoint)
    try:
        metrics = runner.run()
    finally:
        runner.close()
    _write_run(runner, metrics, config.out_dir)
    return metrics


def _renumber(metrics: RunMetrics, offset: int) -> RunMetrics:
    return RunMetrics(
        config=metrics.config,
        episodes=[replace(e, episode=e.episode + offset) for e in metrics.episodes],
        steps=[replace(r, episode=r.episode + offset) for r in metrics.steps],
        events=[replace(e, episode=e.episode + offset) for e in metrics.events],
    )


def _mean_sd(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(np.mean(arr)), "sd": sd}


def run_eval(
    config: RunConfig,
    checkpoint: str | None = None,
    seeds: list[int] | None = None,
) -> tuple[RunMetrics, dict]:
    """Exploration-free rollouts, optionally aggregated over seeds."""
    seed_list = list(seeds) if seeds else [config.seed]
    merged = RunMetrics(config={})
    per_seed = []
    offset = 0
    for sd in seed_list:
        cfg = _resolve_rates(replace(config, seed=sd, out_dir=None), "eval")
        runner = Runner(cfg, "eval", checkpoint=checkpoint)
        try:
            metrics = runner.run()
        finally:
            runner.close()
        part = _renumber(metrics, offset)
        merged.episodes.extend(part.episodes)
        merged.steps.extend(part.steps)
        merged.events.extend(part.events)
        if not merged.config:
            merged.config = dict(part.config)
        offset += len(part.episodes)
        per_seed.append(
            {
                "seed": sd,
                "mean_reward": float(np.mean([e.avg_household_reward for e in metrics.episodes])),
                "mean_years": float(np.mean([e.years for e in metrics.episodes])),
                "mean_welfare": float(np.mean([e.social_welfare for e in metrics.episodes])),
            }
        )
    merged.config["seeds"] = seed_list
    merged.config["checkpoint"] = checkpoint
    summary = {
        "per_seed": per_seed,
        "aggregate": {
            key: _mean_sd([row[key] for row in per_seed])
            for key in ("mean_reward", "mean_years", "mean_welfare")
        },
    }
    if config.out_dir:
        write_metrics(merged, config.out_dir)
        with open(os.path.join(config.out_dir, "eval_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return merged, summary
