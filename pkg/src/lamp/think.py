"""News scheduling, news and reasoning generation, and experience pools.

Each period the scheduler inspects the macro indicator triple (wealth
Gini, social welfare, GDP per capita) and declares a long-term checkpoint
(every L periods), a short-term shock (any indicator moving more than a
threshold fraction), or nothing. News text is produced by the configured
language backend from the global observation window; agents then reason
over the news plus their private observation, yielding an economic-status
rating and a reasoning text.

Experience is kept in two tiers: a per-agent short buffer holding the
reward-top-k1 records of the current episode, and a global append-only
long store harvested reward-top-k2 per window. Retrieval embeds a
canonical rendering of the agent's private observation and returns the
exact cosine top-k3 of the long store unioned with the short buffer.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from lamp.backend import PromptRequest, fill_template, load_template
from lamp.econ import GlobalObs

EPS_REL = 1e-8
NO_EXPERIENCE_MARKER = "No similar experiences found."
NO_LONG_NEWS_MARKER = "None"

# literal placeholder spans used by the stored templates
SIMILAR_SPAN = 'similar_experience if similar_experience else "No similar experiences found."'
RECENT_LONG_SPAN = 'recent_long_term_result if recent_long_term_result else "None"'
STATEMENTS_SPAN = 'chr(10).join([f"- {stmt}" for stmt in other_agents_statements])'

INDICATOR_NAMES = ("wealth Gini", "social welfare", "GDP per capita")
OBS_LABELS = {
    "wage": "wage",
    "asset_mean_rich": "top-decile wealth",
    "asset_mean_poor": "bottom-half wealth",
    "income_mean_rich": "top-decile income",
    "income_mean_poor": "bottom-half income",
    "efficiency_mean_rich": "top-decile productivity",
    "efficiency_mean_poor": "bottom-half productivity",
}


@dataclass(frozen=True)
class NewsEvent:
    kind: str  # "long" or "short"
    period: int
    text: str
    indicators: np.ndarray  # indicator triple at generation time
    indicators_prev: np.ndarray

    def __post_init__(self):
        if self.kind not in ("long", "short"):
            raise ValueError(f"news kind must be long or short, got {self.kind!r}")
        if not self.text.strip():
            raise ValueError("news text must be nonempty")


@dataclass(frozen=True)
class ReasoningRecord:
    agent_id: int
    period: int
    status: int  # 0 bad, 1 neutral, 2 good
    reasoning: str
    news_kind: str
    analysis: str | None = None

    def __post_init__(self):
        if self.status not in (0, 1, 2):
            raise ValueError(f"status must be 0, 1, or 2, got {self.status}")


@dataclass
class ExperienceEntry:
    uid: str
    agent_id: int
    reward: float
    productivity: float
    wealth: float
    savings_raw: float
    labor_raw: float
    reasoning: str
    key: np.ndarray
    seq: int = 0

    def to_json(self) -> dict:
        d = asdict(self)
        d["key"] = [float(v) for v in self.key]
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ExperienceEntry":
        d = dict(d)
        d["key"] = np.asarray(d["key"], dtype=np.float64)
        return cls(**d)


def classify_news_type(
    x_now,
    x_prev,
    t: int,
    long_interval: int,
    sigma: float = 0.4,
    relative: bool = True,
) -> str:
    """Scheduler verdict for period t; long checkpoints take precedence."""
    if long_interval < 1:
        raise ValueError("long_interval must be positive")
    if t > 0 and t % long_interval == 0:
        return "long"
    if t < 1:
        return "none"
    now = np.asarray(x_now, dtype=np.float64)
    prev = np.asarray(x_prev, dtype=np.float64)
    delta = np.abs(now - prev)
    if relative:
        change = delta / np.maximum(np.abs(prev), EPS_REL)
    else:
        change = delta
    return "short" if float(np.max(change)) > sigma else "none"


def query_sentence(e: float, a: float) -> str:
    """Canonical text rendering of a private observation (e, a)."""
    return f"productivity {e:.4f} wealth {a:.4f}"


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _obs_delta_context(obs_prev: GlobalObs, obs_now: GlobalObs) -> tuple[str, float]:
    """Largest relative mover among the global-observation fields, signed."""
    best_name, best_signed = "wage", 0.0
    for name in GlobalObs.FIELDS:
        prev = getattr(obs_prev, name)
        now = getattr(obs_now, name)
        signed = (now - prev) / max(abs(prev), EPS_REL)
        if abs(signed) > abs(best_signed):
            best_name, best_signed = OBS_LABELS[name], signed
    return best_name, best_signed


def make_long_news(
    obs_prev: GlobalObs,
    obs_now: GlobalObs,
    x_prev,
    x_now,
    window: int,
    period: int,
    backend,
) -> NewsEvent:
    replacements = {
        "window": str(window),
        "wage_prev": _fmt(obs_prev.wage),
        "wage_now": _fmt(obs_now.wage),
        "rich_wealth_prev": _fmt(obs_prev.asset_mean_rich),
        "rich_wealth_now": _fmt(obs_now.asset_mean_rich),
        "poor_wealth_prev": _fmt(obs_prev.asset_mean_poor),
        "poor_wealth_now": _fmt(obs_now.asset_mean_poor),
        "rich_income_prev": _fmt(obs_prev.income_mean_rich),
        "rich_income_now": _fmt(obs_now.income_mean_rich),
        "poor_income_prev": _fmt(obs_prev.income_mean_poor),
        "poor_income_now": _fmt(obs_now.income_mean_poor),
    }
    prompt = fill_template(load_template("long_news"), replacements)
    context = {
        "window": window,
        "wage_prev": obs_prev.wage,
        "wage_now": obs_now.wage,
        "rich_wealth_prev": obs_prev.asset_mean_rich,
        "rich_wealth_now": obs_now.asset_mean_rich,
        "poor_wealth_prev": obs_prev.asset_mean_poor,
        "poor_wealth_now": obs_now.asset_mean_poor,
    }
    request = PromptRequest(kind="long_news", prompt=prompt, agent_id=-1, period=period, context=context)
    text = backend.complete(request)
    return NewsEvent(
        kind="long",
        period=period,
        text=text,
        indicators=np.asarray(x_now, dtype=np.float64).copy(),
        indicators_prev=np.asarray(x_prev, dtype=np.float64).copy(),
    )


def make_short_news(
    obs_prev: GlobalObs,
    obs_now: GlobalObs,
    x_prev,
    x_now,
    last_long: NewsEvent | None,
    period: int,
    backend,
) -> NewsEvent:
    name, change = _obs_delta_context(obs_prev, obs_now)
    replacements = {
        "wage_prev": _fmt(obs_prev.wage),
        "wage_now": _fmt(obs_now.wage),
        "rich_wealth_prev": _fmt(obs_prev.asset_mean_rich),
        "rich_wealth_now": _fmt(obs_now.asset_mean_rich),
        "poor_wealth_prev": _fmt(obs_prev.asset_mean_poor),
        "poor_wealth_now": _fmt(obs_now.asset_mean_poor),
        "max_change_name": name,
        "max_change_pct": f"{100.0 * change:+.1f}%",
        RECENT_LONG_SPAN: last_long.text if last_long else NO_LONG_NEWS_MARKER,
    }
    prompt = fill_template(load_template("short_news"), replacements)
    context = {"max_change_name": name, "max_change": change}
    request = PromptRequest(kind="short_news", prompt=prompt, agent_id=-1, period=period, context=context)
    text = backend.complete(request)
    return NewsEvent(
        kind="short",
        period=period,
        text=text,
        indicators=np.asarray(x_now, dtype=np.float64).copy(),
        indicators_prev=np.asarray(x_prev, dtype=np.float64).copy(),
    )


def _reason_context(news: NewsEvent, wealth_quantile: float) -> dict:
    x_prev, x_now = news.indicators_prev, news.indicators
    return {
        "wealth_quantile": wealth_quantile,
        "gini_prev": float(x_prev[0]),
        "gini_now": float(x_now[0]),
        "welfare_prev": float(x_prev[1]),
        "welfare_now": float(x_now[1]),
        "gdp_prev": float(x_prev[2]),
        "gdp_now": float(x_now[2]),
    }


def reason_short(
    news: NewsEvent,
    recent_long: NewsEvent | None,
    e: float,
    a: float,
    wealth_quantile: float,
    agent_id: int,
    backend,
) -> ReasoningRecord:
    replacements = {
        "short_term_news": news.text,
        RECENT_LONG_SPAN: recent_long.text if recent_long else NO_LONG_NEWS_MARKER,
        "private_observation[0]": _fmt(e),
        "private_observation[1]": _fmt(a),
    }
    prompt = fill_template(load_template("short_reason"), replacements)
    request = PromptRequest(
        kind="short_reason",
        prompt=prompt,
        agent_id=agent_id,
        period=news.period,
        context=_reason_context(news, wealth_quantile),
    )
    out = backend.complete(request)
    return ReasoningRecord(
        agent_id=agent_id,
        period=news.period,
        status=out["economic_status"],
        reasoning=out["reasoning"],
        news_kind="short",
    )


def format_experiences(entries: list[ExperienceEntry]) -> str:
    """Render retrieved entries for the Similar Experiences prompt slot."""
    if not entries:
        return NO_EXPERIENCE_MARKER
    lines = []
    for entry in entries:
        lines.append(
            f"- Reward={entry.reward:.2f}, Personal productivity (e)={entry.productivity:.4f}, "
            f"Personal wealth={entry.wealth:.4f}, Reasoning: {entry.reasoning}"
        )
    return "\n".join(lines)


def reason_long(
    news: NewsEvent,
    e: float,
    a: float,
    retrieved: list[ExperienceEntry],
    wealth_quantile: float,
    agent_id: int,
    backend,
) -> ReasoningRecord:
    replacements = {
        "long_term_news": news.text,
        "private_observation[0]": _fmt(e),
        "private_observation[1]": _fmt(a),
        SIMILAR_SPAN: format_experiences(retrieved),
    }
    prompt = fill_template(load_template("long_reason"), replacements)
    request = PromptRequest(
        kind="long_reason",
        prompt=prompt,
        agent_id=agent_id,
        period=news.period,
        context=_reason_context(news, wealth_quantile),
    )
    out = backend.complete(request)
    return ReasoningRecord(
        agent_id=agent_id,
        period=news.period,
        status=out["economic_status"],
        reasoning=out["reasoning"],
        news_kind="long",
        analysis=out["analysis"],
    )


def build_entry(
    agent_id: int,
    reward: float,
    e: float,
    a: float,
    savings_raw: float,
    labor_raw: float,
    reasoning: str,
    encoder,
) -> ExperienceEntry:
    """Entry keyed by the canonical observation sentence, unit-normalized."""
    if not np.isfinite(reward):
        raise ValueError("entry reward must be finite")
    key = np.asarray(encoder.encode(query_sentence(e, a)), dtype=np.float64).copy()
    norm = float(np.linalg.norm(key))
    if norm > 0.0:
        key /= norm
    return ExperienceEntry(
        uid="",
        agent_id=agent_id,
        reward=float(reward),
        productivity=float(e),
        wealth=float(a),
        savings_raw=float(savings_raw),
        labor_raw=float(labor_raw),
        reasoning=reasoning,
        key=key,
    )


def _top_k(entries: list[ExperienceEntry], k: int) -> list[ExperienceEntry]:
    # highest reward first; among equal rewards, newer entries win
    return sorted(entries, key=lambda r: (-r.reward, -r.seq))[:k]


class ExperiencePools:
    """Two-tier experience store shared by all agents of one run."""

    def __init__(self, n_agents: int, k1: int = 3, k2: int = 5, k3: int = 3):
        if min(k1, k2, k3) < 1:
            raise ValueError("k1, k2, k3 must be positive")
        self.n_agents = n_agents
        self.k1, self.k2, self.k3 = k1, k2, k3
        self.short: list[list[ExperienceEntry]] = [[] for _ in range(n_agents)]
        self.long: list[ExperienceEntry] = []
        self._seq = 0

    def register(self, entry: ExperienceEntry) -> ExperienceEntry:
        """Assign insertion order and identity; call once per new entry."""
        self._seq += 1
        entry.seq = self._seq
        entry.uid = f"e{self._seq}"
        return entry

    def clear_short(self) -> None:
        self.short = [[] for _ in range(self.n_agents)]

    def harvest_short(self, agent_id: int, new_entries: list[ExperienceEntry]) -> None:
        merged = self.short[agent_id] + list(new_entries)
        self.short[agent_id] = _top_k(merged, self.k1)

    def harvest_long(self, window_entries: list[ExperienceEntry]) -> list[ExperienceEntry]:
        """Append the reward-top-k2 of the window; returns what was added."""
        added = _top_k(list(window_entries), self.k2)
        self.long.extend(added)
        return added

    def retrieve(self, agent_id: int, e: float, a: float, encoder) -> list[ExperienceEntry]:
        """Exact cosine top-k3 of the long store, unioned with the agent's
        short buffer; duplicates removed by identity."""
        hits: list[ExperienceEntry] = []
        if self.long:
            query = np.asarray(encoder.encode(query_sentence(e, a)), dtype=np.float64)
            qn = float(np.linalg.norm(query))
            sims = np.empty(len(self.long))
            for idx, entry in enumerate(self.long):
                kn = float(np.linalg.norm(entry.key))
                if qn == 0.0 or kn == 0.0:
                    sims[idx] = 0.0
                else:
                    sims[idx] = float(query @ entry.key) / (qn * kn)
            order = np.argsort(-sims, kind="stable")[: self.k3]
            hits = [self.long[idx] for idx in order]
        seen = {entry.uid for entry in hits}
        for entry in self.short[agent_id]:
            if entry.uid not in seen:
                hits.append(entry)
                seen.add(entry.uid)
        return hits


POOL_FORMAT_VERSION = 1


def save_pools(pools: ExperiencePools, path: str) -> None:
    """Line-delimited persistence: one header line, then one entry per line."""
    with open(path, "w") as fh:
        header = {
            "version": POOL_FORMAT_VERSION,
            "n_agents": pools.n_agents,
            "k1": pools.k1,
            "k2": pools.k2,
            "k3": pools.k3,
            "seq": pools._seq,
        }
        fh.write(json.dumps(header) + "\n")
        for agent_id, buffer in enumerate(pools.short):
            for entry in buffer:
                fh.write(json.dumps({"store": "short", **entry.to_json()}) + "\n")
        for entry in pools.long:
            fh.write(json.dumps({"store": "long", **entry.to_json()}) + "\n")


def load_pools(path: str) -> ExperiencePools:
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = json.loads(lines[0])
    if header.get("version") != POOL_FORMAT_VERSION:
        raise ValueError(f"unsupported pool file version {header.get('version')!r}")
    pools = ExperiencePools(header["n_agents"], header["k1"], header["k2"], header["k3"])
    pools._seq = header["seq"]
    for line in lines[1:]:
        record = json.loads(line)
        store = record.pop("store")
        entry = ExperienceEntry.from_json(record)
        if store == "short":
            pools.short[entry.agent_id].append(entry)
        else:
            pools.long.append(entry)
    return pools
