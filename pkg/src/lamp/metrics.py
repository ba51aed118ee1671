"""Run artifacts: episode and step CSVs, an event log, and a config
snapshot.

A run directory holds four files. episodes.csv has one row per episode
with survival and macro aggregates; steps.csv has one row per simulated
step with losses and news telemetry; events.log records every scheduled
action as one parseable line, which is what ablation checks count; and
config.json snapshots the exact configuration for provenance. Floats
are written with repr so re-reading reproduces them bit for bit.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

EPISODE_FIELDS = (
    "episode",
    "years",
    "avg_household_reward",
    "social_welfare",
    "total_consumption",
    "total_labor",
    "final_gini",
    "gdp",
)

STEP_FIELDS = (
    "episode",
    "step",
    "actor_loss",
    "critic_loss",
    "avg_household_reward",
    "utility_sum",
    "news_kind",
    "backend_calls",
)

NEWS_KINDS = ("none", "short", "long")

EVENT_KINDS = (
    "rand_trigger",
    "news",
    "retrieve",
    "reason",
    "speak",
    "reflect",
    "backend_fallback",
    "act",
    "env_step",
    "train",
    "harvest_short",
    "harvest_long",
)

# ordering rank inside one step; equal ranks may interleave
_PHASE = {
    "rand_trigger": 0,
    "news": 0,
    "retrieve": 1,
    "reason": 1,
    "speak": 1,
    "reflect": 1,
    "backend_fallback": 1,
    "act": 2,
    "env_step": 3,
    "train": 4,
    "harvest_short": 5,
    "harvest_long": 6,
}

_AGENT_ORDER = {"retrieve": 0, "reason": 1, "speak": 2, "reflect": 3}


@dataclass(frozen=True)
class EpisodeRow:
    episode: int
    years: int
    avg_household_reward: float
    social_welfare: float
    total_consumption: float
    total_labor: float
    final_gini: float
    gdp: float


@dataclass(frozen=True)
class StepRow:
    episode: int
    step: int
    actor_loss: float | None
    critic_loss: float | None
    avg_household_reward: float
    utility_sum: float
    news_kind: str
    backend_calls: int


@dataclass(frozen=True)
class Event:
    episode: int
    step: int
    kind: str
    agent: int | None = None
    detail: str | None = None

    def line(self) -> str:
        parts = [f"ep={self.episode}", f"step={self.step}", f"kind={self.kind}"]
        if self.agent is not None:
            parts.append(f"agent={self.agent}")
        if self.detail is not None:
            parts.append(f"detail={self.detail}")
        return " ".join(parts)

    @classmethod
    def parse(cls, line: str) -> "Event":
        fields: dict[str, str] = {}
        for token in line.split(" "):
            key, sep, value = token.partition("=")
            if not sep or not value or key in fields:
                raise ValueError(f"bad event token {token!r} in line {line!r}")
            fields[key] = value
        try:
            episode = int(fields.pop("ep"))
            step = int(fields.pop("step"))
            kind = fields.pop("kind")
        except KeyError as exc:
            raise ValueError(f"event line missing {exc} field: {line!r}") from None
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        agent = int(fields.pop("agent")) if "agent" in fields else None
        detail = fields.pop("detail", None)
        if fields:
            raise ValueError(f"unexpected event fields {sorted(fields)} in {line!r}")
        return cls(episode, step, kind, agent, detail)


@dataclass
class RunMetrics:
    config: dict
    episodes: list[EpisodeRow] = field(default_factory=list)
    steps: list[StepRow] = field(default_factory=list)
    events: list[Event] = field(default_factory=list)

    def validate(self) -> None:
        steps_by_episode: dict[int, list[StepRow]] = {}
        for row in self.steps:
            steps_by_episode.setdefault(row.episode, []).append(row)
        for ep in self.episodes:
            if not 0 <= ep.years <= 300:
                raise ValueError(f"episode {ep.episode} survived {ep.years} years")
            rows = steps_by_episode.get(ep.episode, [])
            if ep.years != len(rows):
                raise ValueError(
                    f"episode {ep.episode} logged {len(rows)} steps but years={ep.years}"
                )
            welfare = sum(r.utility_sum for r in rows)
            if abs(welfare - ep.social_welfare) > 1e-6:
                raise ValueError(
                    f"episode {ep.episode} welfare {ep.social_welfare} != step sum {welfare}"
                )
        for row in self.steps:
            if row.news_kind not in NEWS_KINDS:
                raise ValueError(f"bad news kind {row.news_kind!r}")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        raise TypeError("bool is not a CSV value here")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics(metrics: RunMetrics, out_dir: str) -> None:
    """Write episodes.csv, steps.csv, events.log, and config.json."""
    metrics.validate()
    os.makedirs(out_dir, exist_ok=True)

    with open(os.path.join(out_dir, "episodes.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(EPISODE_FIELDS)
        for ep in metrics.episodes:
            writer.writerow([_fmt(getattr(ep, name)) for name in EPISODE_FIELDS])

    with open(os.path.join(out_dir, "steps.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STEP_FIELDS)
        for row in metrics.steps:
            writer.writerow([_fmt(getattr(row, name)) for name in STEP_FIELDS])

    with open(os.path.join(out_dir, "events.log"), "w") as fh:
        for event in metrics.events:
            fh.write(event.line() + "\n")

    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(metrics.config, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _float_or_none(text: str) -> float | None:
    return None if text == "" else float(text)


def read_episodes(path: str) -> list[EpisodeRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != EPISODE_FIELDS:
            raise ValueError(f"unexpected episodes.csv header in {path}")
        return [
            EpisodeRow(
                episode=int(r["episode"]),
                years=int(r["years"]),
                avg_household_reward=float(r["avg_household_reward"]),
                social_welfare=float(r["social_welfare"]),
                total_consumption=float(r["total_consumption"]),
                total_labor=float(r["total_labor"]),
                final_gini=float(r["final_gini"]),
                gdp=float(r["gdp"]),
            )
            for r in reader
        ]


def read_steps(path: str) -> list[StepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != STEP_FIELDS:
            raise ValueError(f"unexpected steps.csv header in {path}")
        return [
            StepRow(
                episode=int(r["episode"]),
                step=int(r["step"]),
                actor_loss=_float_or_none(r["actor_loss"]),
                critic_loss=_float_or_none(r["critic_loss"]),
                avg_household_reward=float(r["avg_household_reward"]),
                utility_sum=float(r["utility_sum"]),
                news_kind=r["news_kind"],
                backend_calls=int(r["backend_calls"]),
            )
            for r in reader
        ]


def read_events(path: str) -> list[Event]:
    with open(path) as fh:
        return [Event.parse(line.rstrip("\n")) for line in fh if line.strip()]


def count_events(events: list[Event], kind: str, detail: str | None = None) -> int:
    if kind not in EVENT_KINDS:
        raise ValueError(f"unknown event kind {kind!r}")
    return sum(
        1
        for e in events
        if e.kind == kind and (detail is None or e.detail == detail)
    )


def validate_event_grammar(events: list[Event]) -> None:
    """Check the per-step ordering news -> agent phase -> act -> env_step
    -> train -> harvests, and the per-agent order retrieve < reason <
    speak < reflect, each at most once per agent per step."""
    groups: dict[tuple[int, int], list[Event]] = {}
    order: list[tuple[int, int]] = []
    for e in events:
        key = (e.episode, e.step)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(e)
    if order != sorted(order):
        raise ValueError("event log is not ordered by (episode, step)")

    for key, group in groups.items():
        phase = -1
        news_seen = 0
        acts = sum(1 for e in group if e.kind == "act")
        env_steps = sum(1 for e in group if e.kind == "env_step")
        if acts != 1 or env_steps != 1:
            raise ValueError(f"step {key} has {acts} act and {env_steps} env_step events")
        agent_last: dict[int, int] = {}
        for e in group:
            rank = _PHASE[e.kind]
            if rank < phase:
                raise ValueError(f"step {key}: {e.kind} out of phase order")
            phase = rank
            if e.kind == "news":
                news_seen += 1
                if news_seen > 1:
                    raise ValueError(f"step {key} has multiple news events")
            if e.kind in _AGENT_ORDER:
                if e.agent is None:
                    raise ValueError(f"step {key}: {e.kind} event without agent")
                pos = _AGENT_ORDER[e.kind]
                if agent_last.get(e.agent, -1) >= pos:
                    raise ValueError(
                        f"step {key}: agent {e.agent} {e.kind} out of order or repeated"
                    )
                agent_last[e.agent] = pos
