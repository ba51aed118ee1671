"""Language backends: prompt templates, response schemas, and transports.

Reasoning steps go through a single complete() interface with two
implementations. The remote client speaks a chat-completions protocol and
applies lenient extraction (strip code fences, take the first balanced
JSON object) followed by strict schema validation, so no caller ever sees
an unvalidated response. The scripted backend is a pure function of
(request, seed) that emits schema-valid responses from fixed numeric
rules, which makes whole training runs deterministic and testable
offline. Every request, including rejects and fallbacks, is appended to
an audit log.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

TEMPLATE_KINDS = ("long_reason", "short_reason", "reflect", "candidates", "long_news", "short_news")
NEWS_KINDS = ("long_news", "short_news")
STATUS_WORDS = {0: "strained", 1: "steady", 2: "strong"}

# Scripted candidate statements, indexed by wealth tier (0 low, 1 mid,
# 2 high). Reflection infers each speaker's tier back from provenance, so
# the tier rule must match guess_from_quantile.
PHRASE_BANK = {
    0: (
        "Money is tight; I plan to work extra hours to rebuild savings.",
        "Times are hard for my household; consumption will have to wait.",
        "I am cutting back on spending until wages recover.",
    ),
    1: (
        "My household is holding steady; no big changes planned.",
        "Income covers our needs; I will keep savings and hours as they are.",
        "Conditions look stable enough for us to stay the course.",
    ),
    2: (
        "My household is thriving; I can save more and still consume well.",
        "Strong returns this year; I may ease back on working hours.",
        "Wealth is compounding nicely; I feel confident about the outlook.",
    ),
}

FORMAT_REMINDER = (
    "Your previous reply did not match the required schema. "
    "Return exactly the JSON object in the specified schema, with no extra keys and no commentary."
)

ENV_ENDPOINT = "LAMP_LLM_ENDPOINT"
ENV_MODEL = "LAMP_LLM_MODEL"
ENV_API_KEY = "LAMP_LLM_API_KEY"


class TransportError(RuntimeError):
    """Network-level failure after exhausting transport retries."""


class BackendFormatError(ValueError):
    """Response failed schema validation; carries the raw text."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class PromptRequest:
    """One reasoning call: filled prompt plus the numeric context that
    drives the scripted rules."""

    kind: str
    prompt: str
    agent_id: int
    period: int
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in TEMPLATE_KINDS:
            raise ValueError(f"unknown template kind {self.kind!r}")


def load_template(kind: str) -> str:
    if kind not in TEMPLATE_KINDS:
        raise ValueError(f"unknown template kind {kind!r}")
    return resources.files("lamp.prompts").joinpath(f"{kind}.txt").read_text()


def fill_template(template: str, replacements: dict[str, str]) -> str:
    """Replace literal placeholder spans; every key must appear."""
    out = template
    for key, value in replacements.items():
        span = "{" + key + "}"
        if span not in out:
            raise ValueError(f"placeholder {span!r} not found in template")
        out = out.replace(span, value)
    return out


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate_response(kind: str, obj, n_households: int) -> str | None:
    """Strict Appendix-style validation; returns a reason or None if valid."""
    if kind in NEWS_KINDS:
        if not isinstance(obj, str) or not obj.strip():
            return "news must be nonempty text"
        return None
    if not isinstance(obj, dict):
        return "response must be a JSON object"

    def check_status(v):
        if not _is_int(v) or v not in (0, 1, 2):
            return f"economic_status must be an integer in {{0, 1, 2}}, got {v!r}"
        return None

    def check_text(name, v):
        if not isinstance(v, str) or not v.strip():
            return f"{name} must be nonempty text"
        return None

    if kind == "short_reason":
        required = {"economic_status", "reasoning"}
    elif kind == "long_reason":
        required = {"analysis", "economic_status", "reasoning"}
    elif kind == "reflect":
        required = {"wealth_guesses", "trust_levels", "reflection_text"}
    elif kind == "candidates":
        required = {"statements"}
    else:
        return f"unknown kind {kind!r}"

    keys = set(obj)
    if keys != required:
        extra = keys - required
        missing = required - keys
        parts = []
        if missing:
            parts.append(f"missing keys {sorted(missing)}")
        if extra:
            parts.append(f"extra keys {sorted(extra)}")
        return "; ".join(parts)

    if kind in ("short_reason", "long_reason"):
        err = check_status(obj["economic_status"])
        if err:
            return err
        err = check_text("reasoning", obj["reasoning"])
        if err:
            return err
        if kind == "long_reason":
            err = check_text("analysis", obj["analysis"])
            if err:
                return err
        return None

    if kind == "reflect":
        guesses = obj["wealth_guesses"]
        trust = obj["trust_levels"]
        if not isinstance(guesses, list) or len(guesses) != n_households:
            return f"wealth_guesses must be a list of exactly {n_households} elements"
        for v in guesses:
            if not _is_int(v) or v not in (0, 1, 2):
                return f"wealth_guesses values must be integers in {{0, 1, 2}}, got {v!r}"
        if not isinstance(trust, list) or len(trust) != n_households:
            return f"trust_levels must be a list of exactly {n_households} elements"
        for v in trust:
            if not _is_int(v) or not (0 <= v <= 10):
                return f"trust_levels values must be integers in [0, 10], got {v!r}"
        return check_text("reflection_text", obj["reflection_text"])

    stmts = obj["statements"]
    if not isinstance(stmts, list) or len(stmts) != 3:
        return "statements must be a list of exactly 3 entries"
    for s in stmts:
        if not isinstance(s, str) or not s.strip():
            return "statements must be nonempty text"
    return None


def extract_object(raw: str) -> dict:
    """Lenient extraction: drop code fences, parse the first balanced
    JSON object found in the text."""
    text = raw.strip()
    if "```" in text:
        # keep whatever sits between the first pair of fences
        first = text.index("```")
        rest = text[first + 3 :]
        newline = rest.find("\n")
        if rest[:newline].strip().lower() in ("json", ""):  # language tag line
            rest = rest[newline + 1 :]
        close = rest.find("```")
        if close != -1:
            text = rest[:close].strip()
        else:
            text = rest.strip()
    start = text.find("{")
    if start == -1:
        raise BackendFormatError("no JSON object found", raw=raw)
    depth = 0
    in_string = False
    escaped = False
    for k in range(start, len(text)):
        ch = text[k]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                snippet = text[start : k + 1]
                try:
                    return json.loads(snippet)
                except json.JSONDecodeError as exc:
                    raise BackendFormatError(f"malformed JSON: {exc}", raw=raw) from exc
    raise BackendFormatError("unbalanced JSON object", raw=raw)


def parse_lenient(raw: str, kind: str, n_households: int):
    """Extract and validate a raw reply; news kinds pass through as text."""
    if kind in NEWS_KINDS:
        text = raw.strip()
        err = validate_response(kind, text, n_households)
        if err:
            raise BackendFormatError(err, raw=raw)
        return text
    obj = extract_object(raw)
    err = validate_response(kind, obj, n_households)
    if err:
        raise BackendFormatError(err, raw=raw)
    return obj


class AuditLog:
    """Append-only line-delimited JSON log; safe for concurrent writers."""

    def __init__(self, path: str | None):
        self.path = path
        self._lock = threading.Lock()
        if path:
            directory = os.path.dirname(path)
            if directory:
                os.makedirs(directory, exist_ok=True)

    def record(self, entry: dict) -> None:
        if not self.path:
            return
        line = json.dumps(entry, sort_keys=True)
        with self._lock:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")


def rank_quantiles(values) -> np.ndarray:
    """Quantile of each entry as rank/N with stable tie ordering."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    q = np.empty(arr.size)
    q[order] = np.arange(arr.size, dtype=np.float64) / arr.size
    return q


def status_from_quantile(q: float) -> int:
    """Bottom 30% of wealth reads conditions as bad, top 20% as good."""
    if q < 0.30:
        return 0
    if q >= 0.80:
        return 2
    return 1


def guess_from_quantile(q: float) -> int:
    """Belief rule: top decile rich, bottom half poor, middle medium."""
    if q >= 0.9:
        return 2
    if q < 0.5:
        return 0
    return 1


def _pct(prev: float, now: float) -> float:
    return 100.0 * (now - prev) / max(abs(prev), 1e-8)


class ScriptedBackend:
    """Deterministic offline stand-in emitting schema-valid responses.

    All outputs are fixed functions of the request's numeric context and
    the backend seed, so repeated calls are byte-identical.
    """

    name = "scripted"

    def __init__(self, n_households: int, seed: int = 0, audit: AuditLog | None = None):
        self.n_households = n_households
        self.seed = int(seed)
        self._key = self.seed.to_bytes(8, "little", signed=False)
        self.audit = audit or AuditLog(None)

    def trust_value(self, agent_id: int, other_id: int) -> int:
        pair = f"{agent_id}:{other_id}".encode()
        digest = hashlib.blake2b(pair, key=self._key, digest_size=8)
        return 7 + int.from_bytes(digest.digest(), "little") % 4

    def complete(self, request: PromptRequest):
        t0 = time.monotonic()
        payload = self._respond(request)
        err = validate_response(request.kind, payload, self.n_households)
        if err:
            raise BackendFormatError(f"scripted backend produced invalid output: {err}")
        self.audit.record(
            {
                "period": request.period,
                "agent": request.agent_id,
                "kind": request.kind,
                "backend": self.name,
                "ok": True,
                "latency_ms": round(1000.0 * (time.monotonic() - t0), 3),
            }
        )
        return payload

    def _respond(self, request: PromptRequest):
        ctx = request.context
        kind = request.kind
        gini_now = float(ctx.get("gini_now", 0.0))
        gdp_pct = _pct(float(ctx.get("gdp_prev", 0.0)), float(ctx.get("gdp_now", 0.0)))
        welfare_delta = float(ctx.get("welfare_now", 0.0)) - float(ctx.get("welfare_prev", 0.0))

        if kind == "long_news":
            window = int(ctx.get("window", 0))
            wage_pct = _pct(float(ctx.get("wage_prev", 0.0)), float(ctx.get("wage_now", 0.0)))
            rich_pct = _pct(
                float(ctx.get("rich_wealth_prev", 0.0)), float(ctx.get("rich_wealth_now", 0.0))
            )
            poor_pct = _pct(
                float(ctx.get("poor_wealth_prev", 0.0)), float(ctx.get("poor_wealth_now", 0.0))
            )
            return (
                f"Over the last {window} years the wage changed {wage_pct:+.1f}%, "
                f"top-decile wealth changed {rich_pct:+.1f}%, "
                f"and bottom-half wealth changed {poor_pct:+.1f}%."
            )
        if kind == "short_news":
            name = str(ctx.get("max_change_name", "wage"))
            pct = 100.0 * float(ctx.get("max_change", 0.0))
            return f"Sudden move this year: {name} changed {pct:+.1f}%."

        q = float(ctx.get("wealth_quantile", 0.5))
        status = status_from_quantile(q)
        word = STATUS_WORDS[status]

        if kind == "short_reason":
            return {
                "economic_status": status,
                "reasoning": (
                    f"GDP per capita changed {gdp_pct:+.1f}% and the Gini index is {gini_now:.3f}. "
                    f"With wealth near the {100.0 * q:.0f}th percentile, conditions look {word}; "
                    "tune the savings rate and working hours to match."
                ),
            }
        if kind == "long_reason":
            return {
                "analysis": (
                    f"Across the window, GDP per capita changed {gdp_pct:+.1f}%, welfare moved "
                    f"{welfare_delta:+.2f}, and inequality stands at {gini_now:.3f}."
                ),
                "economic_status": status,
                "reasoning": (
                    f"Conditions look {word} from the {100.0 * q:.0f}th wealth percentile; "
                    "favor steady savings and moderate hours over abrupt shifts."
                ),
            }
        if kind == "candidates":
            tier = guess_from_quantile(q)
            return {"statements": list(PHRASE_BANK[tier])}
        if kind == "reflect":
            speaker_q = [float(v) for v in ctx["speaker_quantiles"]]
            guesses = [guess_from_quantile(v) for v in speaker_q]
            trust = [self.trust_value(request.agent_id, j) for j in range(len(speaker_q))]
            n_rich = sum(1 for g in guesses if g == 2)
            n_poor = sum(1 for g in guesses if g == 0)
            return {
                "wealth_guesses": guesses,
                "trust_levels": trust,
                "reflection_text": (
                    f"The statements suggest {n_rich} wealthy and {n_poor} struggling households; "
                    "I will weight their advice by trust and keep my own plan anchored to my budget."
                ),
            }
        raise ValueError(f"unknown kind {kind!r}")


class RemoteBackend:
    """Chat-completions client with retries and optional scripted fallback.

    Endpoint, model, and key come from arguments or the LAMP_LLM_* env
    vars. Transport failures retry twice with backoff; one format retry
    appends a reminder before giving up or falling back.
    """

    name = "remote"

    def __init__(
        self,
        n_households: int,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        temperature: float = 0.0,
        timeout: float = 60.0,
        max_in_flight: int = 4,
        fallback_to_scripted: bool = False,
        scripted_seed: int = 0,
        audit: AuditLog | None = None,
        backoffs: tuple[float, ...] = (0.5, 2.0),
    ):
        self.n_households = n_households
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT, "")
        self.model = model or os.environ.get(ENV_MODEL, "")
        self.api_key = api_key or os.environ.get(ENV_API_KEY)
        if not self.endpoint or not self.model:
            raise ValueError(
                f"remote backend needs an endpoint and model; set {ENV_ENDPOINT} and {ENV_MODEL}"
            )
        self.temperature = temperature
        self.timeout = timeout
        self.backoffs = backoffs
        self._gate = threading.Semaphore(max_in_flight)
        self.fallback = (
            ScriptedBackend(n_households, seed=scripted_seed, audit=AuditLog(None))
            if fallback_to_scripted
            else None
        )
        self.audit = audit or AuditLog(None)

    def _post(self, messages: list[dict]) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {"model": self.model, "messages": messages, "temperature": self.temperature}
        last_exc: Exception | None = None
        for attempt in range(1 + len(self.backoffs)):
            if attempt > 0:
                time.sleep(self.backoffs[attempt - 1])
            try:
                with self._gate:
                    resp = requests.post(
                        self.endpoint, json=body, headers=headers, timeout=self.timeout
                    )
                resp.raise_for_status()
                data = resp.json()
                return data["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - retried, then surfaced
                last_exc = exc
        raise TransportError(f"remote backend unreachable: {last_exc}") from last_exc

    def complete(self, request: PromptRequest):
        t0 = time.monotonic()
        messages = [{"role": "user", "content": request.prompt}]
        error: str | None = None
        payload = None
        try:
            raw = self._post(messages)
            try:
                payload = parse_lenient(raw, request.kind, self.n_households)
            except BackendFormatError as exc:
                # one format retry with an explicit reminder
                messages = messages + [
                    {"role": "assistant", "content": raw},
                    {"role": "user", "content": FORMAT_REMINDER},
                ]
                raw2 = self._post(messages)
                try:
                    payload = parse_lenient(raw2, request.kind, self.n_households)
                except BackendFormatError as exc2:
                    error = str(exc2)
        except TransportError as exc:
            error = str(exc)

        latency = round(1000.0 * (time.monotonic() - t0), 3)
        entry = {
            "period": request.period,
            "agent": request.agent_id,
            "kind": request.kind,
            "backend": self.name,
            "ok": error is None,
            "latency_ms": latency,
        }
        if error is not None:
            entry["error"] = error
        if error is not None and self.fallback is not None:
            entry["fallback"] = "scripted"
            self.audit.record(entry)
            return self.fallback.complete(request)
        self.audit.record(entry)
        if error is not None:
            raise BackendFormatError(error)
        return payload


def make_backend(
    name: str,
    n_households: int,
    seed: int = 0,
    audit: AuditLog | None = None,
    fallback_to_scripted: bool = False,
):
    if name == "scripted":
        return ScriptedBackend(n_households, seed=seed, audit=audit)
    if name == "remote":
        return RemoteBackend(
            n_households,
            audit=audit,
            fallback_to_scripted=fallback_to_scripted,
            scripted_seed=seed,
        )
    raise ValueError(f"unknown backend {name!r}")
