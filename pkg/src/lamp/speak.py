"""Candidate statements, attention-based selection, broadcast, reflection.

At every long-term checkpoint each agent asks the backend for three
candidate public statements, scores them with a small attention selector
(a learned query against key-projected candidate embeddings), samples one
to broadcast, and finally reflects over everyone's statements to produce
wealth beliefs, trust levels, and a reflection text.

The selector is randomly initialized and fixed by default; an optional
REINFORCE step trains it on episode return when explicitly enabled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lamp.backend import PromptRequest, fill_template, load_template
from lamp.think import RECENT_LONG_SPAN, STATEMENTS_SPAN, ReasoningRecord

D_K_DEFAULT = 16


@dataclass
class StatementSet:
    """One agent's three candidates plus the selection outcome."""

    agent_id: int
    candidates: list[str]
    selected_index: int
    probs: np.ndarray

    def __post_init__(self):
        if len(self.candidates) != 3:
            raise ValueError(f"exactly 3 candidates required, got {len(self.candidates)}")
        if not (0 <= self.selected_index < 3):
            raise ValueError(f"selected index out of range: {self.selected_index}")
        if abs(float(np.sum(self.probs)) - 1.0) > 1e-9 or np.any(self.probs < 0.0):
            raise ValueError("selection probabilities must form a distribution")

    @property
    def selected(self) -> str:
        return self.candidates[self.selected_index]


@dataclass(frozen=True)
class ReflectionResult:
    """Beliefs about every household, trust per household, and the
    agent's own reflection text."""

    agent_id: int
    period: int
    wealth_guesses: list[int]
    trust_levels: list[int]
    text: str


@dataclass
class SelectorParams:
    """Attention scorer: key projection plus a learned query vector."""

    key_matrix: np.ndarray  # (D_E, d_k)
    query: np.ndarray  # (d_k,)
    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")

    @classmethod
    def init(cls, d_e: int, rng: np.random.Generator, d_k: int = D_K_DEFAULT, temperature: float = 1.0):
        bound = 1.0 / np.sqrt(d_e)
        return cls(
            key_matrix=rng.uniform(-bound, bound, (d_e, d_k)),
            query=rng.uniform(-1.0, 1.0, d_k),
            temperature=temperature,
        )

    def arrays(self) -> list[np.ndarray]:
        return [self.key_matrix, self.query]


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - np.max(scores)
    exp = np.exp(shifted)
    return exp / np.sum(exp)


def selection_probs(candidate_vecs: np.ndarray, selector: SelectorParams) -> np.ndarray:
    """Scaled dot-product scores -> softmax distribution over candidates."""
    keys = candidate_vecs @ selector.key_matrix  # (3, d_k)
    scores = keys @ selector.query / np.sqrt(selector.key_matrix.shape[1])
    return softmax(scores / selector.temperature)


def select_statement(
    candidates: list[str],
    selector: SelectorParams,
    encoder,
    rng: np.random.Generator,
) -> tuple[int, np.ndarray, np.ndarray]:
    """Sample one of three candidates; returns (index, probs, embeddings)."""
    if len(candidates) != 3:
        raise ValueError(f"exactly 3 candidates required, got {len(candidates)}")
    vecs = np.stack([encoder.encode(text) for text in candidates])
    probs = selection_probs(vecs, selector)
    index = int(rng.choice(3, p=probs))
    return index, probs, vecs


def generate_candidates(
    e: float,
    a: float,
    reasoning: ReasoningRecord,
    wealth_quantile: float,
    agent_id: int,
    period: int,
    backend,
) -> list[str]:
    replacements = {
        "private_observation[0]": f"{e:.4f}",
        "private_observation[1]": f"{a:.4f}",
        "personal_reasoning": reasoning.reasoning,
    }
    prompt = fill_template(load_template("candidates"), replacements)
    request = PromptRequest(
        kind="candidates",
        prompt=prompt,
        agent_id=agent_id,
        period=period,
        context={"wealth_quantile": wealth_quantile},
    )
    out = backend.complete(request)
    return list(out["statements"])


def broadcast(statement_sets: list[StatementSet]) -> list[str]:
    """Selected texts in agent-index order; every agent sees the full list."""
    ordered = sorted(statement_sets, key=lambda s: s.agent_id)
    if [s.agent_id for s in ordered] != list(range(len(ordered))):
        raise ValueError("need exactly one statement set per agent")
    return [s.selected for s in ordered]


def reflect(
    e: float,
    a: float,
    statements: list[str],
    own_reasoning: ReasoningRecord,
    own_statement: str,
    speaker_quantiles: list[float],
    agent_id: int,
    period: int,
    backend,
) -> ReflectionResult:
    """Ask the backend for beliefs and trust over all households."""
    n = len(statements)
    others = [text for j, text in enumerate(statements) if j != agent_id]
    replacements = {
        "private_observation[0]": f"{e:.4f}",
        "private_observation[1]": f"{a:.4f}",
        "personal_reasoning": own_reasoning.reasoning,
        "personal_statement": own_statement,
        STATEMENTS_SPAN: "\n".join(f"- {stmt}" for stmt in others),
        "expected_num": str(n),
    }
    prompt = fill_template(load_template("reflect"), replacements)
    request = PromptRequest(
        kind="reflect",
        prompt=prompt,
        agent_id=agent_id,
        period=period,
        context={"speaker_quantiles": list(speaker_quantiles)},
    )
    out = backend.complete(request)
    return ReflectionResult(
        agent_id=agent_id,
        period=period,
        wealth_guesses=list(out["wealth_guesses"]),
        trust_levels=list(out["trust_levels"]),
        text=out["reflection_text"],
    )


@dataclass
class SelectionEvent:
    """What the REINFORCE update needs about one selection."""

    candidate_vecs: np.ndarray  # (3, D_E)
    probs: np.ndarray
    chosen: int


def reinforce_update(
    selector: SelectorParams,
    events: list[SelectionEvent],
    episode_return: float,
    baseline: float,
    lr: float = 1e-3,
) -> None:
    """One policy-gradient ascent step on the selector parameters.

    For scores s_j = q . (E_j W) / sqrt(d_k), the log-prob gradient of the
    chosen index c is (e_c - probs) backpropagated through the scores.
    """
    if not events:
        return
    advantage = episode_return - baseline
    d_k = selector.key_matrix.shape[1]
    scale = 1.0 / np.sqrt(d_k)
    grad_w = np.zeros_like(selector.key_matrix)
    grad_q = np.zeros_like(selector.query)
    for ev in events:
        probs = selection_probs(ev.candidate_vecs, selector)
        coeff = -probs / selector.temperature
        coeff[ev.chosen] += 1.0 / selector.temperature
        keys = ev.candidate_vecs @ selector.key_matrix
        # d log pi / d q = sum_j coeff_j * k_j * scale
        grad_q += scale * (coeff @ keys)
        # d log pi / d W = sum_j coeff_j * outer(E_j, q) * scale
        grad_w += scale * np.outer(coeff @ ev.candidate_vecs, selector.query)
    step = lr * advantage / len(events)
    selector.key_matrix += step * grad_w
    selector.query += step * grad_q
