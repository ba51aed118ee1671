"""Tests for candidate generation, the attention selector, broadcast, and
reflection."""

import numpy as np
import pytest

from lamp.backend import PHRASE_BANK, BackendFormatError, ScriptedBackend
from lamp.embed import HashingEncoder
from lamp.speak import (
    ReflectionResult,
    SelectionEvent,
    SelectorParams,
    StatementSet,
    broadcast,
    generate_candidates,
    reflect,
    reinforce_update,
    select_statement,
    selection_probs,
)
from lamp.think import ReasoningRecord


class RecordingBackend:
    def __init__(self, inner):
        self.inner = inner
        self.requests = []

    def complete(self, request):
        self.requests.append(request)
        return self.inner.complete(request)


def record(agent_id=0, status=1):
    return ReasoningRecord(
        agent_id=agent_id, period=20, status=status, reasoning="hold the course", news_kind="long"
    )


def test_statement_set_invariants():
    probs = np.array([0.2, 0.3, 0.5])
    s = StatementSet(agent_id=0, candidates=["a", "b", "c"], selected_index=2, probs=probs)
    assert s.selected == "c"
    with pytest.raises(ValueError):
        StatementSet(agent_id=0, candidates=["a", "b"], selected_index=0, probs=np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        StatementSet(agent_id=0, candidates=["a", "b", "c"], selected_index=3, probs=probs)
    with pytest.raises(ValueError):
        StatementSet(
            agent_id=0, candidates=["a", "b", "c"], selected_index=0, probs=np.array([0.9, 0.2, 0.1])
        )


def test_selector_params_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        SelectorParams(key_matrix=rng.normal(size=(8, 4)), query=rng.normal(size=4), temperature=0.0)


def test_identical_candidates_uniform_probs():
    rng = np.random.default_rng(1)
    enc = HashingEncoder(seed=0)
    selector = SelectorParams.init(256, rng)
    idx, probs, vecs = select_statement(["same text"] * 3, selector, enc, rng)
    assert np.max(np.abs(probs - 1.0 / 3.0)) < 1e-9
    assert vecs.shape == (3, 256)


def test_probs_form_distribution_and_equivariance():
    rng = np.random.default_rng(2)
    enc = HashingEncoder(seed=0)
    selector = SelectorParams.init(256, rng)
    cands = ["saving more", "working longer", "spending freely"]
    vecs = np.stack([enc.encode(c) for c in cands])
    probs = selection_probs(vecs, selector)
    assert abs(float(np.sum(probs)) - 1.0) < 1e-9
    assert np.all(probs > 0.0)
    perm = [2, 0, 1]
    probs_perm = selection_probs(vecs[perm], selector)
    assert np.allclose(probs_perm, probs[perm], atol=1e-12)


def test_low_temperature_selects_argmax():
    rng = np.random.default_rng(3)
    enc = HashingEncoder(seed=0)
    base = SelectorParams.init(256, rng)
    cands = ["saving more", "working longer", "spending freely"]
    vecs = np.stack([enc.encode(c) for c in cands])
    warm = selection_probs(vecs, base)
    cold = SelectorParams(base.key_matrix, base.query, temperature=1e-5)
    probs = selection_probs(vecs, cold)
    assert probs[int(np.argmax(warm))] > 1.0 - 1e-9


def test_selection_frequency_matches_probs():
    rng = np.random.default_rng(4)
    enc = HashingEncoder(seed=0)
    selector = SelectorParams.init(256, rng)
    cands = ["saving more", "working longer", "spending freely"]
    vecs = np.stack([enc.encode(c) for c in cands])
    probs = selection_probs(vecs, selector)
    n = 10_000
    counts = np.zeros(3)
    for _ in range(n):
        idx, _, _ = select_statement(cands, selector, enc, rng)
        counts[idx] += 1
    freqs = counts / n
    sigma = np.sqrt(probs * (1.0 - probs) / n)
    assert np.all(np.abs(freqs - probs) < 3.0 * sigma + 1e-12)


def test_select_requires_three():
    rng = np.random.default_rng(5)
    enc = HashingEncoder(seed=0)
    selector = SelectorParams.init(256, rng)
    with pytest.raises(ValueError):
        select_statement(["a", "b"], selector, enc, rng)


def test_generate_candidates_phrase_bank():
    backend = ScriptedBackend(n_households=10, seed=0)
    # quantile 0.6 sits in the middle tier
    got = generate_candidates(1.0, 5.0, record(), 0.6, agent_id=2, period=20, backend=backend)
    assert got == list(PHRASE_BANK[1])
    again = generate_candidates(1.0, 5.0, record(), 0.6, agent_id=2, period=20, backend=backend)
    assert again == got
    low = generate_candidates(1.0, 0.5, record(), 0.2, agent_id=2, period=20, backend=backend)
    assert low == list(PHRASE_BANK[0])
    high = generate_candidates(1.0, 50.0, record(), 0.95, agent_id=2, period=20, backend=backend)
    assert high == list(PHRASE_BANK[2])


def test_generate_candidates_prompt_slots():
    backend = RecordingBackend(ScriptedBackend(n_households=10, seed=0))
    generate_candidates(1.25, 3.5, record(), 0.6, agent_id=0, period=20, backend=backend)
    prompt = backend.requests[0].prompt
    assert "1.2500" in prompt and "3.5000" in prompt
    assert "hold the course" in prompt


def test_broadcast_order_and_arity():
    sets = []
    probs = np.array([1.0, 0.0, 0.0])
    for agent in (2, 0, 1):
        sets.append(
            StatementSet(
                agent_id=agent,
                candidates=[f"a{agent}", f"b{agent}", f"c{agent}"],
                selected_index=0,
                probs=probs,
            )
        )
    assert broadcast(sets) == ["a0", "a1", "a2"]
    with pytest.raises(ValueError):
        broadcast(sets[:2])


def test_reflect_scripted_composition():
    backend = ScriptedBackend(n_households=10, seed=0)
    statements = [f"statement {j}" for j in range(10)]
    quantiles = [j / 10.0 for j in range(10)]
    out = reflect(
        1.0, 5.0, statements, record(), statements[3], quantiles, agent_id=3, period=20, backend=backend
    )
    assert isinstance(out, ReflectionResult)
    assert out.wealth_guesses.count(0) == 5
    assert out.wealth_guesses.count(1) == 4
    assert out.wealth_guesses.count(2) == 1
    assert all(7 <= t <= 10 for t in out.trust_levels)
    assert len(out.trust_levels) == 10
    assert out.text.strip()
    again = reflect(
        1.0, 5.0, statements, record(), statements[3], quantiles, agent_id=3, period=20, backend=backend
    )
    assert again == out


def test_reflect_prompt_contains_other_statements():
    backend = RecordingBackend(ScriptedBackend(n_households=10, seed=0))
    statements = [f"statement {j}" for j in range(10)]
    quantiles = [j / 10.0 for j in range(10)]
    reflect(1.0, 5.0, statements, record(), statements[3], quantiles, agent_id=3, period=20, backend=backend)
    prompt = backend.requests[0].prompt
    for j in range(10):
        if j == 3:
            continue
        assert f"- statement {j}" in prompt
    assert "Public Personal Statement: statement 3" in prompt
    assert "exactly 10 elements" in prompt


def test_reflect_rejects_wrong_arity():
    class ElevenBackend:
        def complete(self, request):
            return {
                "wealth_guesses": [0] * 11,
                "trust_levels": [7] * 11,
                "reflection_text": "too many",
            }

    backend = ScriptedBackend(n_households=10, seed=0)

    class Invalidating:
        # run the scripted validation path over the fake payload
        def complete(self, request):
            from lamp.backend import validate_response

            payload = ElevenBackend().complete(request)
            err = validate_response(request.kind, payload, 10)
            if err:
                raise BackendFormatError(err)
            return payload

    statements = [f"s{j}" for j in range(10)]
    quantiles = [j / 10.0 for j in range(10)]
    with pytest.raises(BackendFormatError):
        reflect(1.0, 5.0, statements, record(), "s3", quantiles, agent_id=3, period=20, backend=Invalidating())
    del backend


def test_reinforce_gradient_matches_finite_differences():
    rng = np.random.default_rng(6)
    enc = HashingEncoder(seed=1)
    vecs = np.stack([enc.encode(t) for t in ("one text", "two text", "three text")])
    selector = SelectorParams.init(256, rng, d_k=6)
    chosen = 1

    def log_prob(sel):
        return float(np.log(selection_probs(vecs, sel)[chosen]))

    base_w = selector.key_matrix.copy()
    base_q = selector.query.copy()
    # lr=1, advantage=1: the update adds exactly the log-prob gradient
    reinforce_update(selector, [SelectionEvent(vecs, None, chosen)], 1.0, 0.0, lr=1.0)
    grad_w = selector.key_matrix - base_w
    grad_q = selector.query - base_q

    step = 1e-6
    for _ in range(20):
        i = int(rng.integers(0, base_w.shape[0]))
        j = int(rng.integers(0, base_w.shape[1]))
        probe = SelectorParams(base_w.copy(), base_q.copy())
        probe.key_matrix[i, j] += step
        up = log_prob(probe)
        probe.key_matrix[i, j] -= 2 * step
        down = log_prob(probe)
        num = (up - down) / (2 * step)
        assert abs(grad_w[i, j] - num) < 1e-5
    for j in range(base_q.size):
        probe = SelectorParams(base_w.copy(), base_q.copy())
        probe.query[j] += step
        up = log_prob(probe)
        probe.query[j] -= 2 * step
        down = log_prob(probe)
        num = (up - down) / (2 * step)
        assert abs(grad_q[j] - num) < 1e-5


def test_reinforce_raises_chosen_probability():
    rng = np.random.default_rng(7)
    enc = HashingEncoder(seed=1)
    vecs = np.stack([enc.encode(t) for t in ("one text", "two text", "three text")])
    selector = SelectorParams.init(256, rng)
    before = selection_probs(vecs, selector)[2]
    for _ in range(50):
        reinforce_update(selector, [SelectionEvent(vecs, None, 2)], 1.0, 0.0, lr=0.05)
    after = selection_probs(vecs, selector)[2]
    assert after > before
    # empty event list is a no-op
    snap = selector.key_matrix.copy()
    reinforce_update(selector, [], 1.0, 0.0, lr=0.05)
    assert np.array_equal(selector.key_matrix, snap)
