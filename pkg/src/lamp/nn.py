"""Minimal dense networks with hand-derived reverse-mode gradients.

Actors and critics here are small multilayer perceptrons in float64.
Forward passes cache layer activations; backward passes return both
parameter gradients and the gradient with respect to the input batch,
which the actor update needs to push value gradients through chosen
actions. Optimization is Adam; target networks track online ones by
Polyak averaging.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class MLPParams:
    """Weights and biases per layer, plus the output nonlinearity."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    out_tanh: bool = False

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "MLPParams":
        return MLPParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.out_tanh,
        )


def mlp_init(sizes: list[int], rng: np.random.Generator, out_tanh: bool = False) -> MLPParams:
    """Uniform fan-in initialization, matching common torch defaults."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, (fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, fan_out))
    return MLPParams(weights, biases, out_tanh)


def mlp_forward(params: MLPParams, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Tanh hidden layers; output layer linear or tanh. Returns (y, cache)."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    cache = [h]
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        h = np.tanh(z) if (k < last or params.out_tanh) else z
        cache.append(h)
    return h, cache


def mlp_backward(
    params: MLPParams, cache: list[np.ndarray], grad_out: np.ndarray
) -> tuple[MLPParams, np.ndarray]:
    """Backprop grad_out through the cached forward pass.

    Returns gradients in MLPParams form plus the gradient wrt the input.
    """
    g = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
    last = len(params.weights) - 1
    gw = [None] * len(params.weights)
    gb = [None] * len(params.biases)
    for k in range(last, -1, -1):
        h_out = cache[k + 1]
        if k < last or params.out_tanh:
            g = g * (1.0 - h_out**2)  # tanh'(z) = 1 - tanh(z)^2
        h_in = cache[k]
        gw[k] = h_in.T @ g
        gb[k] = g.sum(axis=0)
        g = g @ params.weights[k].T
    return MLPParams(gw, gb, params.out_tanh), g


@dataclass
class Adam:
    """Adam over a flat list of parameter arrays."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def polyak_update(target: list[np.ndarray], online: list[np.ndarray], tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, in place."""
    if tau == 1.0:
        for t_arr, o_arr in zip(target, online):
            np.copyto(t_arr, o_arr)
        return
    for t_arr, o_arr in zip(target, online):
        t_arr *= 1.0 - tau
        t_arr += tau * o_arr


def save_npz(path: str, tree: dict[str, list[np.ndarray]]) -> None:
    """Persist named lists of arrays; keys become 'name.index'."""
    flat = {}
    for name, arrays in tree.items():
        for k, arr in enumerate(arrays):
            flat[f"{name}.{k}"] = arr
    np.savez(path, **flat)


def load_npz(path: str) -> dict[str, list[np.ndarray]]:
    data = np.load(path)
    tree: dict[str, list] = {}
    for key in data.files:
        name, idx = key.rsplit(".", 1)
        tree.setdefault(name, []).append((int(idx), data[key]))
    return {name: [arr for _, arr in sorted(items)] for name, items in tree.items()}
