"""Centralized-critic, decentralized-actor trainer.

One scalar critic Q(x, a) scores the joint state and joint action, where
x concatenates the global observation with every agent's language
embedding. Each household owns an independent actor mapping its local
observation plus its own embedding to a raw action in [-1, 1]^2. The
critic minimizes mean squared Bellman error against Polyak-averaged
target copies; actors ascend the critic, and their gradient also flows
into the shared text projection P through the stored pre-projection
pooled vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lamp.embed import ProjectionParams, project_normalize_batch, project_normalize_batch_vjp
from lamp.nn import Adam, MLPParams, load_npz, mlp_backward, mlp_forward, mlp_init, polyak_update, save_npz

ACTION_DIM = 2
NOISE_STD = 0.1


@dataclass(frozen=True)
class Dims:
    """Vector layout shared by trainer, buffer, and orchestrator.

    Critic state x = [global | m_0 | ... | m_{n-1}]; the language block is
    empty when d_lang = 0 (numeric-only mode).
    """

    n_agents: int
    obs_dim: int
    global_dim: int
    d_lang: int
    d_e: int

    @property
    def x_dim(self) -> int:
        return self.global_dim + self.n_agents * self.d_lang

    @property
    def joint_dim(self) -> int:
        return self.n_agents * ACTION_DIM

    @property
    def critic_in(self) -> int:
        return self.x_dim + self.joint_dim

    @property
    def actor_in(self) -> int:
        return self.obs_dim + self.d_lang

    def m_slice(self, i: int) -> slice:
        start = self.global_dim + i * self.d_lang
        return slice(start, start + self.d_lang)


@dataclass
class Transition:
    x: np.ndarray
    obs: np.ndarray  # (n_agents, obs_dim)
    actions: np.ndarray  # (n_agents, 2) raw in [-1, 1]
    rewards: np.ndarray  # (n_agents,)
    x_next: np.ndarray
    obs_next: np.ndarray
    done: bool
    pooled: np.ndarray | None = None  # (n_agents, d_e) pre-projection text vectors

    def validate(self, dims: Dims) -> None:
        if self.x.shape != (dims.x_dim,) or self.x_next.shape != (dims.x_dim,):
            raise ValueError("critic state has wrong dimension")
        if self.obs.shape != (dims.n_agents, dims.obs_dim):
            raise ValueError("local observations have wrong shape")
        if self.actions.shape != (dims.n_agents, ACTION_DIM):
            raise ValueError("joint action has wrong shape")
        for arr in (self.x, self.obs, self.actions, self.rewards, self.x_next, self.obs_next):
            if not np.all(np.isfinite(arr)):
                raise ValueError("transition contains non-finite values")


@dataclass
class StackedBatch:
    """Batch arrays stacked once and shared by the critic update and
    every per-agent actor update."""

    x: np.ndarray  # (B, x_dim)
    obs: np.ndarray  # (B, n_agents, obs_dim)
    joint: np.ndarray  # (B, n_agents * 2)
    rewards: np.ndarray  # (B, n_agents)
    x_next: np.ndarray
    obs_next: np.ndarray
    done: np.ndarray  # (B,) 0.0 or 1.0
    pooled: np.ndarray | None  # (B, n_agents, d_e)

    def __len__(self) -> int:
        return self.x.shape[0]


def stack_batch(batch: list[Transition], dims: Dims) -> StackedBatch:
    return StackedBatch(
        x=np.stack([t.x for t in batch]),
        obs=np.stack([t.obs for t in batch]),
        joint=np.stack([t.actions.reshape(dims.joint_dim) for t in batch]),
        rewards=np.stack([t.rewards for t in batch]),
        x_next=np.stack([t.x_next for t in batch]),
        obs_next=np.stack([t.obs_next for t in batch]),
        done=np.array([1.0 if t.done else 0.0 for t in batch]),
        pooled=np.stack([t.pooled for t in batch]) if dims.d_lang > 0 else None,
    )


class ReplayBuffer:
    """Fixed-capacity FIFO ring with uniform sampling."""

    def __init__(self, capacity: int = 1_000_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if batch_size > len(self._items):
            raise ValueError(f"buffer holds {len(self._items)} < batch {batch_size}")
        idx = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[k] for k in idx]

    def items(self) -> list[Transition]:
        return list(self._items)


@dataclass
class Hyper:
    gamma: float = 0.975
    tau: float = 5e-3
    critic_lr: float = 3e-4
    actor_lr: float = 3e-4
    batch_size: int = 256
    warmup_factor: int = 10  # training starts at warmup_factor * batch_size
    hidden: int = 64
    noise_std: float = NOISE_STD

    @property
    def warmup(self) -> int:
        return self.warmup_factor * self.batch_size


@dataclass
class AgentNets:
    dims: Dims
    actors: list[MLPParams]
    actor_targets: list[MLPParams]
    critic: MLPParams
    critic_target: MLPParams
    projection: ProjectionParams | None
    actor_opts: list[Adam] = field(default_factory=list)
    critic_opt: Adam | None = None
    projection_opt: Adam | None = None

    @classmethod
    def init(cls, dims: Dims, rng: np.random.Generator, hyper: Hyper) -> "AgentNets":
        h = hyper.hidden
        actors = [
            mlp_init([dims.actor_in, h, h, ACTION_DIM], rng, out_tanh=True)
            for _ in range(dims.n_agents)
        ]
        critic = mlp_init([dims.critic_in, h, h, 1], rng)
        projection = (
            ProjectionParams.init(dims.d_e, dims.d_lang, rng) if dims.d_lang > 0 else None
        )
        return cls(
            dims=dims,
            actors=actors,
            actor_targets=[a.copy() for a in actors],
            critic=critic,
            critic_target=critic.copy(),
            projection=projection,
            actor_opts=[Adam(lr=hyper.actor_lr) for _ in range(dims.n_agents)],
            critic_opt=Adam(lr=hyper.critic_lr),
            projection_opt=Adam(lr=hyper.actor_lr) if projection is not None else None,
        )

    def save(self, path: str) -> None:
        tree = {"critic": self.critic.arrays(), "critic_target": self.critic_target.arrays()}
        for i, (actor, target) in enumerate(zip(self.actors, self.actor_targets)):
            tree[f"actor_{i}"] = actor.arrays()
            tree[f"actor_target_{i}"] = target.arrays()
        if self.projection is not None:
            tree["projection"] = self.projection.arrays()
        save_npz(path, tree)

    @classmethod
    def load(cls, path: str, dims: Dims, hyper: Hyper) -> "AgentNets":
        tree = load_npz(path)

        def as_mlp(arrays, out_tanh):
            return MLPParams(list(arrays[0::2]), list(arrays[1::2]), out_tanh)

        actors = [as_mlp(tree[f"actor_{i}"], True) for i in range(dims.n_agents)]
        targets = [as_mlp(tree[f"actor_target_{i}"], True) for i in range(dims.n_agents)]
        projection = ProjectionParams(tree["projection"][0]) if "projection" in tree else None
        return cls(
            dims=dims,
            actors=actors,
            actor_targets=targets,
            critic=as_mlp(tree["critic"], False),
            critic_target=as_mlp(tree["critic_target"], False),
            projection=projection,
            actor_opts=[Adam(lr=hyper.actor_lr) for _ in range(dims.n_agents)],
            critic_opt=Adam(lr=hyper.critic_lr),
            projection_opt=Adam(lr=hyper.actor_lr) if projection is not None else None,
        )


def _target_joint_action(nets: AgentNets, sb: StackedBatch) -> np.ndarray:
    dims = nets.dims
    cols = []
    for i in range(dims.n_agents):
        obs_next_i = sb.obs_next[:, i, :]
        if dims.d_lang > 0:
            m_next_i = sb.x_next[:, dims.m_slice(i)]
            actor_in = np.concatenate([obs_next_i, m_next_i], axis=1)
        else:
            actor_in = obs_next_i
        a_i, _ = mlp_forward(nets.actor_targets[i], actor_in)
        cols.append(a_i)
    return np.concatenate(cols, axis=1)


def critic_loss_and_grads(nets: AgentNets, sb: StackedBatch, gamma: float):
    """Mean squared Bellman error and its gradient on the online critic.

    The scalar critic regresses the mean household reward; terminal
    transitions use y = r with no bootstrap term.
    """
    r = sb.rewards.mean(axis=1, keepdims=True)

    a_next = _target_joint_action(nets, sb)
    q_next, _ = mlp_forward(nets.critic_target, np.concatenate([sb.x_next, a_next], axis=1))
    y = r + gamma * (1.0 - sb.done)[:, None] * q_next

    q, cache = mlp_forward(nets.critic, np.concatenate([sb.x, sb.joint], axis=1))
    td = q - y
    loss = float(np.mean(td**2))
    grads, _ = mlp_backward(nets.critic, cache, 2.0 * td / len(sb))
    return loss, grads


def critic_update(nets: AgentNets, sb: StackedBatch, gamma: float) -> float:
    loss, grads = critic_loss_and_grads(nets, sb, gamma)
    if not np.isfinite(loss):
        raise RuntimeError(f"non-finite critic loss {loss}")
    nets.critic_opt.step(nets.critic.arrays(), grads.arrays())
    return loss


def actor_loss_and_grads(nets: AgentNets, sb: StackedBatch, agent_i: int):
    """Negative mean critic value of agent i's replaced action, with
    gradients for the actor and (when language is on) the projection."""
    dims = nets.dims
    obs_i = sb.obs[:, agent_i, :]

    pooled_i = None
    if dims.d_lang > 0:
        pooled_i = sb.pooled[:, agent_i, :]
        m_i = project_normalize_batch(nets.projection, pooled_i)
        actor_in = np.concatenate([obs_i, m_i], axis=1)
    else:
        actor_in = obs_i

    a_i, actor_cache = mlp_forward(nets.actors[agent_i], actor_in)
    joint_new = sb.joint.copy()
    joint_new[:, agent_i * ACTION_DIM : (agent_i + 1) * ACTION_DIM] = a_i

    critic_in = np.concatenate([sb.x, joint_new], axis=1)
    q, critic_cache = mlp_forward(nets.critic, critic_in)
    loss = float(-np.mean(q))

    grad_q = np.full((len(sb), 1), -1.0 / len(sb))
    _, grad_critic_in = mlp_backward(nets.critic, critic_cache, grad_q)
    grad_a_i = grad_critic_in[:, dims.x_dim + agent_i * ACTION_DIM : dims.x_dim + (agent_i + 1) * ACTION_DIM]

    actor_grads, grad_actor_in = mlp_backward(nets.actors[agent_i], actor_cache, grad_a_i)
    proj_grad = None
    if dims.d_lang > 0:
        grad_m = grad_actor_in[:, dims.obs_dim :]
        proj_grad, _ = project_normalize_batch_vjp(nets.projection, pooled_i, grad_m)
    return loss, actor_grads, proj_grad


def actor_update(nets: AgentNets, sb: StackedBatch, agent_i: int) -> float:
    loss, actor_grads, proj_grad = actor_loss_and_grads(nets, sb, agent_i)
    if not np.isfinite(loss):
        raise RuntimeError(f"non-finite actor loss {loss}")
    nets.actor_opts[agent_i].step(nets.actors[agent_i].arrays(), actor_grads.arrays())
    if proj_grad is not None:
        nets.projection_opt.step(nets.projection.arrays(), [proj_grad])
    return loss


@dataclass(frozen=True)
class StepMetrics:
    critic_loss: float
    actor_loss: float  # mean over agents
    actor_losses: tuple


def train_step(nets: AgentNets, buffer: ReplayBuffer, hyper: Hyper, rng: np.random.Generator) -> StepMetrics:
    """One critic update, one actor update per agent, then target tracking."""
    sb = stack_batch(buffer.sample(hyper.batch_size, rng), nets.dims)
    critic_loss = critic_update(nets, sb, hyper.gamma)
    actor_losses = tuple(actor_update(nets, sb, i) for i in range(nets.dims.n_agents))
    polyak_update(nets.critic_target.arrays(), nets.critic.arrays(), hyper.tau)
    for target, online in zip(nets.actor_targets, nets.actors):
        polyak_update(target.arrays(), online.arrays(), hyper.tau)
    return StepMetrics(
        critic_loss=critic_loss,
        actor_loss=float(np.mean(actor_losses)),
        actor_losses=actor_losses,
    )


def act(
    nets: AgentNets,
    agent_i: int,
    obs_i: np.ndarray,
    m_i: np.ndarray | None,
    explore: bool,
    rng: np.random.Generator,
    noise_std: float = NOISE_STD,
) -> np.ndarray:
    """Deterministic actor output with optional clipped Gaussian noise."""
    if m_i is not None and nets.dims.d_lang > 0:
        actor_in = np.concatenate([np.asarray(obs_i), np.asarray(m_i)])
    else:
        actor_in = np.asarray(obs_i)
    out, _ = mlp_forward(nets.actors[agent_i], actor_in)
    action = out[0].copy()
    if explore:
        action = action + rng.normal(0.0, noise_std, size=ACTION_DIM)
    return np.clip(action, -1.0, 1.0)
