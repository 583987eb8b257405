"""Intervention recommendation: tabular Q-learning over (regime, level)
states with reward -delta_index - lambda*cost, plus a value-iteration oracle
for exact optimality checks on small frozen MDPs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .classifier import RiskLevel, threshold_classify
from .core import (
    Collapse,
    ConfigError,
    DomainError,
    KernelParams,
    Projection,
    Regime,
    RiskState,
    CiimOutput,
    eval_ciim,
    normalize_score,
)

QTABLE_FORMAT_VERSION = 1
CATALOG_FORMAT_VERSION = 1

EFFECT_FIELDS = ("threat", "vulnerability", "exposure", "resilience")

REGIME_ORDER = (Regime.NORMAL, Regime.FRAGILE, Regime.COLLAPSE)

# Collapse has no numeric index; inside the reward channel only, it is
# pinned to the top of the [0, 10] display scale so "collapse is worst"
# stays an ordering fact without smoothing the engine's own output.
COLLAPSE_PINNED_SCORE = 10.0


@dataclass(frozen=True)
class Intervention:
    """A catalogued action: organizational cost plus additive effect deltas
    on the kernel variables (applied then clamped)."""

    id: str
    cost: float = 0.0
    effects: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cost < 0:
            raise ConfigError(f"intervention cost must be >= 0, got {self.cost!r}")
        for key, value in self.effects.items():
            if key not in EFFECT_FIELDS:
                raise ConfigError(f"unknown effect field {key!r}")
            if not np.isfinite(value):
                raise ConfigError(f"effect delta for {key!r} must be finite")


DEFAULT_CATALOG = [
    Intervention(id="observe", cost=0.0, effects={}),
    Intervention(id="patch", cost=0.2, effects={"vulnerability": -0.15}),
    Intervention(id="harden", cost=0.3, effects={"resilience": 0.10}),
    Intervention(id="isolate", cost=0.5, effects={"exposure": -0.30, "threat": -0.05}),
]


@dataclass(frozen=True)
class AgentConfig:
    lam: float = 1.0
    learning_rate: float = 0.1
    discount: float = 0.9
    epsilon: float = 0.2
    episodes: int = 10_000
    steps_per_episode: int = 25
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam!r}")
        if not (0.0 <= self.discount < 1.0):
            raise ConfigError(f"discount must be in [0, 1), got {self.discount!r}")
        if not (0.0 <= self.epsilon <= 1.0):
            raise ConfigError(f"epsilon must be in [0, 1], got {self.epsilon!r}")


N_DISCRETE_STATES = len(REGIME_ORDER) * len(RiskLevel)  # 12


def discrete_state_index(regime: Regime, level: RiskLevel) -> int:
    return REGIME_ORDER.index(regime) * len(RiskLevel) + int(level)


def discretize(state: RiskState, params: KernelParams) -> int:
    """Map a full state to one of the 12 (regime, level) cells using the
    kernel and the threshold oracle."""
    output = eval_ciim(state, params=params)
    if isinstance(output, Collapse):
        return discrete_state_index(Regime.COLLAPSE, RiskLevel.CRITICAL)
    level = threshold_classify(normalize_score(output.value), output.regime)
    return discrete_state_index(output.regime, level)


def pinned_score(output: CiimOutput) -> float:
    """Normalized score with Collapse pinned at the top of the scale.
    Reward-channel only; never used for display or regime logic."""
    if isinstance(output, Collapse):
        return COLLAPSE_PINNED_SCORE
    return normalize_score(output.value)


def reward(delta_ciim: float, cost: float, lam: float) -> float:
    """Reward = -delta_ciim - lambda*cost."""
    return -delta_ciim - lam * cost


def apply_effects(state: RiskState, intervention: Intervention, r_floor: float) -> RiskState:
    """Additive effect deltas, then clamp: unit interval for T/V/E and
    [r_floor, 1] for resilience."""

    def unit(value: float) -> float:
        return min(max(value, 0.0), 1.0)

    eff = intervention.effects
    return replace(
        state,
        threat=unit(state.threat + eff.get("threat", 0.0)),
        vulnerability=unit(state.vulnerability + eff.get("vulnerability", 0.0)),
        exposure=unit(state.exposure + eff.get("exposure", 0.0)),
        resilience=min(max(state.resilience + eff.get("resilience", 0.0), r_floor), 1.0),
    )


@dataclass
class QTable:
    """Dense (12, n_actions) value table plus visit counts."""

    q: np.ndarray
    counts: np.ndarray
    action_ids: list[str]

    @classmethod
    def zeros(cls, catalog: list[Intervention]) -> "QTable":
        if not catalog:
            raise ConfigError("intervention catalog must not be empty")
        n = len(catalog)
        return cls(
            q=np.zeros((N_DISCRETE_STATES, n)),
            counts=np.zeros((N_DISCRETE_STATES, n), dtype=np.int64),
            action_ids=[a.id for a in catalog],
        )

    def action_index(self, action_id: str) -> int:
        try:
            return self.action_ids.index(action_id)
        except ValueError:
            raise DomainError(f"unknown action {action_id!r}") from None

    def to_json(self) -> str:
        doc = {
            "format": "q-table",
            "version": QTABLE_FORMAT_VERSION,
            "n_states": int(self.q.shape[0]),
            "action_ids": self.action_ids,
            "q": self.q.ravel().tolist(),
            "counts": self.counts.ravel().tolist(),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        doc = json.loads(text)
        if doc.get("format") != "q-table":
            raise DomainError(f"not a q-table document: {doc.get('format')!r}")
        if doc.get("version") != QTABLE_FORMAT_VERSION:
            raise DomainError(f"unsupported q-table version {doc.get('version')!r}")
        n_actions = len(doc["action_ids"])
        shape = (int(doc["n_states"]), n_actions)
        return cls(
            q=np.array(doc["q"], dtype=np.float64).reshape(shape),
            counts=np.array(doc["counts"], dtype=np.int64).reshape(shape),
            action_ids=list(doc["action_ids"]),
        )


def q_update(table: QTable, s: int, a: int, r: float, s_next: int, config: AgentConfig) -> QTable:
    """One Q-learning update in place; only entry (s, a) changes."""
    if not (0 <= s < table.q.shape[0]) or not (0 <= s_next < table.q.shape[0]):
        raise DomainError(f"state index out of range: {s}, {s_next}")
    if not (0 <= a < table.q.shape[1]):
        raise DomainError(f"action index out of range: {a}")
    td = r + config.discount * float(np.max(table.q[s_next])) - table.q[s, a]
    table.q[s, a] += config.learning_rate * td
    table.counts[s, a] += 1
    return table


@dataclass(frozen=True, eq=False)
class FiniteMdp:
    """Deterministic finite MDP: per-state score, per-action cost, and a
    transition table. Reward for (s, a) is -(score[s'] - score[s]) - lam*cost[a]."""

    state_names: tuple[str, ...]
    action_ids: tuple[str, ...]
    action_costs: tuple[float, ...]
    transitions: np.ndarray  # (S, A) int successor
    scores: np.ndarray       # (S,)
    lam: float = 1.0

    def __eq__(self, other):
        if not isinstance(other, FiniteMdp):
            return NotImplemented
        return (
            self.state_names == other.state_names
            and self.action_ids == other.action_ids
            and self.action_costs == other.action_costs
            and np.array_equal(self.transitions, other.transitions)
            and np.array_equal(self.scores, other.scores)
            and self.lam == other.lam
        )

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def n_actions(self) -> int:
        return len(self.action_ids)

    def reward_matrix(self) -> np.ndarray:
        out = np.zeros((self.n_states, self.n_actions))
        for s in range(self.n_states):
            for a in range(self.n_actions):
                s2 = int(self.transitions[s, a])
                out[s, a] = reward(
                    float(self.scores[s2] - self.scores[s]),
                    self.action_costs[a],
                    self.lam,
                )
        return out

    def with_lambda(self, lam: float) -> "FiniteMdp":
        return replace(self, lam=lam)

    def to_json(self) -> str:
        doc = {
            "format": "finite-mdp",
            "version": 1,
            "state_names": list(self.state_names),
            "action_ids": list(self.action_ids),
            "action_costs": list(self.action_costs),
            "transitions": self.transitions.tolist(),
            "scores": self.scores.tolist(),
            "lambda": self.lam,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FiniteMdp":
        doc = json.loads(text)
        if doc.get("format") != "finite-mdp":
            raise DomainError(f"not a finite-mdp document: {doc.get('format')!r}")
        return cls(
            state_names=tuple(doc["state_names"]),
            action_ids=tuple(doc["action_ids"]),
            action_costs=tuple(float(c) for c in doc["action_costs"]),
            transitions=np.array(doc["transitions"], dtype=np.int64),
            scores=np.array(doc["scores"], dtype=np.float64),
            lam=float(doc["lambda"]),
        )


def frozen_test_mdp(lam: float = 1.0) -> FiniteMdp:
    """Three-state deterministic fixture used for optimality checks.

    LOW is absorbing; drifting HIGH decays toward NEAR_COLLAPSE; "harden"
    (cost 0.1) pulls HIGH back to LOW and NEAR_COLLAPSE back to HIGH.
    """
    return FiniteMdp(
        state_names=("LOW", "HIGH", "NEAR_COLLAPSE"),
        action_ids=("observe", "harden"),
        action_costs=(0.0, 0.1),
        transitions=np.array([
            [0, 0],  # LOW: stays put either way
            [2, 0],  # HIGH: observe decays, harden recovers
            [2, 1],  # NEAR_COLLAPSE: observe stays, harden recovers
        ], dtype=np.int64),
        scores=np.array([1.0, 6.0, 9.0]),
        lam=lam,
    )


def value_iteration(mdp: FiniteMdp, gamma: float, tol: float = 1e-12, max_iter: int = 100_000):
    """Exact-ish Q* by successive approximation; independent of the
    Q-learning path (plain loops, no shared kernel).

    Returns (q_star, greedy_policy) with ties to the lowest action index.
    """
    rewards = mdp.reward_matrix()
    q = np.zeros((mdp.n_states, mdp.n_actions))
    for _ in range(max_iter):
        v = q.max(axis=1)
        q_new = np.empty_like(q)
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                q_new[s, a] = rewards[s, a] + gamma * v[int(mdp.transitions[s, a])]
        if np.max(np.abs(q_new - q)) < tol:
            q = q_new
            break
        q = q_new
    policy = np.argmax(q, axis=1)
    return q, policy


def train_agent_mdp(mdp: FiniteMdp, config: AgentConfig) -> np.ndarray:
    """Seeded epsilon-greedy Q-learning on a finite MDP; returns the raw
    (S, A) value array."""
    from .kernels import q_learn_tabular

    rng = np.random.default_rng(config.seed)
    total_steps = config.episodes * config.steps_per_episode
    u_start = rng.random(config.episodes)
    u_explore = rng.random(total_steps)
    u_action = rng.random(total_steps)
    q = np.zeros((mdp.n_states, mdp.n_actions))
    q_learn_tabular(
        mdp.transitions, mdp.reward_matrix(), q,
        config.discount, config.learning_rate, config.epsilon,
        config.steps_per_episode, u_start, u_explore, u_action,
    )
    return q


def train_agent(env, catalog: list[Intervention], config: AgentConfig) -> QTable:
    """Q-learning against a scenario environment.

    env must provide reset(rng) -> state index and step(action_index, rng)
    -> (next state index, reward). Zero episodes returns the zero-initialized
    table (greedy ties then fall to catalog order).
    """
    table = QTable.zeros(catalog)
    rng = np.random.default_rng(config.seed)
    n_actions = len(catalog)
    for _ in range(config.episodes):
        s = env.reset(rng)
        for _ in range(config.steps_per_episode):
            if rng.random() < config.epsilon:
                a = int(rng.integers(n_actions))
            else:
                a = int(np.argmax(table.q[s]))
            s2, r = env.step(a, rng)
            q_update(table, s, a, r, s2, config)
            s = s2
    return table


@dataclass(frozen=True)
class Recommendation:
    intervention: Intervention
    expected_reward: float
    q_values: dict[str, float]  # every catalog action's value, for legibility
    lam: float


def recommend(
    table: QTable,
    catalog: list[Intervention],
    state: RiskState,
    params: KernelParams,
    lam: float,
) -> Recommendation:
    """Greedy action for the discretized state, ties broken by catalog
    order; the rationale always carries every action's value and lambda."""
    if not catalog:
        raise ConfigError("intervention catalog must not be empty")
    s = discretize(state, params)
    row = table.q[s]
    best = int(np.argmax(row))
    return Recommendation(
        intervention=catalog[best],
        expected_reward=float(row[best]),
        q_values={a.id: float(row[i]) for i, a in enumerate(catalog)},
        lam=lam,
    )


def immediate_reward(
    state: RiskState, intervention: Intervention, params: KernelParams, lam: float
) -> tuple[CiimOutput, float]:
    """What-if evaluation: hypothetical output after applying the action's
    effects, plus the one-step reward. Pure; never mutates the state."""
    current = eval_ciim(state, params=params)
    hypothetical_state = apply_effects(state, intervention, r_floor=params.r_min / 10.0)
    hypothetical = eval_ciim(hypothetical_state, params=params)
    delta = pinned_score(hypothetical) - pinned_score(current)
    return hypothetical, reward(delta, intervention.cost, lam)


def greedy_immediate(
    state: RiskState, catalog: list[Intervention], params: KernelParams, lam: float
) -> Recommendation:
    """One-step lookahead fallback when no trained table is loaded: pick the
    catalog action with the best immediate reward, ties by catalog order."""
    if not catalog:
        raise ConfigError("intervention catalog must not be empty")
    rewards = [immediate_reward(state, a, params, lam)[1] for a in catalog]
    best = int(np.argmax(rewards))
    return Recommendation(
        intervention=catalog[best],
        expected_reward=rewards[best],
        q_values={a.id: rewards[i] for i, a in enumerate(catalog)},
        lam=lam,
    )


def catalog_to_json(catalog: list[Intervention]) -> str:
    doc = {
        "format": "intervention-catalog",
        "version": CATALOG_FORMAT_VERSION,
        "interventions": [
            {"id": a.id, "cost": a.cost, "effects": dict(a.effects)} for a in catalog
        ],
    }
    return json.dumps(doc, indent=2)


def catalog_from_json(text: str) -> list[Intervention]:
    doc = json.loads(text)
    if doc.get("format") != "intervention-catalog":
        raise DomainError(f"not a catalog document: {doc.get('format')!r}")
    return [
        Intervention(id=e["id"], cost=float(e.get("cost", 0.0)), effects=dict(e.get("effects", {})))
        for e in doc["interventions"]
    ]
