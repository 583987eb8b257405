"""Discrete-time synthetic organization.

Evolves the kernel inputs and the four context streams under seeded drift,
Bernoulli attack shocks, resilience decay and noise, applies catalogued
interventions, and runs the full per-tick pipeline (forecast -> kernel on
the forecast -> categorize -> act -> reward -> step). Also provides the
deliberately context-blind static baseline used for the side-by-side
contrast.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .agent import (
    DEFAULT_CATALOG,
    Intervention,
    QTable,
    apply_effects,
    immediate_reward,
    pinned_score,
    recommend,
)
from .classifier import RiskLevel, StumpEnsemble, build_features, threshold_classify
from .core import (
    CiimOutput,
    Collapse,
    ConfigError,
    KernelParams,
    Projection,
    Regime,
    RiskState,
    aggregate_perturbation,
    eval_ciim,
)
from .forecaster import (
    Ar1Model,
    Forecast,
    GruCellParams,
    SeriesWindow,
    channels_to_state,
    forecast_next,
    state_to_channels,
)

CHANNEL_KEYS = (
    "threat", "vulnerability", "exposure", "resilience",
    "d_hist", "d_real", "b_user", "a_patterns",
)

HISTORY_WINDOW = 64


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    initial: RiskState = field(default_factory=lambda: RiskState(
        threat=0.3, vulnerability=0.3, exposure=0.3, resilience=0.8))
    drift: tuple = (0.0,) * 8  # per-channel additive rate per tick
    attack_rate: float = 0.0       # per-tick Bernoulli probability
    attack_magnitude: float = 0.0  # bump to threat and d_real on attack
    resilience_decay: float = 0.0
    noise_amplitude: float = 0.0
    kernel: KernelParams = field(default_factory=KernelParams)
    catalog: tuple = tuple(DEFAULT_CATALOG)
    lam: float = 1.0

    def __post_init__(self):
        if len(self.drift) != 8:
            raise ConfigError(f"drift must have 8 entries, got {len(self.drift)}")
        if not (0.0 <= self.attack_rate <= 1.0):
            raise ConfigError(f"attack_rate must be in [0, 1], got {self.attack_rate!r}")
        for name in ("attack_magnitude", "resilience_decay", "noise_amplitude", "lam"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be a finite non-negative real, got {value!r}")
        if not self.catalog:
            raise ConfigError("intervention catalog must not be empty")


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    pre_state: RiskState
    action: str | None
    forecast: Forecast
    output: CiimOutput
    baseline: float
    level: RiskLevel
    reward: float | None
    divergence: bool


def static_baseline(state: RiskState) -> float:
    """10*T*V*E: blind to resilience and to every context source by
    construction. This is the contrast instrument, not the engine."""
    return 10.0 * state.threat * state.vulnerability * state.exposure


def step(
    state: RiskState,
    action: Intervention | None,
    config: ScenarioConfig,
    rng: np.random.Generator,
) -> RiskState:
    """Advance one tick: intervention effects, drift, Bernoulli attack,
    resilience decay, noise, then clamp. Always consumes the same number of
    random draws so the stream position depends only on the tick count."""
    r_floor = config.kernel.r_min / 10.0
    if action is not None:
        state = apply_effects(state, action, r_floor)
    values = state_to_channels(state)
    values += np.asarray(config.drift, dtype=np.float64)
    attack_draw = rng.random()
    if attack_draw < config.attack_rate:
        values[0] += config.attack_magnitude  # threat
        values[5] += config.attack_magnitude  # d_real
    values[3] -= config.resilience_decay
    values += rng.standard_normal(8) * config.noise_amplitude
    values = np.minimum(np.maximum(values, 0.0), 1.0)
    values[3] = max(values[3], r_floor)
    return channels_to_state(values, t=state.t + 1)


class NullPolicy:
    name = "none"

    def choose(self, engine) -> Intervention | None:
        return None


class ScriptedPolicy:
    """Plays back a fixed action-id sequence (None entries allowed); cycles
    when the script is shorter than the run."""

    name = "scripted"

    def __init__(self, script, catalog):
        self.script = list(script)
        self.by_id = {a.id: a for a in catalog}
        self._i = 0

    def choose(self, engine) -> Intervention | None:
        if not self.script:
            return None
        action_id = self.script[self._i % len(self.script)]
        self._i += 1
        if action_id is None:
            return None
        if action_id not in self.by_id:
            raise ConfigError(f"scripted action {action_id!r} not in catalog")
        return self.by_id[action_id]


class AgentPolicy:
    name = "agent"

    def __init__(self, table: QTable):
        self.table = table

    def choose(self, engine) -> Intervention | None:
        rec = recommend(
            self.table, list(engine.config.catalog), engine.state,
            engine.params, engine.lam,
        )
        return rec.intervention


class ScenarioEngine:
    """Mutable per-scenario pipeline: owns the current state, the rolling
    history window, the RNG stream and the live normative parameters.
    One engine is driven by at most one caller at a time."""

    def __init__(
        self,
        config: ScenarioConfig,
        forecaster: GruCellParams | Ar1Model | None = None,
        ensemble: StumpEnsemble | None = None,
    ):
        self.config = config
        self.params = config.kernel
        self.lam = config.lam
        self.forecaster = forecaster if forecaster is not None else Ar1Model()
        self.ensemble = ensemble
        self.rng = np.random.default_rng(config.seed)
        self.state = config.initial
        self._history = [state_to_channels(config.initial)]
        self._scores: list[float] = []

    def set_norms(self, lam: float, perturbation_weights) -> None:
        """Runtime-configurable normative parameters; validation happens in
        KernelParams so a bad weight vector can never take effect."""
        if lam < 0 or not np.isfinite(lam):
            raise ConfigError(f"lambda must be a finite non-negative real, got {lam!r}")
        self.params = replace(self.params, perturbation_weights=tuple(perturbation_weights))
        self.lam = float(lam)

    def _window(self) -> SeriesWindow:
        return SeriesWindow(np.stack(self._history[-HISTORY_WINDOW:]))

    def evaluate(self) -> tuple[Forecast, CiimOutput, RiskLevel, bool]:
        """Forecast next-tick inputs and run the kernel on the forecast.
        Pure with respect to the engine's state."""
        forecast = forecast_next(self.forecaster, self._window())
        forecast_state = channels_to_state(forecast.predicted, t=self.state.t + 1)
        p_next = aggregate_perturbation(forecast_state.sources, self.params.perturbation_weights)
        output = eval_ciim(forecast_state, p_next, self.params)
        score = pinned_score(output)
        if isinstance(output, Collapse):
            level = RiskLevel.CRITICAL
            divergence = False  # the collapse override binds both voices
        else:
            level = threshold_classify(score, output.regime)
            divergence = False
            if self.ensemble is not None:
                trend = score - self._scores[-2] if len(self._scores) >= 2 else 0.0
                feats = build_features(score, trend, forecast_state.resilience, output.sensitivity)
                predicted = self.ensemble.predict(feats)
                divergence = predicted != level
        return forecast, output, level, divergence

    def whatif(self, action: Intervention) -> tuple[CiimOutput, float]:
        """Hypothetical output and reward for an action, without committing."""
        return immediate_reward(self.state, action, self.params, self.lam)

    def step_once(self, action: Intervention | None) -> TraceRecord:
        forecast, output, level, divergence = self.evaluate()
        reward_value = None
        if action is not None:
            _, reward_value = self.whatif(action)
        record = TraceRecord(
            tick=self.state.t,
            pre_state=self.state,
            action=action.id if action is not None else None,
            forecast=forecast,
            output=output,
            baseline=static_baseline(self.state),
            level=level,
            reward=reward_value,
            divergence=divergence,
        )
        self._scores.append(pinned_score(output))
        self.state = step(self.state, action, self.config, self.rng)
        self._history.append(state_to_channels(self.state))
        return record

    def current_output(self) -> CiimOutput:
        """Kernel evaluation of the current actual state (attribution view)."""
        return eval_ciim(self.state, params=self.params)


def run(
    config: ScenarioConfig,
    ticks: int,
    policy=None,
    forecaster: GruCellParams | Ar1Model | None = None,
    ensemble: StumpEnsemble | None = None,
) -> list[TraceRecord]:
    """Run the full pipeline for a fixed number of ticks. Deterministic
    given (config, policy, models)."""
    if ticks < 1:
        raise ConfigError(f"ticks must be >= 1, got {ticks}")
    if policy is None:
        policy = NullPolicy()
    engine = ScenarioEngine(config, forecaster=forecaster, ensemble=ensemble)
    records = []
    for _ in range(ticks):
        action = policy.choose(engine)
        records.append(engine.step_once(action))
    return records


class ScenarioEnv:
    """Q-learning environment over the scenario dynamics: states are the 12
    (regime, level) cells, rewards are pinned-score deltas minus weighted
    action cost across the real transition."""

    def __init__(self, config: ScenarioConfig, episode_seed_bits: int = 32):
        self.config = config
        self._seed_bits = episode_seed_bits
        self._engine: ScenarioEngine | None = None

    def _discretize(self) -> int:
        from .agent import discretize

        return discretize(self._engine.state, self._engine.params)

    def reset(self, rng: np.random.Generator) -> int:
        episode_seed = int(rng.integers(1 << self._seed_bits))
        self._engine = ScenarioEngine(replace(self.config, seed=episode_seed))
        return self._discretize()

    def step(self, action_index: int, rng: np.random.Generator) -> tuple[int, float]:
        from .agent import reward as reward_fn

        engine = self._engine
        action = engine.config.catalog[action_index]
        before = pinned_score(engine.current_output())
        engine.step_once(action)
        after = pinned_score(engine.current_output())
        return self._discretize(), reward_fn(after - before, action.cost, engine.lam)


def features_from_records(records) -> tuple[np.ndarray, list[RiskLevel]]:
    """Rebuild the classifier's feature matrix and oracle labels from a
    trace: (score, trend over last 3 ticks, forecast resilience, sensitivity)."""
    feats = []
    labels = []
    scores = []
    for record in records:
        score = pinned_score(record.output)
        trend = score - scores[-2] if len(scores) >= 2 else 0.0
        scores.append(score)
        if isinstance(record.output, Collapse):
            continue  # collapse rows are override-bound, not learnable rows
        resilience = float(record.forecast.predicted[3])
        feats.append(build_features(score, trend, resilience, record.output.sensitivity))
        labels.append(record.level)
    if not feats:
        raise ConfigError("trace contains no projection records to learn from")
    return np.stack(feats), labels
