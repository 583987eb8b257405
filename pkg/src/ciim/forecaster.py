"""Next-tick forecaster for the eight kernel input channels.

Two models share one interface: a gated recurrent cell trained by full-batch
gradient descent through time, and a closed-form AR(1) fallback that works
with no training at all. Predictions are always clamped back into each
channel's legal range before they reach the kernel.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, PerturbationSources, RiskState
from .kernels import gru_backward, gru_cell_step, gru_forward

CHANNELS = (
    "threat",
    "vulnerability",
    "exposure",
    "resilience",
    "d_hist",
    "d_real",
    "b_user",
    "a_patterns",
)
N_CHANNELS = len(CHANNELS)

# Resilience is (0, 1]; everything else [0, 1]. The tiny floor keeps a
# forecast from ever emitting a non-positive resilience.
RESILIENCE_FLOOR = 1e-9
CHANNEL_LOW = np.array([0.0, 0.0, 0.0, RESILIENCE_FLOOR, 0.0, 0.0, 0.0, 0.0])
CHANNEL_HIGH = np.ones(N_CHANNELS)

PARAM_NAMES = ("Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh", "Wo", "bo")

MODEL_FORMAT_VERSION = 1


def state_to_channels(state: RiskState) -> np.ndarray:
    s = state.sources
    return np.array([
        state.threat, state.vulnerability, state.exposure, state.resilience,
        s.d_hist, s.d_real, s.b_user, s.a_patterns,
    ])


def channels_to_state(values: np.ndarray, t: int) -> RiskState:
    v = clamp_channels(values)
    return RiskState(
        t=t,
        threat=float(v[0]),
        vulnerability=float(v[1]),
        exposure=float(v[2]),
        resilience=float(v[3]),
        sources=PerturbationSources(
            d_hist=float(v[4]), d_real=float(v[5]),
            b_user=float(v[6]), a_patterns=float(v[7]),
        ),
    )


def clamp_channels(values: np.ndarray) -> np.ndarray:
    return np.minimum(np.maximum(values, CHANNEL_LOW), CHANNEL_HIGH)


@dataclass
class SeriesWindow:
    """A (length, 8) history of channel values, oldest row first."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] != N_CHANNELS:
            raise DomainError(
                f"series window must be (length, {N_CHANNELS}), got {self.values.shape}"
            )
        if self.values.shape[0] < 1:
            raise DomainError("series window must have length >= 1")
        if np.any(self.values < CHANNEL_LOW) or np.any(self.values > CHANNEL_HIGH):
            raise DomainError("series window values outside legal channel ranges")

    @classmethod
    def from_states(cls, states) -> "SeriesWindow":
        return cls(np.stack([state_to_channels(s) for s in states]))

    def __len__(self) -> int:
        return int(self.values.shape[0])


@dataclass
class GruCellParams:
    """GRU weights plus a linear read-out back to the 8 channels."""

    hidden_size: int
    weights: dict[str, np.ndarray]

    def __post_init__(self):
        h, c = self.hidden_size, N_CHANNELS
        expected = {
            "Wz": (h, c), "Uz": (h, h), "bz": (h,),
            "Wr": (h, c), "Ur": (h, h), "br": (h,),
            "Wh": (h, c), "Uh": (h, h), "bh": (h,),
            "Wo": (c, h), "bo": (c,),
        }
        for name in PARAM_NAMES:
            if name not in self.weights:
                raise DomainError(f"missing parameter {name}")
            arr = np.ascontiguousarray(self.weights[name], dtype=np.float64)
            if arr.shape != expected[name]:
                raise DomainError(
                    f"parameter {name} has shape {arr.shape}, expected {expected[name]}"
                )
            self.weights[name] = arr

    @classmethod
    def init(cls, seed: int, hidden_size: int = 8) -> "GruCellParams":
        rng = np.random.default_rng(seed)
        h, c = hidden_size, N_CHANNELS
        shapes = {
            "Wz": (h, c), "Uz": (h, h), "bz": (h,),
            "Wr": (h, c), "Ur": (h, h), "br": (h,),
            "Wh": (h, c), "Uh": (h, h), "bh": (h,),
            "Wo": (c, h), "bo": (c,),
        }
        weights = {name: rng.uniform(-0.1, 0.1, size=shape) for name, shape in shapes.items()}
        return cls(hidden_size=hidden_size, weights=weights)

    def as_args(self):
        w = self.weights
        return (w["Wz"], w["Uz"], w["bz"], w["Wr"], w["Ur"], w["br"],
                w["Wh"], w["Uh"], w["bh"], w["Wo"], w["bo"])

    def copy(self) -> "GruCellParams":
        return GruCellParams(
            hidden_size=self.hidden_size,
            weights={k: v.copy() for k, v in self.weights.items()},
        )

    def to_json(self) -> str:
        doc = {
            "format": "gru-forecaster",
            "version": MODEL_FORMAT_VERSION,
            "hidden_size": self.hidden_size,
            "channels": list(CHANNELS),
            "weights": {
                name: {
                    "shape": list(self.weights[name].shape),
                    "data": self.weights[name].ravel().tolist(),
                }
                for name in PARAM_NAMES
            },
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "GruCellParams":
        doc = json.loads(text)
        if doc.get("format") != "gru-forecaster":
            raise DomainError(f"not a forecaster document: {doc.get('format')!r}")
        if doc.get("version") != MODEL_FORMAT_VERSION:
            raise DomainError(f"unsupported forecaster version {doc.get('version')!r}")
        weights = {
            name: np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in doc["weights"].items()
        }
        return cls(hidden_size=int(doc["hidden_size"]), weights=weights)


@dataclass
class Ar1Model:
    """Per-channel x_hat = phi * x_t + c. Defaults to the identity forecast."""

    phi: np.ndarray = field(default_factory=lambda: np.ones(N_CHANNELS))
    intercept: np.ndarray = field(default_factory=lambda: np.zeros(N_CHANNELS))

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64).reshape(N_CHANNELS)
        self.intercept = np.asarray(self.intercept, dtype=np.float64).reshape(N_CHANNELS)


@dataclass(frozen=True, eq=False)
class Forecast:
    predicted: np.ndarray  # (8,) clamped channel values
    model_id: str  # "GRU" | "AR1"

    def __eq__(self, other):
        if not isinstance(other, Forecast):
            return NotImplemented
        return self.model_id == other.model_id and np.array_equal(self.predicted, other.predicted)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    seed: int = 0
    hidden_size: int = 8


def one_step_loss(params: GruCellParams, window: SeriesWindow) -> float:
    """Mean squared one-step-ahead error on the window."""
    X = window.values
    _, _, _, _, preds = gru_forward(X, *params.as_args())
    err = preds[:-1] - X[1:]
    return float(np.mean(err * err))


def loss_and_gradients(params: GruCellParams, window: SeriesWindow):
    """Analytic BPTT gradients of the one-step MSE, as {name: array}."""
    X = window.values
    w = params.weights
    Hs, Z, R, Hc, preds = gru_forward(X, *params.as_args())
    out = gru_backward(X, Hs, Z, R, Hc, preds,
                       w["Wz"], w["Uz"], w["Wr"], w["Ur"], w["Wh"], w["Uh"], w["Wo"])
    grads = dict(zip(PARAM_NAMES, out[:-1]))
    return grads, float(out[-1])


def train_forecaster(history: SeriesWindow, config: TrainConfig = TrainConfig()) -> GruCellParams:
    """Full-batch gradient descent through time on one-step-ahead MSE.

    Returns the best parameters seen (by training loss), so the result is
    never worse than the seeded initialization. Deterministic given the seed.
    """
    if len(history) < 3:
        raise DomainError(f"need history length >= 3 to train, got {len(history)}")
    params = GruCellParams.init(config.seed, config.hidden_size)
    if config.epochs == 0:
        return params
    best = params.copy()
    best_loss = one_step_loss(params, history)
    for _ in range(config.epochs):
        grads, _ = loss_and_gradients(params, history)
        for name in PARAM_NAMES:
            params.weights[name] -= config.learning_rate * grads[name]
        loss = one_step_loss(params, history)
        if loss < best_loss:
            best_loss = loss
            best = params.copy()
    return best


def gru_step(params: GruCellParams, hidden: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Advance the recurrent cell by one input; returns the new hidden state."""
    hidden = np.ascontiguousarray(hidden, dtype=np.float64)
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    if hidden.shape != (params.hidden_size,):
        raise DomainError(f"hidden has shape {hidden.shape}, expected ({params.hidden_size},)")
    if inputs.shape != (N_CHANNELS,):
        raise DomainError(f"input has shape {inputs.shape}, expected ({N_CHANNELS},)")
    w = params.weights
    _, _, _, h_new = gru_cell_step(
        inputs, hidden, w["Wz"], w["Uz"], w["bz"], w["Wr"], w["Ur"], w["br"],
        w["Wh"], w["Uh"], w["bh"],
    )
    return h_new


def forecast_next(model: GruCellParams | Ar1Model, history: SeriesWindow) -> Forecast:
    """Predict next-tick channel values, clamped to their legal ranges."""
    if len(history) < 1:
        raise DomainError("cannot forecast from an empty history")
    last = history.values[-1]
    if isinstance(model, Ar1Model):
        raw = model.phi * last + model.intercept
        return Forecast(predicted=clamp_channels(raw), model_id="AR1")
    _, _, _, _, preds = gru_forward(history.values, *model.as_args())
    return Forecast(predicted=clamp_channels(preds[-1]), model_id="GRU")
