"""Categorical risk levels: a deterministic threshold oracle over the
bounded [0, 10] scale plus a trainable boosted-stump ensemble, with a
divergence flag whenever the two disagree on the same state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .core import DomainError, KernelParams, Regime, classify_regime

N_CLASSES = 4
N_FEATURES = 4  # (normalized score, score trend over last 3 ticks, resilience, sensitivity)
LEVEL_CUTS = (2.5, 5.0, 7.5)

ENSEMBLE_FORMAT_VERSION = 1


class RiskLevel(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2
    CRITICAL = 3


def threshold_classify(normalized_score: float, regime: Regime) -> RiskLevel:
    """Quarter the [0, 10] scale into the four levels, intervals closed
    below; any collapse regime forces CRITICAL regardless of score."""
    if not (0.0 <= normalized_score <= 10.0):
        raise DomainError(f"normalized score must be in [0, 10], got {normalized_score!r}")
    if regime is Regime.COLLAPSE:
        return RiskLevel.CRITICAL
    if normalized_score < LEVEL_CUTS[0]:
        return RiskLevel.LOW
    if normalized_score < LEVEL_CUTS[1]:
        return RiskLevel.MEDIUM
    if normalized_score < LEVEL_CUTS[2]:
        return RiskLevel.HIGH
    return RiskLevel.CRITICAL


@dataclass(frozen=True)
class Stump:
    """One axis-aligned split with additive per-class votes on each side."""

    feature: int
    threshold: float
    left: tuple[float, float, float, float]   # votes when x[feature] <= threshold
    right: tuple[float, float, float, float]


@dataclass
class StumpEnsemble:
    stumps: list[Stump]
    learning_rate: float

    def margins(self, features: np.ndarray) -> np.ndarray:
        """Additive per-class scores for a (n, 4) feature matrix."""
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
        F = np.zeros((X.shape[0], N_CLASSES))
        for stump in self.stumps:
            go_left = X[:, stump.feature] <= stump.threshold
            F[go_left] += stump.left
            F[~go_left] += stump.right
        return F

    def predict(self, features: np.ndarray) -> RiskLevel:
        F = self.margins(features)
        return RiskLevel(int(np.argmax(F[0])))

    def to_json(self) -> str:
        doc = {
            "format": "stump-ensemble",
            "version": ENSEMBLE_FORMAT_VERSION,
            "learning_rate": self.learning_rate,
            "stumps": [
                {
                    "feature": s.feature,
                    "threshold": s.threshold,
                    "left": list(s.left),
                    "right": list(s.right),
                }
                for s in self.stumps
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StumpEnsemble":
        doc = json.loads(text)
        if doc.get("format") != "stump-ensemble":
            raise DomainError(f"not an ensemble document: {doc.get('format')!r}")
        if doc.get("version") != ENSEMBLE_FORMAT_VERSION:
            raise DomainError(f"unsupported ensemble version {doc.get('version')!r}")
        stumps = [
            Stump(
                feature=int(s["feature"]),
                threshold=float(s["threshold"]),
                left=tuple(s["left"]),
                right=tuple(s["right"]),
            )
            for s in doc["stumps"]
        ]
        return cls(stumps=stumps, learning_rate=float(doc["learning_rate"]))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def train_stumps(
    features: np.ndarray,
    labels,
    rounds: int = 25,
    seed: int = 0,
    learning_rate: float = 0.5,
    reg: float = 1.0,
) -> StumpEnsemble:
    """Stage-wise additive stumps on one-vs-rest logistic loss.

    Each round fits the single (feature, threshold) split with the largest
    Newton gain summed over classes and adds its damped leaf votes. Fully
    deterministic; the seed is accepted for interface symmetry with the
    other trainers but no randomness is used.
    """
    del seed
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray([int(l) for l in labels], dtype=np.int64)
    if X.ndim != 2 or X.shape[1] != N_FEATURES:
        raise DomainError(f"feature matrix must be (n, {N_FEATURES}), got {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise DomainError("features and labels disagree on length")
    if X.shape[0] < 4:
        raise DomainError(f"need at least 4 labeled examples, got {X.shape[0]}")
    if len(np.unique(y)) < 2:
        raise DomainError("degenerate label set: need at least 2 distinct classes")
    if rounds < 1:
        raise DomainError(f"rounds must be >= 1, got {rounds}")

    n = X.shape[0]
    Y = np.zeros((n, N_CLASSES))
    Y[np.arange(n), y] = 1.0

    order = np.argsort(X, axis=0, kind="stable")
    F = np.zeros((n, N_CLASSES))
    stumps: list[Stump] = []

    for _ in range(rounds):
        P = _sigmoid(F)
        G = Y - P               # negative gradient of logistic loss
        H = P * (1.0 - P) + 1e-12

        best_gain = -np.inf
        best = None
        for f in range(N_FEATURES):
            idx = order[:, f]
            xs = X[idx, f]
            g_cum = np.cumsum(G[idx], axis=0)
            h_cum = np.cumsum(H[idx], axis=0)
            g_tot = g_cum[-1]
            h_tot = h_cum[-1]
            # candidate split after each position where the value changes
            valid = np.nonzero(xs[:-1] < xs[1:])[0]
            if valid.size == 0:
                continue
            gl = g_cum[valid]
            hl = h_cum[valid]
            gr = g_tot - gl
            hr = h_tot - hl
            gain = np.sum(gl * gl / (hl + reg) + gr * gr / (hr + reg), axis=1)
            k = int(np.argmax(gain))
            if gain[k] > best_gain:
                best_gain = float(gain[k])
                pos = valid[k]
                thr = 0.5 * (xs[pos] + xs[pos + 1])
                left = learning_rate * gl[k] / (hl[k] + reg)
                right = learning_rate * gr[k] / (hr[k] + reg)
                best = Stump(
                    feature=f,
                    threshold=float(thr),
                    left=tuple(float(v) for v in left),
                    right=tuple(float(v) for v in right),
                )
        if best is None:
            break
        stumps.append(best)
        go_left = X[:, best.feature] <= best.threshold
        F[go_left] += best.left
        F[~go_left] += best.right

    return StumpEnsemble(stumps=stumps, learning_rate=learning_rate)


def classify(
    ensemble: StumpEnsemble,
    features: np.ndarray,
    params: KernelParams = KernelParams(),
) -> tuple[RiskLevel, bool]:
    """Ensemble prediction plus divergence against the threshold oracle.

    The oracle is re-derived from the feature vector itself: score from
    feature 0, regime from the resilience in feature 2.
    """
    features = np.asarray(features, dtype=np.float64).reshape(N_FEATURES)
    predicted = ensemble.predict(features)
    regime = classify_regime(float(features[2]), params)
    oracle = threshold_classify(float(features[0]), regime)
    return predicted, predicted != oracle


def build_features(
    normalized_score: float,
    score_trend: float,
    resilience: float,
    sensitivity: float,
) -> np.ndarray:
    return np.array([normalized_score, score_trend, resilience, sensitivity])
