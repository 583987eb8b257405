"""Core risk kernel: parameters, state, regime classification, index
evaluation with per-term attribution, and the bounded display scale.

The index is a projection for the next tick: value = a*T*V*E/R + alpha*P.
When resilience falls to or below the collapse threshold the kernel emits a
qualitative Collapse signal instead of a number; there is no epsilon in the
denominator and no capped float anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .kernels import ciim_batch

__all__ = [
    "ConfigError",
    "DomainError",
    "KernelParams",
    "PerturbationSources",
    "RiskState",
    "Regime",
    "Attribution",
    "Projection",
    "Collapse",
    "CiimOutput",
    "COLLAPSE_MESSAGE",
    "aggregate_perturbation",
    "classify_regime",
    "eval_ciim",
    "eval_ciim_batch",
    "normalize_score",
]

DEFAULT_WEIGHTS = (0.4, 0.3, 0.2, 0.1)

COLLAPSE_MESSAGE = (
    "resilience at or below collapse threshold: the index is undefined in "
    "this regime and no numeric score is reported"
)


class ConfigError(ValueError):
    """Invalid configuration (weights, thresholds, rates)."""


class DomainError(ValueError):
    """Input outside its legal range."""


def _check_unit(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise DomainError(f"{name} must be in [0, 1], got {value!r}")


def _check_weights(weights) -> tuple[float, float, float, float]:
    w = tuple(float(x) for x in weights)
    if len(w) != 4:
        raise ConfigError(f"expected 4 perturbation weights, got {len(w)}")
    for x in w:
        if not (0.0 <= x <= 1.0):
            raise ConfigError(f"perturbation weights must lie in [0, 1], got {x!r}")
    if abs(sum(w) - 1.0) > 1e-9:
        raise ConfigError(f"perturbation weights must sum to 1, got {sum(w)!r}")
    return w


@dataclass(frozen=True)
class KernelParams:
    """Kernel constants: threat-base breadth a, perturbation weight alpha,
    regime thresholds, and the four source weights."""

    a: float = 1.0
    alpha: float = 0.5
    r_min: float = 0.01
    r_fragile: float = 0.15
    perturbation_weights: tuple[float, float, float, float] = DEFAULT_WEIGHTS

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"a must be positive, got {self.a!r}")
        if self.alpha < 0:
            raise ConfigError(f"alpha must be non-negative, got {self.alpha!r}")
        if not (0.0 < self.r_min < self.r_fragile < 1.0):
            raise ConfigError(
                f"need 0 < r_min < r_fragile < 1, got r_min={self.r_min!r} "
                f"r_fragile={self.r_fragile!r}"
            )
        object.__setattr__(
            self, "perturbation_weights", _check_weights(self.perturbation_weights)
        )


@dataclass(frozen=True)
class PerturbationSources:
    """The four auditable context streams, each normalized to [0, 1]."""

    d_hist: float = 0.0
    d_real: float = 0.0
    b_user: float = 0.0
    a_patterns: float = 0.0

    def __post_init__(self):
        for name in ("d_hist", "d_real", "b_user", "a_patterns"):
            _check_unit(name, getattr(self, name))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.d_hist, self.d_real, self.b_user, self.a_patterns)


@dataclass(frozen=True)
class RiskState:
    """World snapshot at one tick: the kernel inputs plus context sources.

    Resilience is strictly positive by construction; collapse is modeled as
    resilience <= r_min, never as a literal zero.
    """

    t: int = 0
    threat: float = 0.0
    vulnerability: float = 0.0
    exposure: float = 0.0
    resilience: float = 1.0
    sources: PerturbationSources = field(default_factory=PerturbationSources)

    def __post_init__(self):
        if self.t < 0 or int(self.t) != self.t:
            raise DomainError(f"tick must be a non-negative integer, got {self.t!r}")
        _check_unit("threat", self.threat)
        _check_unit("vulnerability", self.vulnerability)
        _check_unit("exposure", self.exposure)
        if not (0.0 < self.resilience <= 1.0):
            raise DomainError(
                f"resilience must be in (0, 1], got {self.resilience!r}"
            )


class Regime(Enum):
    NORMAL = "NORMAL"
    FRAGILE = "FRAGILE"
    COLLAPSE = "COLLAPSE"


@dataclass(frozen=True)
class Attribution:
    """Per-term breakdown: value = threat_term + perturbation_term, and
    perturbation_term = sum of the four source contributions."""

    threat_term: float
    perturbation_term: float
    source_contributions: tuple[float, float, float, float]


@dataclass(frozen=True)
class Projection:
    """Numeric next-tick index, only emitted outside the collapse band."""

    value: float
    regime: Regime
    sensitivity: float
    attribution: Attribution


@dataclass(frozen=True)
class Collapse:
    """Qualitative collapse signal. Deliberately carries no index value."""

    resilience: float
    message: str = COLLAPSE_MESSAGE


CiimOutput = Projection | Collapse


def aggregate_perturbation(sources: PerturbationSources, weights=DEFAULT_WEIGHTS) -> float:
    """Weighted average of the four context streams; result stays in [0, 1]."""
    w = _check_weights(weights)
    s = sources.as_tuple()
    return w[0] * s[0] + w[1] * s[1] + w[2] * s[2] + w[3] * s[3]


def classify_regime(resilience: float, params: KernelParams) -> Regime:
    """COLLAPSE iff R <= r_min, FRAGILE iff r_min < R <= r_fragile, else NORMAL."""
    if not (0.0 < resilience <= 1.0):
        raise DomainError(f"resilience must be in (0, 1], got {resilience!r}")
    if resilience <= params.r_min:
        return Regime.COLLAPSE
    if resilience <= params.r_fragile:
        return Regime.FRAGILE
    return Regime.NORMAL


def eval_ciim(
    state: RiskState, p_next: float | None = None, params: KernelParams = KernelParams()
) -> CiimOutput:
    """Evaluate the projected index for one state.

    p_next is the perturbation value used for the projection; it defaults to
    the weighted aggregate of the state's own sources, which keeps the
    attribution breakdown exact. The regime gate runs before any division,
    so the collapse band can never surface as a division blow-up; it
    surfaces as a Collapse value.
    """
    if p_next is None:
        p_next = aggregate_perturbation(state.sources, params.perturbation_weights)
    _check_unit("p_next", p_next)
    regime = classify_regime(state.resilience, params)
    if regime is Regime.COLLAPSE:
        return Collapse(resilience=state.resilience)

    numerator = params.a * state.threat * state.vulnerability * state.exposure
    threat_term = numerator / state.resilience
    w = params.perturbation_weights
    s = state.sources.as_tuple()
    # The breakdown attributes the state's own sources; callers that pass an
    # explicit p_next are expected to evaluate the state it came from.
    contributions = tuple(params.alpha * w[i] * s[i] for i in range(4))
    perturbation_term = params.alpha * p_next
    value = threat_term + perturbation_term
    sensitivity = numerator / (state.resilience * state.resilience)
    return Projection(
        value=value,
        regime=regime,
        sensitivity=sensitivity,
        attribution=Attribution(
            threat_term=threat_term,
            perturbation_term=perturbation_term,
            source_contributions=contributions,
        ),
    )


def eval_ciim_batch(params: KernelParams, threat, vuln, expo, resil, pert):
    """Vectorized projection values and sensitivities for arrays of states
    already known to be outside the collapse band."""
    threat = np.ascontiguousarray(threat, dtype=np.float64)
    vuln = np.ascontiguousarray(vuln, dtype=np.float64)
    expo = np.ascontiguousarray(expo, dtype=np.float64)
    resil = np.ascontiguousarray(resil, dtype=np.float64)
    pert = np.ascontiguousarray(pert, dtype=np.float64)
    values = np.empty_like(threat)
    sens = np.empty_like(threat)
    ciim_batch(params.a, params.alpha, threat, vuln, expo, resil, pert, values, sens)
    return values, sens


def normalize_score(raw: float) -> float:
    """Map the unbounded raw index onto a bounded [0, 10] display scale.

    10 * (1 - exp(-ln2 * raw)): strictly increasing, 0 -> 0, 1 -> 5,
    asymptotic to 10. Display only; regime logic never touches this.
    """
    if raw < 0 or math.isnan(raw):
        raise DomainError(f"raw score must be non-negative, got {raw!r}")
    return 10.0 * (1.0 - math.exp(-math.log(2.0) * raw))
