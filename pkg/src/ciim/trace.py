"""JSON Lines trace persistence with byte-stable replay.

One trace file = one header line followed by record lines (and, for live
service sessions, norm-change event lines). Keys are emitted in a fixed
order and floats use Python's shortest round-trip repr, so re-running the
same config and seed regenerates the identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from .agent import Intervention, catalog_from_json, catalog_to_json
from .classifier import RiskLevel
from .core import (
    Collapse,
    ConfigError,
    KernelParams,
    PerturbationSources,
    Projection,
    CiimOutput,
    RiskState,
)
from .forecaster import CHANNELS, Forecast
from .scenario import ScenarioConfig, ScriptedPolicy, ScenarioEngine, TraceRecord

TRACE_FORMAT_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def state_to_dict(state: RiskState) -> dict:
    return {
        "t": state.t,
        "threat": state.threat,
        "vulnerability": state.vulnerability,
        "exposure": state.exposure,
        "resilience": state.resilience,
        "sources": {
            "d_hist": state.sources.d_hist,
            "d_real": state.sources.d_real,
            "b_user": state.sources.b_user,
            "a_patterns": state.sources.a_patterns,
        },
    }


def state_from_dict(doc: dict) -> RiskState:
    sources = doc.get("sources", {})
    return RiskState(
        t=int(doc["t"]),
        threat=float(doc["threat"]),
        vulnerability=float(doc["vulnerability"]),
        exposure=float(doc["exposure"]),
        resilience=float(doc["resilience"]),
        sources=PerturbationSources(
            d_hist=float(sources.get("d_hist", 0.0)),
            d_real=float(sources.get("d_real", 0.0)),
            b_user=float(sources.get("b_user", 0.0)),
            a_patterns=float(sources.get("a_patterns", 0.0)),
        ),
    )


def output_to_dict(output: CiimOutput) -> dict:
    """Collapse serializes as its own variant with no score field; the wire
    format makes a smoothed number unrepresentable."""
    if isinstance(output, Collapse):
        return {
            "kind": "collapse",
            "resilience": output.resilience,
            "message": output.message,
        }
    return {
        "kind": "projection",
        "value": output.value,
        "regime": output.regime.value,
        "sensitivity": output.sensitivity,
        "attribution": {
            "threat_term": output.attribution.threat_term,
            "perturbation_term": output.attribution.perturbation_term,
            "source_contributions": list(output.attribution.source_contributions),
        },
    }


def forecast_to_dict(forecast: Forecast) -> dict:
    return {
        "model_id": forecast.model_id,
        "predicted": {name: float(v) for name, v in zip(CHANNELS, forecast.predicted)},
    }


def record_to_dict(record: TraceRecord) -> dict:
    return {
        "kind": "record",
        "tick": record.tick,
        "pre_state": state_to_dict(record.pre_state),
        "action": record.action,
        "forecast": forecast_to_dict(record.forecast),
        "output": output_to_dict(record.output),
        "baseline": record.baseline,
        "level": record.level.name,
        "reward": record.reward,
        "divergence": record.divergence,
    }


def config_to_dict(config: ScenarioConfig) -> dict:
    return {
        "seed": config.seed,
        "initial": state_to_dict(config.initial),
        "drift": list(config.drift),
        "attack_rate": config.attack_rate,
        "attack_magnitude": config.attack_magnitude,
        "resilience_decay": config.resilience_decay,
        "noise_amplitude": config.noise_amplitude,
        "kernel": {
            "a": config.kernel.a,
            "alpha": config.kernel.alpha,
            "r_min": config.kernel.r_min,
            "r_fragile": config.kernel.r_fragile,
            "perturbation_weights": list(config.kernel.perturbation_weights),
        },
        "catalog": [
            {"id": a.id, "cost": a.cost, "effects": dict(a.effects)}
            for a in config.catalog
        ],
        "lambda": config.lam,
    }


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Parse and validate; errors name the offending field."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")

    def grab(key, default=None, required=False):
        if key not in doc:
            if required:
                raise ConfigError(f"config.{key}: missing required field")
            return default
        return doc[key]

    try:
        initial = state_from_dict(grab("initial", required=True))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"config.initial: {exc}") from exc

    kernel_doc = grab("kernel", {})
    try:
        kernel = KernelParams(
            a=float(kernel_doc.get("a", 1.0)),
            alpha=float(kernel_doc.get("alpha", 0.5)),
            r_min=float(kernel_doc.get("r_min", 0.01)),
            r_fragile=float(kernel_doc.get("r_fragile", 0.15)),
            perturbation_weights=tuple(
                kernel_doc.get("perturbation_weights", (0.4, 0.3, 0.2, 0.1))
            ),
        )
    except (ConfigError, TypeError, ValueError) as exc:
        raise ConfigError(f"config.kernel: {exc}") from exc

    catalog_doc = grab("catalog")
    if catalog_doc is None:
        from .agent import DEFAULT_CATALOG

        catalog = tuple(DEFAULT_CATALOG)
    else:
        try:
            catalog = tuple(
                Intervention(
                    id=e["id"],
                    cost=float(e.get("cost", 0.0)),
                    effects=dict(e.get("effects", {})),
                )
                for e in catalog_doc
            )
        except (ConfigError, TypeError, KeyError, ValueError) as exc:
            raise ConfigError(f"config.catalog: {exc}") from exc

    try:
        return ScenarioConfig(
            seed=int(grab("seed", 0)),
            initial=initial,
            drift=tuple(float(v) for v in grab("drift", (0.0,) * 8)),
            attack_rate=float(grab("attack_rate", 0.0)),
            attack_magnitude=float(grab("attack_magnitude", 0.0)),
            resilience_decay=float(grab("resilience_decay", 0.0)),
            noise_amplitude=float(grab("noise_amplitude", 0.0)),
            kernel=kernel,
            catalog=catalog,
            lam=float(grab("lambda", 1.0)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc


def header_line(config: ScenarioConfig, policy_name: str = "none") -> str:
    return _dumps({
        "kind": "header",
        "version": TRACE_FORMAT_VERSION,
        "policy": policy_name,
        "config": config_to_dict(config),
    })


def record_line(record: TraceRecord) -> str:
    return _dumps(record_to_dict(record))


def norms_line(tick: int, lam: float, weights) -> str:
    return _dumps({
        "kind": "norms",
        "tick": tick,
        "lambda": lam,
        "perturbation_weights": list(weights),
    })


def write_trace(path, config: ScenarioConfig, records, policy_name: str = "none") -> None:
    lines = [header_line(config, policy_name)]
    lines.extend(record_line(r) for r in records)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace(path) -> tuple[ScenarioConfig, list[dict]]:
    """Returns the parsed config and the raw event dicts after the header."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [line for line in text.split("\n") if line]
    if not lines:
        raise ConfigError("trace file is empty")
    header = json.loads(lines[0])
    if header.get("kind") != "header":
        raise ConfigError("trace file does not start with a header line")
    if header.get("version") != TRACE_FORMAT_VERSION:
        raise ConfigError(f"unsupported trace version {header.get('version')!r}")
    config = config_from_dict(header["config"])
    return config, [json.loads(line) for line in lines[1:]]


def replay_events(config: ScenarioConfig, events: list[dict]) -> tuple[ScenarioEngine, list[str]]:
    """Re-run a trace's events deterministically: records replay their
    recorded action, norm events re-apply the norm change. Returns the
    reconstructed engine plus the regenerated event lines.

    Assumes the trace was produced with the fallback models (no trained
    forecaster/ensemble), which is what the batch simulator and the service
    write unless models are explicitly attached.
    """
    engine = ScenarioEngine(config)
    by_id = {a.id: a for a in config.catalog}
    lines = []
    for event in events:
        kind = event.get("kind")
        if kind == "record":
            action_id = event.get("action")
            action = None
            if action_id is not None:
                if action_id not in by_id:
                    raise ConfigError(f"recorded action {action_id!r} not in catalog")
                action = by_id[action_id]
            lines.append(record_line(engine.step_once(action)))
        elif kind == "norms":
            engine.set_norms(float(event["lambda"]), event["perturbation_weights"])
            lines.append(norms_line(int(event["tick"]), engine.lam,
                                    engine.params.perturbation_weights))
        else:
            raise ConfigError(f"unknown trace event kind {kind!r}")
    return engine, lines


def verify_replay(path) -> bool:
    """True iff re-simulating the trace reproduces the file byte-for-byte."""
    original = Path(path).read_text(encoding="utf-8")
    config, events = read_trace(path)
    header = json.loads(original.split("\n", 1)[0])
    _, lines = replay_events(config, events)
    regenerated = "\n".join([header_line(config, header.get("policy", "none"))] + lines) + "\n"
    return regenerated == original
