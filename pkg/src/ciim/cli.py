"""Batch entry points: simulate, score, train, serve, replay.

Exit codes: 0 success, 1 assertion/acceptance failure, 2 usage or config
error. stdout carries data (JSON), stderr carries diagnostics.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .agent import (
    AgentConfig,
    QTable,
    FiniteMdp,
    train_agent,
    train_agent_mdp,
    value_iteration,
)
from .classifier import train_stumps
from .core import ConfigError, DomainError, KernelParams, eval_ciim
from .forecaster import (
    Ar1Model,
    GruCellParams,
    SeriesWindow,
    TrainConfig,
    one_step_loss,
    train_forecaster,
)
from .scenario import AgentPolicy, NullPolicy, ScenarioEnv, ScriptedPolicy, run, features_from_records
from .trace import (
    config_from_dict,
    output_to_dict,
    read_trace,
    state_from_dict,
    verify_replay,
    write_trace,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _fail(message: str, code: int = EXIT_USAGE) -> int:
    print(message, file=sys.stderr)
    return code


def _load_json(path: str):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return json.loads(p.read_text(encoding="utf-8"))


def _records_from_trace(path: str):
    """Parse a trace file back into TraceRecord-shaped tuples good enough
    for training (pre-states, outputs, forecasts, levels)."""
    from .classifier import RiskLevel
    from .core import Attribution, Collapse, Projection, Regime
    from .forecaster import CHANNELS, Forecast
    from .scenario import TraceRecord

    config, events = read_trace(path)
    records = []
    for event in events:
        if event.get("kind") != "record":
            continue
        out = event["output"]
        if out["kind"] == "collapse":
            output = Collapse(resilience=out["resilience"], message=out["message"])
        else:
            att = out["attribution"]
            output = Projection(
                value=out["value"],
                regime=Regime(out["regime"]),
                sensitivity=out["sensitivity"],
                attribution=Attribution(
                    threat_term=att["threat_term"],
                    perturbation_term=att["perturbation_term"],
                    source_contributions=tuple(att["source_contributions"]),
                ),
            )
        predicted = np.array([event["forecast"]["predicted"][c] for c in CHANNELS])
        records.append(TraceRecord(
            tick=event["tick"],
            pre_state=state_from_dict(event["pre_state"]),
            action=event.get("action"),
            forecast=Forecast(predicted=predicted, model_id=event["forecast"]["model_id"]),
            output=output,
            baseline=event["baseline"],
            level=RiskLevel[event["level"]],
            reward=event.get("reward"),
            divergence=bool(event.get("divergence")),
        ))
    return config, records


def cmd_simulate(args) -> int:
    try:
        config = config_from_dict(_load_json(args.config))
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        if args.policy == "none":
            policy = NullPolicy()
        elif args.policy == "scripted":
            script = [s if s != "-" else None for s in (args.script or "").split(",") if s != ""]
            policy = ScriptedPolicy(script, config.catalog)
        else:
            if args.qtable:
                table = QTable.from_json(Path(args.qtable).read_text(encoding="utf-8"))
            else:
                table = QTable.zeros(list(config.catalog))
            policy = AgentPolicy(table)
        records = run(config, args.ticks, policy)
    except (ConfigError, DomainError, FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        return _fail(f"simulate: {exc}")
    write_trace(args.out, config, records, args.policy)
    print(json.dumps({"ticks": len(records), "out": args.out}))
    return EXIT_OK


def cmd_score(args) -> int:
    try:
        doc = _load_json(args.state)
        kernel_doc = doc.get("params", {})
        params = KernelParams(
            a=float(kernel_doc.get("a", 1.0)),
            alpha=float(kernel_doc.get("alpha", 0.5)),
            r_min=float(kernel_doc.get("r_min", 0.01)),
            r_fragile=float(kernel_doc.get("r_fragile", 0.15)),
            perturbation_weights=tuple(kernel_doc.get("perturbation_weights", (0.4, 0.3, 0.2, 0.1))),
        )
        state = state_from_dict(doc["state"])
        p_next = doc.get("p_next")
        output = eval_ciim(state, None if p_next is None else float(p_next), params)
    except (ConfigError, DomainError, FileNotFoundError, json.JSONDecodeError,
            KeyError, TypeError, ValueError) as exc:
        return _fail(f"score: {exc}")
    print(json.dumps(output_to_dict(output)))
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        if args.what == "forecaster":
            _, records = _records_from_trace(args.trace)
            window = SeriesWindow.from_states([r.pre_state for r in records])
            model = train_forecaster(window, TrainConfig(seed=args.seed))
            mse = one_step_loss(model, window)
            if args.out:
                Path(args.out).write_text(model.to_json(), encoding="utf-8")
            print(json.dumps({"what": "forecaster", "mse": mse, "out": args.out}))
            return EXIT_OK

        if args.what == "classifier":
            _, records = _records_from_trace(args.trace)
            features, labels = features_from_records(records)
            ensemble = train_stumps(features, labels, rounds=25, seed=args.seed)
            agreement = float(np.mean([
                ensemble.predict(x) == y for x, y in zip(features, labels)
            ]))
            if args.out:
                Path(args.out).write_text(ensemble.to_json(), encoding="utf-8")
            print(json.dumps({"what": "classifier", "agreement": agreement, "out": args.out}))
            return EXIT_OK

        # agent: either a frozen finite-MDP fixture (checked against the
        # value-iteration oracle) or a scenario config to learn against.
        doc = _load_json(args.trace)
        if isinstance(doc, dict) and doc.get("format") == "finite-mdp":
            mdp = FiniteMdp.from_json(json.dumps(doc))
            config = AgentConfig(lam=mdp.lam, seed=args.seed)
            q = train_agent_mdp(mdp, config)
            q_star, oracle_policy = value_iteration(mdp, config.discount)
            learned_policy = np.argmax(q, axis=1)
            matches = bool(np.array_equal(learned_policy, oracle_policy))
            table = QTable(q=q, counts=np.zeros(q.shape, dtype=np.int64),
                           action_ids=list(mdp.action_ids))
            if args.out:
                Path(args.out).write_text(table.to_json(), encoding="utf-8")
            print(json.dumps({
                "what": "agent",
                "policy_matches_oracle": matches,
                "max_q_error": float(np.max(np.abs(q - q_star))),
                "out": args.out,
            }))
            print(f"policy matches oracle: {str(matches).lower()}", file=sys.stderr)
            return EXIT_OK if matches else EXIT_FAIL

        config = config_from_dict(doc.get("config", doc) if isinstance(doc, dict) else doc)
        env = ScenarioEnv(config)
        agent_config = AgentConfig(lam=config.lam, episodes=args.episodes, seed=args.seed)
        table = train_agent(env, list(config.catalog), agent_config)
        if args.out:
            Path(args.out).write_text(table.to_json(), encoding="utf-8")
        print(json.dumps({"what": "agent", "episodes": agent_config.episodes, "out": args.out}))
        return EXIT_OK
    except (ConfigError, DomainError, FileNotFoundError, json.JSONDecodeError,
            KeyError, TypeError, ValueError) as exc:
        return _fail(f"train: {exc}")


def cmd_serve(args) -> int:  # pragma: no cover
    from .service import serve

    serve(port=args.port, data_dir=args.data_dir, static_dir=args.static)
    return EXIT_OK


def cmd_replay(args) -> int:
    path = Path(args.trace)
    if not path.is_file():
        return _fail(f"replay: no such file: {args.trace}")
    try:
        ok = verify_replay(path)
    except (ConfigError, DomainError, json.JSONDecodeError, KeyError) as exc:
        return _fail(f"replay: trace is not well-formed: {exc}")
    print(json.dumps({"trace": str(path), "reproduced": ok}))
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ciim")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write its trace")
    p.add_argument("--config", required=True)
    p.add_argument("--ticks", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--policy", choices=("none", "agent", "scripted"), default="none")
    p.add_argument("--script", default=None, help="comma-separated action ids for --policy scripted ('-' for none)")
    p.add_argument("--qtable", default=None, help="trained q-table JSON for --policy agent")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", help="evaluate the kernel on one state file")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", help="train the forecaster, classifier or agent")
    p.add_argument("--what", choices=("forecaster", "classifier", "agent"), required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=2000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--static", default=None, help="directory with the web console build")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("replay", help="verify a trace reproduces byte-for-byte")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
