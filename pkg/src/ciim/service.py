"""HTTP service over the scenario engine.

One JSON Lines file per scenario under the data directory; every mutation
is an appended line, nothing is ever rewritten. Restarting the service
replays each file to reconstruct identical session state. Collapse crosses
the wire as its own variant with no score field.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .agent import greedy_immediate
from .core import Collapse, ConfigError, DomainError, normalize_score
from .scenario import ScenarioEngine
from .trace import (
    config_from_dict,
    header_line,
    norms_line,
    output_to_dict,
    read_trace,
    record_line,
    record_to_dict,
    replay_events,
    state_to_dict,
    _dumps,
)

DEFAULT_DATA_DIR = os.environ.get("CIIM_DATA_DIR", "./ciim-data")


class Session:
    def __init__(self, session_id: str, engine: ScenarioEngine, path: Path, policy: str = "api"):
        self.id = session_id
        self.engine = engine
        self.path = path
        self.policy = policy
        self.lock = threading.Lock()

    def append(self, line: str) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def state_payload(self) -> dict:
        engine = self.engine
        state_doc = state_to_dict(engine.state)
        digest = hashlib.sha256(_dumps(state_doc).encode("utf-8")).hexdigest()
        return {
            "id": self.id,
            "tick": engine.state.t,
            "state": state_doc,
            "hash": digest,
            "lambda": engine.lam,
            "perturbation_weights": list(engine.params.perturbation_weights),
        }


def _load_sessions(data_dir: Path) -> dict[str, Session]:
    sessions: dict[str, Session] = {}
    for path in sorted(data_dir.glob("*.jsonl")):
        session_id = path.stem
        config, events = read_trace(path)
        engine, _ = replay_events(config, events)
        sessions[session_id] = Session(session_id, engine, path)
    return sessions


def create_app(data_dir: str | Path | None = None, static_dir: str | Path | None = None) -> FastAPI:
    data_path = Path(data_dir if data_dir is not None else DEFAULT_DATA_DIR)
    data_path.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="ciim")
    sessions = _load_sessions(data_path)
    registry_lock = threading.Lock()

    def get_session(session_id: str) -> Session | None:
        with registry_lock:
            return sessions.get(session_id)

    @app.exception_handler(ConfigError)
    async def config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.post("/scenarios", status_code=201)
    async def create_scenario(request: Request):
        body = await request.json()
        if not isinstance(body, dict):
            raise ConfigError("request body must be a JSON object")
        session_id = body.get("id") or uuid.uuid4().hex[:12]
        if not isinstance(session_id, str) or not session_id.isalnum():
            raise ConfigError("config.id: must be an alphanumeric string")
        config = config_from_dict(body.get("config", body))
        with registry_lock:
            if session_id in sessions:
                return JSONResponse(status_code=409, content={"error": f"scenario {session_id!r} already exists"})
            path = data_path / f"{session_id}.jsonl"
            session = Session(session_id, ScenarioEngine(config), path)
            session.append(header_line(config, session.policy))
            sessions[session_id] = session
        return {"id": session_id, "tick": 0}

    @app.post("/scenarios/{session_id}/step")
    async def step_scenario(session_id: str, request: Request):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"unknown scenario {session_id!r}"})
        body = await request.json() if int(request.headers.get("content-length") or 0) else {}
        action_id = body.get("action") if isinstance(body, dict) else None
        with session.lock:
            engine = session.engine
            action = None
            if action_id is not None:
                by_id = {a.id: a for a in engine.config.catalog}
                if action_id not in by_id:
                    return JSONResponse(status_code=422, content={"error": f"unknown action {action_id!r}"})
                action = by_id[action_id]
            record = engine.step_once(action)
            session.append(record_line(record))
        return record_to_dict(record)

    @app.post("/scenarios/{session_id}/whatif")
    async def whatif(session_id: str, request: Request):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"unknown scenario {session_id!r}"})
        body = await request.json()
        action_id = body.get("action") if isinstance(body, dict) else None
        with session.lock:
            engine = session.engine
            by_id = {a.id: a for a in engine.config.catalog}
            if action_id not in by_id:
                return JSONResponse(status_code=422, content={"error": f"unknown action {action_id!r}"})
            output, reward_value = engine.whatif(by_id[action_id])
        return {"action": action_id, "output": output_to_dict(output), "reward": reward_value}

    @app.get("/scenarios/{session_id}/state")
    async def get_state(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"unknown scenario {session_id!r}"})
        with session.lock:
            return session.state_payload()

    @app.get("/scenarios/{session_id}/trace")
    async def get_trace(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"unknown scenario {session_id!r}"})
        return PlainTextResponse(session.path.read_text(encoding="utf-8"), media_type="application/jsonl")

    @app.get("/scenarios/{session_id}/attribution")
    async def get_attribution(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"unknown scenario {session_id!r}"})
        with session.lock:
            engine = session.engine
            output = engine.current_output()
            if isinstance(output, Collapse):
                return {
                    "regime": "COLLAPSE",
                    "resilience": output.resilience,
                    "message": output.message,
                }
            return {
                "regime": output.regime.value,
                "value": output.value,
                "normalized_score": normalize_score(output.value),
                "sensitivity": output.sensitivity,
                "attribution": output_to_dict(output)["attribution"],
            }

    @app.get("/scenarios/{session_id}/recommendation")
    async def get_recommendation(session_id: str):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"unknown scenario {session_id!r}"})
        with session.lock:
            engine = session.engine
            rec = greedy_immediate(engine.state, list(engine.config.catalog),
                                   engine.params, engine.lam)
        return {
            "action": rec.intervention.id,
            "expected_reward": rec.expected_reward,
            "lambda": rec.lam,
            "q_values": rec.q_values,
        }

    @app.put("/scenarios/{session_id}/norms")
    async def update_norms(session_id: str, request: Request):
        session = get_session(session_id)
        if session is None:
            return JSONResponse(status_code=404, content={"error": f"unknown scenario {session_id!r}"})
        body = await request.json()
        if not isinstance(body, dict):
            return JSONResponse(status_code=422, content={"error": "body must be a JSON object"})
        with session.lock:
            engine = session.engine
            lam = body.get("lambda", engine.lam)
            weights = body.get("perturbation_weights", engine.params.perturbation_weights)
            try:
                engine.set_norms(float(lam), weights)
            except (ConfigError, DomainError, TypeError, ValueError) as exc:
                return JSONResponse(status_code=422, content={"error": str(exc)})
            # normative changes are themselves trace events, for audit
            session.append(norms_line(engine.state.t, engine.lam,
                                      engine.params.perturbation_weights))
            return {
                "lambda": engine.lam,
                "perturbation_weights": list(engine.params.perturbation_weights),
            }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")

    return app


def serve(port: int | None = None, data_dir: str | Path | None = None,
          static_dir: str | Path | None = None) -> None:  # pragma: no cover
    import uvicorn

    if port is None:
        port = int(os.environ.get("CIIM_PORT", "8000"))
    uvicorn.run(create_app(data_dir, static_dir), host="127.0.0.1", port=port)
