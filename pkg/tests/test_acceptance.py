"""Acceptance suite: one test per criterion, each printing a pass/fail line
(run with -s to see them). Tolerances are fixed here, not configurable."""

import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
from fastapi.testclient import TestClient

from ciim.agent import AgentConfig, frozen_test_mdp, train_agent_mdp, value_iteration
from ciim.classifier import RiskLevel, threshold_classify, train_stumps
from ciim.cli import main
from ciim.core import (
    Collapse,
    KernelParams,
    PerturbationSources,
    Projection,
    Regime,
    RiskState,
    aggregate_perturbation,
    eval_ciim,
)
from ciim.forecaster import (
    GruCellParams,
    PARAM_NAMES,
    SeriesWindow,
    TrainConfig,
    loss_and_gradients,
    one_step_loss,
    train_forecaster,
)
from ciim.service import create_app
from ciim.trace import output_to_dict

from test_classifier import oracle_dataset

FIXTURES = Path(__file__).parent / "fixtures"


def report(number: int, name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance {number:02d}] {name}: {status}{suffix}")
    assert ok, f"acceptance criterion {number} ({name}) failed{suffix}"


def random_states(rng, n, r_low=0.0105):
    t = rng.uniform(size=n)
    v = rng.uniform(size=n)
    e = rng.uniform(size=n)
    r = rng.uniform(r_low, 1.0, size=n)
    p = rng.uniform(size=n)
    return t, v, e, r, p


def test_01_kernel_oracle():
    rng = np.random.default_rng(1)
    params = KernelParams(a=1.6, alpha=0.45)
    t, v, e, r, p = random_states(rng, 10_000)
    start = time.perf_counter()
    worst = 0.0
    for i in range(10_000):
        out = eval_ciim(
            RiskState(threat=t[i], vulnerability=v[i], exposure=e[i], resilience=r[i]),
            p[i], params,
        )
        # independent direct-arithmetic oracle of the defining equation
        expected = params.a * t[i] * v[i] * e[i] / r[i] + params.alpha * p[i]
        worst = max(worst, abs(out.value - expected) / max(abs(expected), 1e-300))
    elapsed = time.perf_counter() - start
    report(1, "kernel matches direct-arithmetic oracle", worst <= 1e-12 and elapsed < 1.0,
           f"worst rel {worst:.2e}, {elapsed:.2f}s")


def test_02_no_smoothing():
    params = KernelParams()
    r_min = params.r_min
    grid = [r_min * (1 - 1e-6), r_min, r_min * (1 + 1e-6), r_min / 2, 2 * r_min,
            r_min / 10, 0.05, 0.15, 0.5, 1.0]
    ok = True
    for r in grid:
        out = eval_ciim(RiskState(threat=0.5, vulnerability=0.5, exposure=0.5,
                                  resilience=r), 0.5, params)
        if r <= r_min:
            ok &= isinstance(out, Collapse)
            doc = output_to_dict(out)
            ok &= doc["kind"] == "collapse"
            ok &= not any(k in doc for k in ("value", "sensitivity", "attribution"))
        else:
            ok &= isinstance(out, Projection)
    report(2, "output variant flips exactly at the collapse threshold", ok)


def test_03_monotonicity():
    rng = np.random.default_rng(3)
    params = KernelParams()
    violations = 0
    for _ in range(2000):
        t, v, e, r, p = (float(x[0]) for x in random_states(rng, 1, r_low=0.0101))
        base = eval_ciim(RiskState(threat=t, vulnerability=v, exposure=e, resilience=r),
                         p, params).value
        delta = float(rng.uniform(0.0, 0.3))

        def val(tt=t, vv=v, ee=e, rr=r, pp=p):
            return eval_ciim(RiskState(threat=min(tt, 1.0), vulnerability=min(vv, 1.0),
                                       exposure=min(ee, 1.0), resilience=min(rr, 1.0)),
                             min(pp, 1.0), params).value

        if val(tt=t + delta) < base: violations += 1
        if val(vv=v + delta) < base: violations += 1
        if val(ee=e + delta) < base: violations += 1
        if val(pp=p + delta) < base: violations += 1
        if val(rr=r + delta) > base: violations += 1
    report(3, "projection monotone up in T/V/E/P and down in R",
           violations == 0, f"{violations} violations over 10000 pairs")


def test_04_attribution():
    rng = np.random.default_rng(4)
    params = KernelParams(alpha=0.7)
    worst = 0.0
    for _ in range(10_000):
        state = RiskState(
            threat=float(rng.uniform()), vulnerability=float(rng.uniform()),
            exposure=float(rng.uniform()), resilience=float(rng.uniform(0.0105, 1.0)),
            sources=PerturbationSources(*(float(x) for x in rng.uniform(size=4))),
        )
        out = eval_ciim(state, params=params)
        att = out.attribution
        worst = max(worst, abs(out.value - (att.threat_term + sum(att.source_contributions))))
    report(4, "value = threat term + sum of source contributions",
           worst <= 1e-9, f"worst abs {worst:.2e}")


def test_05_forecaster_gradients_and_training():
    worst = 0.0
    h = 1e-5
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        window = SeriesWindow(rng.uniform(0.05, 0.95, size=(8, 8)))
        params = GruCellParams.init(seed, 4)
        grads, _ = loss_and_gradients(params, window)
        for name in PARAM_NAMES:
            arr = params.weights[name]
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                up = one_step_loss(params, window)
                arr[idx] = orig - h
                down = one_step_loss(params, window)
                arr[idx] = orig
                fd = (up - down) / (2 * h)
                g = grads[name][idx]
                worst = max(worst, abs(fd - g) / max(abs(fd), abs(g), 1e-6))
    grads_ok = worst <= 1e-4

    row = np.array([0.3, 0.4, 0.5, 0.6, 0.2, 0.1, 0.7, 0.8])
    window = SeriesWindow(np.tile(row, (20, 1)))
    start = time.perf_counter()
    model = train_forecaster(window, TrainConfig(learning_rate=0.05, epochs=200, seed=0))
    elapsed = time.perf_counter() - start
    mse = one_step_loss(model, window)
    report(5, "analytic gradients match finite differences; constant series learnable",
           grads_ok and mse < 1e-3 and elapsed < 5.0,
           f"worst rel {worst:.2e}, mse {mse:.2e}, {elapsed:.2f}s")


def test_06_classifier():
    X, y = oracle_dataset(seed=42, n=500)
    ensemble = train_stumps(X, y, rounds=25)
    agreement = float(np.mean([ensemble.predict(x) == t for x, t in zip(X, y)]))
    override_ok = all(
        threshold_classify(float(s), Regime.COLLAPSE) is RiskLevel.CRITICAL
        for s in np.linspace(0.0, 10.0, 201)
    )
    report(6, "boosted stumps agree with threshold oracle; collapse override total",
           agreement >= 0.95 and override_ok, f"agreement {agreement:.3f}")


def test_07_agent_optimality():
    mdp = frozen_test_mdp(1.0)
    q_star, oracle_policy = value_iteration(mdp, 0.9)
    start = time.perf_counter()
    q = train_agent_mdp(mdp, AgentConfig(episodes=10_000, seed=7))
    elapsed = time.perf_counter() - start
    policy_ok = bool(np.array_equal(np.argmax(q, axis=1), oracle_policy))
    q_err = float(np.max(np.abs(q - q_star)))
    report(7, "greedy policy equals value iteration on the frozen MDP",
           policy_ok and q_err < 1e-2 and elapsed < 10.0,
           f"max q err {q_err:.2e}, {elapsed:.2f}s")


def test_08_mediational_gap(tmp_path):
    config_doc = {
        "seed": 0,
        "initial": {"t": 0, "threat": 0.5, "vulnerability": 0.5, "exposure": 0.5,
                    "resilience": 0.5,
                    "sources": {"d_hist": 0.2, "d_real": 0.2, "b_user": 0.2, "a_patterns": 0.2}},
        "resilience_decay": 0.05,
    }
    config_path = tmp_path / "decay.json"
    config_path.write_text(json.dumps(config_doc))
    out = tmp_path / "decay.jsonl"
    assert main(["simulate", "--config", str(config_path), "--ticks", "11",
                 "--out", str(out)]) == 0
    records = [json.loads(l) for l in out.read_text().strip().split("\n")[1:]]
    baselines = [r["baseline"] for r in records]
    regimes = []
    for r in records:
        regimes.append("COLLAPSE" if r["output"]["kind"] == "collapse"
                       else r["output"]["regime"])
    seen = [g for i, g in enumerate(regimes) if i == 0 or regimes[i - 1] != g]
    gap_ok = (float(np.var(baselines)) == 0.0
              and seen == ["NORMAL", "FRAGILE", "COLLAPSE"]
              and regimes.index("COLLAPSE") <= 10)
    report(8, "static baseline flat while regimes decay NORMAL->FRAGILE->COLLAPSE",
           gap_ok, f"regime path {seen}, baseline var {np.var(baselines)}")


def test_09_replay_and_recovery(tmp_path):
    config_doc = {
        "seed": 9,
        "initial": {"t": 0, "threat": 0.4, "vulnerability": 0.5, "exposure": 0.6,
                    "resilience": 0.6,
                    "sources": {"d_hist": 0.2, "d_real": 0.3, "b_user": 0.1, "a_patterns": 0.4}},
        "resilience_decay": 0.001,
        "noise_amplitude": 0.02,
        "attack_rate": 0.1,
        "attack_magnitude": 0.1,
    }
    config_path = tmp_path / "cfg.json"
    config_path.write_text(json.dumps(config_doc))
    out = tmp_path / "long.jsonl"
    assert main(["simulate", "--config", str(config_path), "--ticks", "1000",
                 "--out", str(out)]) == 0
    replay_ok = main(["replay", "--trace", str(out)]) == 0

    data_dir = tmp_path / "svc"
    client = TestClient(create_app(data_dir=data_dir))
    created = client.post("/scenarios", json={"id": "acc9", "config": config_doc})
    assert created.status_code == 201
    for i in range(10):
        client.post("/scenarios/acc9/step", json={"action": "observe" if i % 2 else None})
    before = client.get("/scenarios/acc9/state").json()
    restarted = TestClient(create_app(data_dir=data_dir))
    after = restarted.get("/scenarios/acc9/state").json()
    report(9, "1000-tick trace replays byte-for-byte; restart rebuilds state",
           replay_ok and before == after)


def test_10_norm_legibility():
    config = AgentConfig(episodes=4000, seed=11)
    recommendations = {}
    for lam in (0.0, 1e6):
        mdp = frozen_test_mdp(lam)
        q = train_agent_mdp(mdp, replace(config, lam=lam))
        # recommendation for the decaying HIGH state
        recommendations[lam] = mdp.action_ids[int(np.argmax(q[1]))]
    ok = recommendations[0.0] == "harden" and recommendations[1e6] == "observe"
    report(10, "lambda 0 vs 1e6 flips costly-action recommendation to observe",
           ok, f"{recommendations}")
