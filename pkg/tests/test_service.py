import json

import pytest
from fastapi.testclient import TestClient

from ciim.service import create_app


@pytest.fixture
def base_config():
    return {
        "seed": 21,
        "initial": {
            "t": 0, "threat": 0.4, "vulnerability": 0.5, "exposure": 0.6,
            "resilience": 0.5,
            "sources": {"d_hist": 0.2, "d_real": 0.3, "b_user": 0.1, "a_patterns": 0.4},
        },
        "resilience_decay": 0.02,
        "noise_amplitude": 0.01,
        "attack_rate": 0.1,
        "attack_magnitude": 0.1,
    }


@pytest.fixture
def client(tmp_path):
    app = create_app(data_dir=tmp_path)
    with TestClient(app) as c:
        c.data_dir = tmp_path
        yield c


def create(client, config, session_id="abc123"):
    response = client.post("/scenarios", json={"id": session_id, "config": config})
    assert response.status_code == 201, response.text
    return response.json()["id"]


class TestLifecycle:
    def test_create_returns_201_and_id(self, client, base_config):
        sid = create(client, base_config)
        assert sid == "abc123"
        assert (client.data_dir / "abc123.jsonl").is_file()

    def test_malformed_config_400_names_field(self, client, base_config):
        bad = dict(base_config)
        bad["kernel"] = {"perturbation_weights": [0.9, 0.9, 0.9, 0.9]}
        response = client.post("/scenarios", json={"id": "bad1", "config": bad})
        assert response.status_code == 400
        assert "kernel" in response.json()["error"]

    def test_duplicate_id_409(self, client, base_config):
        create(client, base_config, "dup1")
        response = client.post("/scenarios", json={"id": "dup1", "config": base_config})
        assert response.status_code == 409

    def test_unknown_scenario_404(self, client):
        for call in (
            lambda: client.post("/scenarios/nope/step", json={}),
            lambda: client.get("/scenarios/nope/state"),
            lambda: client.get("/scenarios/nope/attribution"),
            lambda: client.get("/scenarios/nope/recommendation"),
        ):
            assert call().status_code == 404


class TestStep:
    def test_step_advances_one_tick(self, client, base_config):
        sid = create(client, base_config)
        record = client.post(f"/scenarios/{sid}/step", json={}).json()
        assert record["tick"] == 0
        assert client.get(f"/scenarios/{sid}/state").json()["tick"] == 1

    def test_step_with_action_records_reward(self, client, base_config):
        sid = create(client, base_config)
        record = client.post(f"/scenarios/{sid}/step", json={"action": "observe"}).json()
        assert record["action"] == "observe"
        assert record["reward"] is not None

    def test_unknown_action_422(self, client, base_config):
        sid = create(client, base_config)
        response = client.post(f"/scenarios/{sid}/step", json={"action": "nuke"})
        assert response.status_code == 422

    def test_serialized_steps_increment_ticks(self, client, base_config):
        sid = create(client, base_config)
        ticks = [client.post(f"/scenarios/{sid}/step", json={}).json()["tick"] for _ in range(5)]
        assert ticks == [0, 1, 2, 3, 4]


class TestWhatIf:
    def test_state_unchanged(self, client, base_config):
        sid = create(client, base_config)
        before = client.get(f"/scenarios/{sid}/state").json()["hash"]
        response = client.post(f"/scenarios/{sid}/whatif", json={"action": "harden"})
        assert response.status_code == 200
        assert "output" in response.json() and "reward" in response.json()
        after = client.get(f"/scenarios/{sid}/state").json()["hash"]
        assert before == after

    def test_regime_flip_near_gate(self, client, base_config):
        config = dict(base_config)
        config["initial"] = dict(config["initial"], resilience=0.08)
        sid = create(client, config, "near1")
        response = client.post(f"/scenarios/{sid}/whatif", json={"action": "harden"}).json()
        assert response["output"]["kind"] == "projection"
        assert response["output"]["regime"] == "NORMAL"  # 0.08 + 0.10 clears the fragile band

    def test_unknown_action_422(self, client, base_config):
        sid = create(client, base_config)
        assert client.post(f"/scenarios/{sid}/whatif", json={"action": "zap"}).status_code == 422


class TestAttribution:
    def test_contributions_sum(self, client, base_config):
        sid = create(client, base_config)
        doc = client.get(f"/scenarios/{sid}/attribution").json()
        att = doc["attribution"]
        assert sum(att["source_contributions"]) == pytest.approx(att["perturbation_term"], abs=1e-9)
        assert doc["regime"] in ("NORMAL", "FRAGILE")
        assert "normalized_score" in doc

    def test_collapse_has_no_numeric_fields(self, client, base_config):
        config = dict(base_config)
        config["initial"] = dict(config["initial"], resilience=0.005)
        sid = create(client, config, "coll1")
        doc = client.get(f"/scenarios/{sid}/attribution").json()
        assert doc["regime"] == "COLLAPSE"
        assert "value" not in doc and "normalized_score" not in doc and "attribution" not in doc


class TestNorms:
    def test_lambda_zero_changes_recommendation(self, client, base_config):
        config = dict(base_config)
        config["initial"] = dict(config["initial"], threat=0.8, vulnerability=0.8,
                                 exposure=0.8, resilience=0.3)
        config["lambda"] = 1e6
        sid = create(client, config, "norm1")
        costly_world = client.get(f"/scenarios/{sid}/recommendation").json()
        assert costly_world["action"] == "observe"
        response = client.put(f"/scenarios/{sid}/norms", json={"lambda": 0.0})
        assert response.status_code == 200
        free_world = client.get(f"/scenarios/{sid}/recommendation").json()
        assert free_world["action"] != "observe"
        assert free_world["lambda"] == 0.0

    def test_invalid_weights_422(self, client, base_config):
        sid = create(client, base_config)
        response = client.put(f"/scenarios/{sid}/norms",
                              json={"perturbation_weights": [0.9, 0.9, 0.9, 0.9]})
        assert response.status_code == 422

    def test_read_back_exact(self, client, base_config):
        sid = create(client, base_config)
        weights = [0.25, 0.25, 0.25, 0.25]
        client.put(f"/scenarios/{sid}/norms", json={"lambda": 2.5, "perturbation_weights": weights})
        state = client.get(f"/scenarios/{sid}/state").json()
        assert state["lambda"] == 2.5
        assert state["perturbation_weights"] == weights

    def test_norm_change_is_a_trace_event(self, client, base_config):
        sid = create(client, base_config)
        client.put(f"/scenarios/{sid}/norms", json={"lambda": 0.5})
        trace = client.get(f"/scenarios/{sid}/trace").text
        kinds = [json.loads(line)["kind"] for line in trace.strip().split("\n")]
        assert "norms" in kinds


class TestTraceAndRecovery:
    def test_append_only(self, client, base_config):
        sid = create(client, base_config)
        client.post(f"/scenarios/{sid}/step", json={})
        first = client.get(f"/scenarios/{sid}/trace").text
        client.post(f"/scenarios/{sid}/step", json={"action": "patch"})
        second = client.get(f"/scenarios/{sid}/trace").text
        assert second.startswith(first)

    def test_collapse_on_the_wire_has_no_score(self, client, base_config):
        config = dict(base_config)
        config["initial"] = dict(config["initial"], resilience=0.012)
        config["resilience_decay"] = 0.05
        sid = create(client, config, "wire1")
        saw_collapse = False
        for _ in range(6):
            record = client.post(f"/scenarios/{sid}/step", json={}).json()
            if record["output"]["kind"] == "collapse":
                saw_collapse = True
                assert "value" not in record["output"]
        assert saw_collapse

    def test_restart_reconstructs_identical_state(self, client, base_config, tmp_path):
        sid = create(client, base_config)
        for _ in range(7):
            client.post(f"/scenarios/{sid}/step", json={"action": "observe"})
        client.put(f"/scenarios/{sid}/norms", json={"lambda": 0.25})
        client.post(f"/scenarios/{sid}/step", json={})
        before = client.get(f"/scenarios/{sid}/state").json()

        restarted = TestClient(create_app(data_dir=tmp_path))
        after = restarted.get(f"/scenarios/{sid}/state").json()
        assert after == before
