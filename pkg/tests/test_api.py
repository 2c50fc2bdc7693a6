import pytest
from fastapi.testclient import TestClient

from src.api.app import app

AUTH = ("tester", "secret")


@pytest.fixture
def client(monkeypatch, tmp_path):
    monkeypatch.setattr("src.api.app.API_OUTPUT_DIR", tmp_path)
    monkeypatch.setattr("src.api.auth.API_USERNAME", AUTH[0])
    monkeypatch.setattr("src.api.auth.API_PASSWORD", AUTH[1])
    return TestClient(app)


def test_health_requires_credentials(client):
    assert client.get("/health/api-health").status_code == 401
    assert client.get("/health/api-health", auth=("tester", "wrong")).status_code == 401
    response = client.get("/health/api-health", auth=AUTH)
    assert response.status_code == 200
    assert response.json() == {"status": "API is alive"}


def test_unset_credentials_reject_everything(monkeypatch):
    monkeypatch.setattr("src.api.auth.API_USERNAME", None)
    monkeypatch.setattr("src.api.auth.API_PASSWORD", None)
    assert TestClient(app).get("/health/api-health", auth=AUTH).status_code == 401


def test_selfsim_profile(client):
    response = client.get("/selfsim/profile", params={"gamma0": 1.0, "m": 0.0, "points": 5}, auth=AUTH)
    assert response.status_code == 200
    payload = response.json()
    assert payload["solution"]["nu"] == pytest.approx(1.0 / 3.0)
    assert len(payload["profile"]) == 5
    assert payload["profile"][2][:2] == [0.0, pytest.approx(1.0 / 6.0)]


def test_selfsim_profile_singular_front_is_null(client):
    response = client.get("/selfsim/profile", params={"gamma0": 2.0, "m": 1.0, "points": 3}, auth=AUTH)
    assert response.status_code == 200
    assert response.json()["profile"][-1][2] is None


def test_selfsim_profile_without_solution(client):
    response = client.get("/selfsim/profile", params={"gamma0": 0.0, "m": 0.0}, auth=AUTH)
    assert response.status_code == 422
    assert response.json()["detail"]["code"] == "domain_error"


def test_run_experiment(client, tmp_path):
    payload = {"mode": "selfsim", "gamma0": 1.0, "m": 0.0, "profile_points": 11, "output_dir": "profiles/porous"}
    response = client.post("/experiments/", json=payload, auth=AUTH)
    assert response.status_code == 200
    body = response.json()
    assert body["exit_status"] == 0
    assert body["summary"]["status"] == "ok"
    assert body["output_dir"] == str((tmp_path / "profiles" / "porous").resolve())
    assert (tmp_path / "profiles" / "porous" / "selfsim_profile.csv").exists()


def test_run_experiment_defaults_to_mode_directory(client, tmp_path):
    response = client.post("/experiments/", json={"mode": "selfsim", "gamma0": 1.0, "m": 0.0}, auth=AUTH)
    assert response.status_code == 200
    assert (tmp_path / "selfsim" / "summary.json").exists()


@pytest.mark.parametrize("output_dir", ["/tmp/elsewhere", "../outside", "nested/../../outside", "."])
def test_run_experiment_confines_output_dir(client, tmp_path, output_dir):
    payload = {"mode": "selfsim", "gamma0": 1.0, "m": 0.0, "output_dir": output_dir}
    response = client.post("/experiments/", json=payload, auth=AUTH)
    assert response.status_code == 422
    detail = response.json()["detail"]
    assert detail["code"] == "config_error"
    assert detail["key"] == "output_dir"
    assert not (tmp_path.parent / "outside").exists()


def test_run_experiment_rejects_invalid_parameters(client):
    payload = {"mode": "simulate", "gamma": 1.0, "beta": 0.0}
    response = client.post("/experiments/", json=payload, auth=AUTH)
    assert response.status_code == 422
    assert "mapping theorem hypothesis violated" in response.json()["detail"]["message"]


def test_run_experiment_rejects_unknown_keys(client):
    payload = {"mode": "selfsim", "gamma0": 1.0, "m": 0.0, "grid": {"n_cels": 10}}
    response = client.post("/experiments/", json=payload, auth=AUTH)
    assert response.status_code == 422
    assert response.json()["detail"]["key"] == "grid.n_cels"
