from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from nbrmask.cli import main as cli_main
from nbrmask.dataset import schema_to_json, to_csv_text, write_csv
from nbrmask.server import create_app

from conftest import employee_dataset

PARAMS_A = {"mode": {"eps": 0.3}, "q": 1.0,
            "weights": {"sex": 0.2}, "seed": 42, "block_sampling": True}
PARAMS_B = {"mode": {"eps": 0.6}, "q": 1.0,
            "weights": {"sex": 0.3}, "seed": 42, "block_sampling": True}
REGRESSION = {"target": "wage", "predictors": ["age", "sex", "wkswrkd"]}
PREDICATE = [{"col": "sex", "op": "=", "value": "2"},
             {"col": "age", "op": "<", "value": 24}]


@pytest.fixture
def dataset():
    return employee_dataset(400, seed=1)


@pytest.fixture
def client():
    return TestClient(create_app())


def upload(client, dataset, schema=True):
    if schema:
        body = {"csv": to_csv_text(dataset),
                "schema": json.loads(schema_to_json(dataset.schema))}
        r = client.post("/api/v1/datasets", json=body)
    else:
        r = client.post("/api/v1/datasets", content=to_csv_text(dataset),
                        headers={"content-type": "text/csv"})
    assert r.status_code == 200, r.text
    return r.json()


def test_upload_echoes_schema(client, dataset):
    info = upload(client, dataset)
    assert info["n"] == 400 and info["p"] == 4
    kinds = {c["name"]: c["kind"] for c in info["schema"]}
    assert kinds["sex"] == "categorical"
    info2 = upload(client, dataset, schema=False)
    kinds2 = {c["name"]: c["kind"] for c in info2["schema"]}
    assert kinds2["sex"] == "continuous"  # inferred without a schema


def test_upload_rejects_ragged_and_empty(client):
    r = client.post("/api/v1/datasets", content="a,b\n1,2\n3\n",
                    headers={"content-type": "text/csv"})
    assert r.status_code == 400
    r = client.post("/api/v1/datasets", content="",
                    headers={"content-type": "text/csv"})
    assert r.status_code == 400


def test_unknown_session_404(client):
    assert client.get("/api/v1/sessions/nope").status_code == 404
    assert client.get("/api/v1/sessions/nope/runs").status_code == 404
    r = client.post("/api/v1/sessions/nope/runs", json={"params": PARAMS_A})
    assert r.status_code == 404


def test_two_runs_history_and_reports(client, dataset):
    sid = upload(client, dataset)["session_id"]
    for params in (PARAMS_A, PARAMS_B):
        r = client.post(f"/api/v1/sessions/{sid}/runs", json={
            "params": params, "regression": REGRESSION,
            "predicates": [PREDICATE]})
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["summary"]["total"] == 400
        assert len(body["utility"]["coefficients"]) == 4
        assert body["risk"][0]["predicate"] == PREDICATE
    listing = client.get(f"/api/v1/sessions/{sid}/runs").json()
    assert [run["run_id"] for run in listing] == [1, 2]
    assert listing[0]["params"]["mode"] == {"eps": 0.3}
    assert listing[1]["params"]["weights"] == {"sex": 0.3}
    detail = client.get(f"/api/v1/sessions/{sid}/runs/2").json()
    assert detail["utility"]["model"] == "wage ~ age + sex + wkswrkd"
    assert client.get(f"/api/v1/sessions/{sid}/runs/9").status_code == 404


def test_release_download_matches_cli_bytes(client, dataset, tmp_path):
    sid = upload(client, dataset)["session_id"]
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={"params": PARAMS_A})
    assert r.status_code == 200
    release = client.get(f"/api/v1/sessions/{sid}/runs/1/release.csv")
    assert release.status_code == 200

    write_csv(dataset, str(tmp_path / "in.csv"))
    (tmp_path / "schema.json").write_text(schema_to_json(dataset.schema))
    (tmp_path / "params.json").write_text(json.dumps(PARAMS_A))
    assert cli_main(["mask", "--input", str(tmp_path / "in.csv"),
                     "--schema", str(tmp_path / "schema.json"),
                     "--params", str(tmp_path / "params.json"),
                     "--out", str(tmp_path / "out.csv")]) == 0
    assert release.text == (tmp_path / "out.csv").read_text()


def test_validation_errors_are_422_with_fields(client, dataset):
    sid = upload(client, dataset)["session_id"]
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={
        "params": {"mode": {"eps": 0.3}, "q": 2.0}})
    assert r.status_code == 422
    assert r.json()["detail"][0]["field"] == "q"
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={
        "params": PARAMS_A,
        "predicates": [[{"col": "nope", "op": "=", "value": 1}]]})
    assert r.status_code == 422
    assert r.json()["detail"][0]["field"] == "predicates[0]"
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={
        "params": PARAMS_A, "regression": {"target": "wage", "predictors": ["zz"]}})
    assert r.status_code == 422
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={})
    assert r.status_code == 422
    assert r.json()["detail"][0]["field"] == "params"


def test_presence_request(client, dataset):
    sid = upload(client, dataset)["session_id"]
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={
        "params": PARAMS_A, "presence": {"column": "sex", "value": "2"}})
    assert r.status_code == 200
    presence = r.json()["presence"]
    assert presence["column"] == "sex" and not presence["hazard"]
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={
        "params": PARAMS_A, "presence": {"column": "age", "value": "2"}})
    assert r.status_code == 422


def test_distance_quantiles_endpoint(client, dataset):
    sid = upload(client, dataset)["session_id"]
    r = client.post(f"/api/v1/sessions/{sid}/distance-quantiles", json={
        "quantiles": [0.005, 0.05, 0.5], "weights": {"sex": 0.2}})
    assert r.status_code == 200
    eps = r.json()["eps"]
    assert len(eps) == 3 and eps[0] < eps[1] < eps[2]
    r = client.post(f"/api/v1/sessions/{sid}/distance-quantiles", json={
        "weights": {"zz": 1.0}})
    assert r.status_code == 422


def test_readonly_mode_rejects_mutations(dataset):
    client = TestClient(create_app(readonly=True))
    r = client.post("/api/v1/datasets", content="a\n1\n2\n",
                    headers={"content-type": "text/csv"})
    assert r.status_code == 405


def test_row_cap_refuses_with_413(dataset):
    client = TestClient(create_app(row_cap=100))
    sid = upload(client, dataset)["session_id"]
    r = client.post(f"/api/v1/sessions/{sid}/runs", json={"params": PARAMS_A})
    assert r.status_code == 413
    assert "CLI" in r.json()["detail"]


def test_audit_endpoint_gated(dataset):
    open_client = TestClient(create_app(audit_enabled=True))
    sid = upload(open_client, dataset)["session_id"]
    open_client.post(f"/api/v1/sessions/{sid}/runs", json={"params": PARAMS_A})
    r = open_client.get(f"/api/v1/sessions/{sid}/runs/1/audit")
    assert r.status_code == 200
    first = json.loads(r.text.splitlines()[0])
    assert first["fate"] in ("resampled", "suppressed",
                             "passthrough_random", "passthrough_incomplete")

    closed_client = TestClient(create_app())
    sid = upload(closed_client, dataset)["session_id"]
    closed_client.post(f"/api/v1/sessions/{sid}/runs", json={"params": PARAMS_A})
    assert closed_client.get(f"/api/v1/sessions/{sid}/runs/1/audit").status_code == 404


def test_release_never_leaks_provenance(client, dataset):
    sid = upload(client, dataset)["session_id"]
    client.post(f"/api/v1/sessions/{sid}/runs", json={"params": PARAMS_A})
    detail = client.get(f"/api/v1/sessions/{sid}/runs/1").json()
    assert "audit_jsonl" not in detail and "release_csv" not in detail
    release = client.get(f"/api/v1/sessions/{sid}/runs/1/release.csv").text
    assert "fate" not in release.splitlines()[0]


def test_sessions_are_isolated(client, dataset):
    sid_a = upload(client, dataset)["session_id"]
    sid_b = upload(client, employee_dataset(50, seed=9))["session_id"]
    client.post(f"/api/v1/sessions/{sid_a}/runs", json={"params": PARAMS_A})
    assert client.get(f"/api/v1/sessions/{sid_b}/runs").json() == []
    assert client.get(f"/api/v1/sessions/{sid_b}").json()["n"] == 50


def test_persistence_restores_sessions(dataset, tmp_path):
    store = tmp_path / "store"
    app = create_app(data_dir=str(store))
    client = TestClient(app)
    sid = upload(client, dataset)["session_id"]
    client.post(f"/api/v1/sessions/{sid}/runs", json={
        "params": PARAMS_A, "regression": REGRESSION})
    release = client.get(f"/api/v1/sessions/{sid}/runs/1/release.csv").text

    revived = TestClient(create_app(data_dir=str(store)))
    info = revived.get(f"/api/v1/sessions/{sid}").json()
    assert info["n"] == 400 and info["runs"] == 1
    assert revived.get(f"/api/v1/sessions/{sid}/runs/1/release.csv").text == release
    detail = revived.get(f"/api/v1/sessions/{sid}/runs/1").json()
    assert detail["utility"]["model"] == "wage ~ age + sex + wkswrkd"
