import time

import pytest
from fastapi.testclient import TestClient

from ceal import data, engine, harness, service
from ceal.engine import Oracle


SMALL_SESSION = {
    "dataset": {
        "kind": "synthetic",
        "class_count": 4,
        "per_class": 25,
        "dim": 6,
        "separation": 3.0,
        "seed": 9,
    },
    "ceal": {
        "query_size": 10,
        "seed": 1,
        "train": {"learning_rate": 0.05, "epochs": 2, "batch_size": 16, "seed": 1},
    },
}


@pytest.fixture()
def client():
    app = service.create_app()
    with TestClient(app) as test_client:
        test_client.app = app
        yield test_client
    service.close_all_sessions(app)


def create_session(client, payload=None):
    response = client.post("/sessions", json=payload or SMALL_SESSION)
    assert response.status_code == 200
    return response.json()


def wait_for_phase(client, session_id, phases, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        status = client.get(f"/sessions/{session_id}/status").json()
        if status["phase"] in phases:
            return status
        time.sleep(0.005)
    raise AssertionError(f"session never reached {phases}")


def drive_with_truth(client, session_id, truth):
    """Scripted annotator that always answers ground truth."""
    batches = []
    while True:
        status = wait_for_phase(client, session_id, {"awaiting_labels", "finished"})
        if status["phase"] == "finished":
            return batches, status
        batch = client.get(f"/sessions/{session_id}/batch").json()
        ids = [item["sample_id"] for item in batch["items"]]
        batches.append(ids)
        payload = {"labels": [{"sample_id": i, "label": int(truth[i])} for i in ids]}
        response = client.post(f"/sessions/{session_id}/labels", json=payload)
        assert response.status_code == 200


def local_train_pool(spec_dict):
    spec = harness.spec_from_dict(
        {"dataset": spec_dict["dataset"], "ceal": spec_dict["ceal"]}
    )
    dataset = harness.load_source(spec.source)
    return data.split(dataset, spec.split) + (spec,)


# -- session lifecycle ----------------------------------------------------------


def test_create_session_enters_awaiting_labels(client):
    created = create_session(client)
    assert created["phase"] == "awaiting_labels"
    assert created["class_count"] == 4
    status = client.get(f"/sessions/{created['session_id']}/status").json()
    assert status["iteration"] == 0  # initialization report is in place
    assert status["test_accuracy"] is not None
    assert status["pct_labeled"] > 0


def test_duplicate_creates_are_independent_sessions(client):
    a = create_session(client)
    b = create_session(client)
    assert a["session_id"] != b["session_id"]


def test_malformed_spec_creates_nothing(client):
    response = client.post(
        "/sessions", json={"dataset": {"kind": "cloud-storage"}}
    )
    assert response.status_code == 400
    missing_file = client.post(
        "/sessions", json={"dataset": {"kind": "csv", "path": "/no/such/file.csv"}}
    )
    assert missing_file.status_code == 400
    assert client.app.state.sessions == {}


def test_unknown_session_is_404(client):
    assert client.get("/sessions/nope/status").status_code == 404
    assert client.get("/sessions/nope/batch").status_code == 404


# -- batch + labels ---------------------------------------------------------------


def test_batch_is_idempotent_and_sized(client):
    created = create_session(client)
    sid = created["session_id"]
    first = client.get(f"/sessions/{sid}/batch").json()
    second = client.get(f"/sessions/{sid}/batch").json()
    assert [i["sample_id"] for i in first["items"]] == [
        i["sample_id"] for i in second["items"]
    ]
    assert len(first["items"]) == SMALL_SESSION["ceal"]["query_size"]
    for item in first["items"]:
        assert item["label"] is None
        assert item["display"]["kind"] == "features"


def test_partial_submissions_accumulate(client):
    created = create_session(client)
    sid = created["session_id"]
    _, test_pool, _ = local_train_pool(SMALL_SESSION)
    batch = client.get(f"/sessions/{sid}/batch").json()
    ids = [item["sample_id"] for item in batch["items"]]
    r1 = client.post(
        f"/sessions/{sid}/labels",
        json={"labels": [{"sample_id": ids[0], "label": 0}]},
    )
    assert r1.status_code == 200
    assert r1.json()["remaining"] == len(ids) - 1
    refreshed = client.get(f"/sessions/{sid}/batch").json()
    assert refreshed["labeled_so_far"] == 1
    labeled_item = next(i for i in refreshed["items"] if i["sample_id"] == ids[0])
    assert labeled_item["label"] == 0


def test_rejections_are_atomic(client):
    created = create_session(client)
    sid = created["session_id"]
    batch = client.get(f"/sessions/{sid}/batch").json()
    ids = [item["sample_id"] for item in batch["items"]]
    bogus = max(ids) + 1000
    response = client.post(
        f"/sessions/{sid}/labels",
        json={"labels": [{"sample_id": ids[0], "label": 1},
                          {"sample_id": bogus, "label": 1}]},
    )
    assert response.status_code == 400
    # the good half of the rejected request must not have been applied
    ok = client.post(
        f"/sessions/{sid}/labels", json={"labels": [{"sample_id": ids[0], "label": 1}]}
    )
    assert ok.status_code == 200
    duplicate = client.post(
        f"/sessions/{sid}/labels", json={"labels": [{"sample_id": ids[0], "label": 2}]}
    )
    assert duplicate.status_code == 400
    out_of_range = client.post(
        f"/sessions/{sid}/labels", json={"labels": [{"sample_id": ids[1], "label": 9}]}
    )
    assert out_of_range.status_code == 400


def test_full_submission_advances_to_next_disjoint_batch(client):
    created = create_session(client)
    sid = created["session_id"]
    train_pool, _, _ = local_train_pool(SMALL_SESSION)
    batch = client.get(f"/sessions/{sid}/batch").json()
    ids = [item["sample_id"] for item in batch["items"]]
    response = client.post(
        f"/sessions/{sid}/labels",
        json={"labels": [{"sample_id": i, "label": int(train_pool.labels[i])} for i in ids]},
    )
    assert response.status_code == 200
    status = wait_for_phase(client, sid, {"awaiting_labels"})
    assert status["iteration"] == 1
    next_batch = client.get(f"/sessions/{sid}/batch").json()
    next_ids = [item["sample_id"] for item in next_batch["items"]]
    assert not set(ids) & set(next_ids)


def test_finished_session_rejects_batch_requests(client):
    payload = {
        "dataset": {**SMALL_SESSION["dataset"], "per_class": 10},
        "ceal": {**SMALL_SESSION["ceal"], "query_size": 50},
    }
    created = create_session(client, payload)
    sid = created["session_id"]
    train_pool, _, _ = local_train_pool(payload)
    batches, status = drive_with_truth(client, sid, train_pool.labels)
    assert status["phase"] == "finished"
    assert status["pct_labeled"] == 1.0
    assert len(status["history"]) == len(batches) + 1
    assert client.get(f"/sessions/{sid}/batch").status_code == 409


def test_status_mirrors_latest_report(client):
    created = create_session(client)
    sid = created["session_id"]
    status = client.get(f"/sessions/{sid}/status").json()
    latest = status["history"][-1]
    for key in ("pct_labeled", "test_accuracy", "delta", "pseudo_count",
                "pseudo_error_rate", "annotations_cumulative"):
        assert status[key] == latest[key]


# -- scripted ground-truth client matches the simulated oracle ----------------------


class RecordingOracle(Oracle):
    def __init__(self, dataset):
        self.truth = dataset.labels
        self.batches = []

    def label_batch(self, sample_ids, scores=None):
        self.batches.append(list(sample_ids))
        return [int(self.truth[i]) for i in sample_ids]


def test_scripted_client_matches_simulated_run(client):
    created = create_session(client)
    sid = created["session_id"]
    train_pool, test_set, spec = local_train_pool(SMALL_SESSION)
    batches, status = drive_with_truth(client, sid, train_pool.labels)

    oracle = RecordingOracle(train_pool)
    reports = engine.run(
        train_pool, spec.ceal, oracle,
        init_fraction=spec.split.init_fraction, test_set=test_set,
    )
    # first recorded call is the (preloaded) seed batch; the rest must
    # match what the human was shown, in order
    assert oracle.batches[1:] == batches
    history = [engine.IterationReport(**h) for h in status["history"]]
    assert history == reports
