import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ccmtune import decode_image, encode_display
from ccmtune.optimizer import config_to_dict, TuneConfig
from ccmtune.objective import PromptSpec
from ccmtune.service import JobStore, ServiceConfig, create_app
from ccmtune.service.config import BackendSpec, ServiceConfigError, load_service_config

from conftest import gray_world_image


def tune_config_doc(**overrides):
    doc = config_to_dict(TuneConfig(objective=PromptSpec("B", "warm"),
                                    iterations=30, snapshot_every=10, seed=0))
    doc.update(overrides)
    return doc


@pytest.fixture
def service_config(tmp_path):
    return ServiceConfig(data_dir=tmp_path / "data", workers=2, queue_limit=64)


@pytest.fixture
def client(service_config):
    app = create_app(service_config)
    with TestClient(app) as c:
        yield c


def submit(client, image_bytes, doc):
    return client.post("/v1/jobs",
                       files={"image": ("input.png", image_bytes, "image/png")},
                       data={"config": json.dumps(doc)})


def wait_done(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        doc = client.get(f"/v1/jobs/{job_id}").json()
        if doc["status"] in ("done", "failed"):
            return doc
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} did not finish")


@pytest.fixture
def small_png(rng):
    return encode_display(gray_world_image(rng, side=48))


class TestHealthAndBackends:

    def test_healthz(self, client):
        assert client.get("/v1/healthz").json() == {"status": "ok"}

    def test_backends_lists_synthetic(self, client):
        doc = client.get("/v1/backends").json()
        assert doc[0]["name"] == "synthetic"
        assert doc[0]["available"] is True
        assert doc[0]["descriptor"]["embed_dim"] == 8


class TestSubmitAndRoundTrip:

    def test_full_round_trip(self, client, small_png):
        resp = submit(client, small_png, tune_config_doc())
        assert resp.status_code == 202
        job_id = resp.json()["id"]

        queued = client.get(f"/v1/jobs/{job_id}").json()
        assert queued["status"] in ("queued", "running", "done")
        assert queued["progress"]["total"] == 30

        final = wait_done(client, job_id)
        assert final["status"] == "done"
        assert final["progress"]["iteration"] == 30

        lines = client.get(f"/v1/jobs/{job_id}/trajectory").text.strip().split("\n")
        assert len(lines) == 31
        first = json.loads(lines[0])
        assert first["iter"] == 0

        matrix_doc = client.get(f"/v1/jobs/{job_id}/matrix").json()
        assert matrix_doc["version"] == 1
        sums = [sum(row) for row in matrix_doc["matrix"]]
        assert all(abs(s - 1) < 1e-9 for s in sums)

        preview = client.get(f"/v1/jobs/{job_id}/preview")
        assert preview.status_code == 200
        assert preview.headers["content-type"] == "image/png"

    def test_preview_iter_zero_is_input(self, client, small_png):
        job_id = submit(client, small_png, tune_config_doc()).json()["id"]
        wait_done(client, job_id)
        preview = client.get(f"/v1/jobs/{job_id}/preview", params={"iter": 0})
        out = decode_image(preview.content)
        src = decode_image(small_png)
        assert np.array_equal(out.samples, src.samples)

    def test_preview_between_snapshots_uses_earlier(self, client, small_png):
        job_id = submit(client, small_png, tune_config_doc()).json()["id"]
        wait_done(client, job_id)
        at_10 = client.get(f"/v1/jobs/{job_id}/preview", params={"iter": 10})
        at_14 = client.get(f"/v1/jobs/{job_id}/preview", params={"iter": 14})
        assert at_10.content == at_14.content

    def test_apply_reproduces_preview_bytes(self, client, small_png):
        job_id = submit(client, small_png, tune_config_doc()).json()["id"]
        wait_done(client, job_id)
        matrix_text = json.dumps(client.get(f"/v1/jobs/{job_id}/matrix").json())
        # The job stores a canonical PNG of its input; /v1/apply on that
        # image with the job's matrix must match the final preview exactly.
        stored_input = client.app.state.store.get(job_id).dir / "input.png"
        applied = client.post(
            "/v1/apply",
            files={"image": ("input.png", stored_input.read_bytes(), "image/png")},
            data={"matrix": matrix_text})
        preview = client.get(f"/v1/jobs/{job_id}/preview")
        assert applied.status_code == 200
        assert applied.content == preview.content

    def test_events_stream_reaches_status(self, client, small_png):
        job_id = submit(client, small_png, tune_config_doc()).json()["id"]
        wait_done(client, job_id)
        seen_record = False
        seen_status = False
        with client.stream("GET", f"/v1/jobs/{job_id}/events") as resp:
            for line in resp.iter_lines():
                if line.startswith("event: record"):
                    seen_record = True
                if line.startswith("event: status"):
                    seen_status = True
                    break
        assert seen_record and seen_status

    def test_list_jobs_newest_first(self, client, small_png):
        ids = [submit(client, small_png, tune_config_doc(iterations=1)).json()["id"]
               for _ in range(3)]
        for job_id in ids:
            wait_done(client, job_id)
        listed = client.get("/v1/jobs").json()
        assert [j["id"] for j in listed[:3]] == list(reversed(ids))
        limited = client.get("/v1/jobs", params={"limit": 1, "offset": 1}).json()
        assert limited[0]["id"] == ids[1]


class TestValidation:

    def test_negative_tau_field_level_400(self, client, small_png):
        resp = submit(client, small_png, tune_config_doc(tau=-1))
        assert resp.status_code == 400
        assert resp.json()["detail"]["field"] == "tau"

    def test_bad_image_400(self, client):
        resp = submit(client, b"not a png", tune_config_doc())
        assert resp.status_code == 400
        assert resp.json()["detail"]["field"] == "image"

    def test_unknown_backend_400(self, client, small_png):
        resp = submit(client, small_png, tune_config_doc(backend="nope"))
        assert resp.status_code == 400
        assert resp.json()["detail"]["field"] == "backend"

    def test_unknown_job_404(self, client):
        assert client.get("/v1/jobs/deadbeef").status_code == 404
        assert client.get("/v1/jobs/deadbeef/preview").status_code == 404
        assert client.get("/v1/jobs/deadbeef/matrix").status_code == 404

    def test_apply_malformed_matrix_400(self, client, small_png):
        resp = client.post("/v1/apply",
                           files={"image": ("a.png", small_png, "image/png")},
                           data={"matrix": "{bad json"})
        assert resp.status_code == 400

    def test_apply_row_sum_violation_422(self, client, small_png):
        bad = json.dumps({"version": 1,
                          "matrix": [[1.1, 0, 0], [0, 1, 0], [0, 0, 1]]})
        resp = client.post("/v1/apply",
                           files={"image": ("a.png", small_png, "image/png")},
                           data={"matrix": bad})
        assert resp.status_code == 422

    def test_apply_identity_round_trips(self, client, small_png):
        identity = json.dumps({"version": 1,
                               "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
        resp = client.post("/v1/apply",
                           files={"image": ("a.png", small_png, "image/png")},
                           data={"matrix": identity})
        out = decode_image(resp.content)
        src = decode_image(small_png)
        assert np.array_equal(out.samples, src.samples)


class TestQueueBound:

    def test_queue_full_503(self, tmp_path, rng):
        config = ServiceConfig(data_dir=tmp_path / "data", workers=1, queue_limit=3)
        store = JobStore(config)
        # Workers are never started: every submission stays queued.
        png = encode_display(gray_world_image(rng, side=32))
        app = create_app(config, store=store)
        client = TestClient(app)  # no context: lifespan (worker start) skipped
        for _ in range(3):
            assert submit(client, png, tune_config_doc()).status_code == 202
        resp = submit(client, png, tune_config_doc())
        assert resp.status_code == 503
        store.shutdown()


class TestCrashRecovery:

    def test_restart_marks_running_failed(self, tmp_path, rng, small_png):
        config = ServiceConfig(data_dir=tmp_path / "data", workers=1)
        app = create_app(config)
        with TestClient(app) as client:
            job_id = submit(client, small_png, tune_config_doc()).json()["id"]
            wait_done(client, job_id)

        # Forge a crash: flip the finished job's persisted status to running.
        job_dir = config.data_dir / job_id
        meta = json.loads((job_dir / "meta.json").read_text())
        meta["status"] = "running"
        (job_dir / "meta.json").write_text(json.dumps(meta))

        app2 = create_app(config)
        with TestClient(app2) as client2:
            doc = client2.get(f"/v1/jobs/{job_id}").json()
            assert doc["status"] == "failed"
            assert doc["error"] == "interrupted"

    def test_queued_jobs_resume_after_restart(self, tmp_path, rng, small_png):
        config = ServiceConfig(data_dir=tmp_path / "data", workers=1)
        store = JobStore(config)  # never started; submissions stay queued
        app = create_app(config, store=store)
        client = TestClient(app)
        job_id = submit(client, small_png, tune_config_doc(iterations=5)).json()["id"]
        store.shutdown()

        app2 = create_app(config)
        with TestClient(app2) as client2:
            final = wait_done(client2, job_id)
            assert final["status"] == "done"


class TestFailureSurface:

    def test_backend_failure_marks_job_failed_with_partial_trajectory(
            self, tmp_path, rng, small_png):
        config = ServiceConfig(
            data_dir=tmp_path / "data", workers=1,
            backends=(BackendSpec("synthetic", "synthetic"),
                      BackendSpec("offline", "remote", url="http://127.0.0.1:9")))
        app = create_app(config)
        with TestClient(app) as client:
            resp = submit(client, small_png, tune_config_doc(backend="offline"))
            assert resp.status_code == 202
            final = wait_done(client, resp.json()["id"])
            assert final["status"] == "failed"
            assert "127.0.0.1:9" in final["error"]


class TestServiceConfigFile:

    def test_load_with_overrides(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "service.json"
        cfg_path.write_text(json.dumps({
            "data_dir": "jobs",
            "workers": 4,
            "backends": [{"name": "synthetic", "kind": "synthetic"}],
        }))
        monkeypatch.setenv("CCMTUNE_WORKERS", "7")
        loaded = load_service_config(cfg_path)
        assert loaded.workers == 7
        assert loaded.data_dir == tmp_path / "jobs"

    def test_env_config_discovery(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "c.json"
        cfg_path.write_text(json.dumps({"queue_limit": 9}))
        monkeypatch.setenv("CCMTUNE_CONFIG", str(cfg_path))
        assert load_service_config().queue_limit == 9

    def test_malformed_json_reports_location(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  broken\n}")
        with pytest.raises(ServiceConfigError) as err:
            load_service_config(path)
        assert "line" in str(err.value)

    def test_remote_requires_url(self):
        with pytest.raises(ServiceConfigError):
            BackendSpec("r", "remote")
