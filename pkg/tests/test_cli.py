import json
import socket
import subprocess
import sys
import time

import numpy as np
import pytest
import requests

from ccmtune import decode_image, encode_display
from ccmtune.cli import main

from conftest import gray_world_image


@pytest.fixture
def corpus_dir(tmp_path, rng):
    d = tmp_path / "corpus"
    d.mkdir()
    colors = [(0.7, 0.4, 0.25), (0.3, 0.6, 0.5), (0.55, 0.35, 0.65)]
    for i, color in enumerate(colors):
        img = gray_world_image(rng, side=48, color=color)
        (d / f"img{i:02d}.png").write_bytes(encode_display(img))
    return d


@pytest.fixture
def input_png(tmp_path, rng):
    path = tmp_path / "input.png"
    path.write_bytes(encode_display(gray_world_image(rng, side=48)))
    return path


def run_tune(input_png, out_dir, *extra):
    argv = ["tune", "--image", str(input_png), "--out-dir", str(out_dir),
            "--prompt", "warm", "--iters", "40", "--seed", "7", *extra]
    return main(argv)


class TestTune:

    def test_writes_all_artifacts(self, input_png, tmp_path, capsys):
        out = tmp_path / "run"
        assert run_tune(input_png, out) == 0
        for name in ("matrix.json", "output.png", "trajectory.jsonl",
                     "snapshots.json", "config.json", "summary.json"):
            assert (out / name).exists(), name
        printed = capsys.readouterr().out
        assert "final similarity" in printed
        assert "delta colorfulness" in printed

    def test_config_echo_contains_defaults(self, input_png, tmp_path):
        out = tmp_path / "run"
        run_tune(input_png, out)
        doc = json.loads((out / "config.json").read_text())
        assert doc["tau"] == 0.25
        assert doc["optimizer"] == "adam"
        assert doc["prompt"] == {"template": "B", "keyword": "warm", "content": None}
        assert doc["iterations"] == 40

    def test_matrix_respects_tau(self, input_png, tmp_path):
        out = tmp_path / "run"
        run_tune(input_png, out, "--lr", "0.05")
        doc = json.loads((out / "matrix.json").read_text())
        assert all(abs(v) <= 0.25 + 1e-12 for v in doc["phi"].values())
        assert doc["tau"] == 0.25

    def test_deterministic_matrix_bytes(self, input_png, tmp_path):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        run_tune(input_png, out_a)
        run_tune(input_png, out_b)
        assert (out_a / "matrix.json").read_bytes() == (out_b / "matrix.json").read_bytes()
        assert (out_a / "output.png").read_bytes() == (out_b / "output.png").read_bytes()

    def test_two_prompt_flags(self, input_png, tmp_path):
        out = tmp_path / "run"
        code = run_tune(input_png, out, "--prompt-b", "cool", "--alpha", "0.99")
        assert code == 0
        doc = json.loads((out / "config.json").read_text())
        assert doc["prompt_b"]["keyword"] == "cool"
        assert doc["alpha"] == 0.99
        line = (out / "trajectory.jsonl").read_text().splitlines()[0]
        rec = json.loads(line)
        assert rec["sim_b"] is not None and rec["p_a"] is not None

    def test_template_rendering_reaches_backend(self, input_png, tmp_path):
        out = tmp_path / "run"
        assert run_tune(input_png, out, "--template", "A") == 0
        doc = json.loads((out / "config.json").read_text())
        assert doc["prompt"]["template"] == "A"

    def test_template_d_requires_content(self, input_png, tmp_path, capsys):
        code = run_tune(input_png, tmp_path / "x", "--template", "D")
        assert code == 1
        assert "content" in capsys.readouterr().err

    def test_missing_image_usage_error(self, tmp_path):
        assert main(["tune", "--image", str(tmp_path / "nope.png"),
                     "--prompt", "warm"]) == 1

    def test_unreachable_remote_backend_exit_2(self, input_png, tmp_path):
        code = run_tune(input_png, tmp_path / "x",
                        "--backend", "remote:http://127.0.0.1:9")
        assert code == 2

    def test_unknown_flag_exit_1(self, input_png):
        assert main(["tune", "--image", str(input_png), "--prompt", "warm",
                     "--no-such-flag"]) == 1


class TestApply:

    def test_identity_round_trip(self, input_png, tmp_path):
        matrix = tmp_path / "identity.json"
        matrix.write_text(json.dumps(
            {"version": 1, "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
        out = tmp_path / "out.png"
        assert main(["apply", "--image", str(input_png),
                     "--matrix", str(matrix), "--out", str(out)]) == 0
        a = decode_image(input_png.read_bytes())
        b = decode_image(out.read_bytes())
        assert np.array_equal(a.samples, b.samples)

    def test_row_sum_violation_exit_4(self, input_png, tmp_path):
        matrix = tmp_path / "bad.json"
        matrix.write_text(json.dumps(
            {"version": 1, "matrix": [[1.1, 0, 0], [0, 1, 0], [0, 0, 1]]}))
        code = main(["apply", "--image", str(input_png),
                     "--matrix", str(matrix), "--out", str(tmp_path / "o.png")])
        assert code == 4

    def test_matches_tune_output_bytes(self, input_png, tmp_path):
        out = tmp_path / "run"
        run_tune(input_png, out)
        applied = tmp_path / "applied.png"
        assert main(["apply", "--image", str(input_png),
                     "--matrix", str(out / "matrix.json"),
                     "--out", str(applied)]) == 0
        assert applied.read_bytes() == (out / "output.png").read_bytes()


class TestExperiment:

    def test_report_and_summary(self, corpus_dir, tmp_path, capsys):
        out = tmp_path / "report"
        code = main(["experiment", "--corpus", str(corpus_dir),
                     "--out-dir", str(out), "--iters", "60", "--seed", "3"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["delta_C"] > 0
        assert "delta_clip_iqa" in summary
        csv_text = (out / "report.csv").read_text()
        assert csv_text.startswith("image_id,C_vibrant,C_dull,iqa_vibrant,iqa_dull")
        assert len(csv_text.strip().splitlines()) == 4

    def test_tau_sweep(self, corpus_dir, tmp_path):
        out = tmp_path / "report"
        code = main(["experiment", "--corpus", str(corpus_dir),
                     "--out-dir", str(out), "--iters", "50",
                     "--sweep-tau", "0.25,0.5"])
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert [s["tau"] for s in summary["sweeps"]] == [0.25, 0.5]
        assert (out / "report_tau0.25.csv").exists()
        assert (out / "report_tau0.5.csv").exists()

    def test_empty_corpus_exit_1(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["experiment", "--corpus", str(empty)]) == 1


class TestServe:

    def test_occupied_port_exit_5(self, tmp_path):
        holder = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        holder.bind(("127.0.0.1", 0))
        port = holder.getsockname()[1]
        try:
            code = main(["serve", "--listen", f"127.0.0.1:{port}"])
            assert code == 5
        finally:
            holder.close()

    def test_malformed_config_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{ nope")
        assert main(["serve", "--config", str(bad)]) == 1
        assert "line" in capsys.readouterr().err

    def test_serve_end_to_end_healthz(self, tmp_path):
        with socket.socket() as s:
            s.bind(("127.0.0.1", 0))
            port = s.getsockname()[1]
        config = tmp_path / "service.json"
        config.write_text(json.dumps({
            "data_dir": str(tmp_path / "data"),
            "backends": [{"name": "synthetic", "kind": "synthetic"}],
        }))
        proc = subprocess.Popen(
            [sys.executable, "-m", "ccmtune.cli", "serve",
             "--listen", f"127.0.0.1:{port}", "--config", str(config)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        try:
            deadline = time.time() + 20
            last_err = None
            while time.time() < deadline:
                try:
                    resp = requests.get(f"http://127.0.0.1:{port}/v1/healthz", timeout=1)
                    assert resp.json() == {"status": "ok"}
                    break
                except requests.RequestException as exc:
                    last_err = exc
                    time.sleep(0.2)
            else:
                raise AssertionError(f"service never came up: {last_err}")
        finally:
            proc.terminate()
            proc.wait(timeout=10)
