"""End-to-end: the real coherencekit binary drives this adapter over both
wire protocols, and cached predictions evaluate cleanly."""

from __future__ import annotations

import json
import os
import shutil
import socket
import subprocess
import sys
import time

import pytest

COHERENCEKIT = os.environ.get("COHERENCEKIT_BIN", shutil.which("coherencekit"))

pytestmark = pytest.mark.skipif(
    COHERENCEKIT is None, reason="coherencekit binary not on PATH"
)


@pytest.fixture
def dataset(tmp_path):
    rows = [
        {
            "id": f"e2e-{i:02d}",
            "task": "entailment",
            "units": [
                {"speaker": "A", "text": f"the {word} arrived today"},
                {"speaker": "B", "text": "we should celebrate"},
            ],
            "hypothesis": f"a {word} arrived",
            "label": "entailed",
            "evidence": {"start": 1, "end": 1},
        }
        for i, word in enumerate(["package", "letter", "visitor", "invoice"])
    ]
    path = tmp_path / "ds.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return str(path)


def run_kit(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [COHERENCEKIT, *args], capture_output=True, text=True, timeout=120
    )


def test_subprocess_protocol_end_to_end(dataset, tmp_path):
    preds = tmp_path / "preds.jsonl"
    backend = f"subprocess:{sys.executable} -m pyadapter --stdio"
    result = run_kit("cache", "--dataset", dataset, "--backend", backend, "--out", str(preds))
    assert result.returncode == 0, result.stderr
    rows = [json.loads(line) for line in preds.read_text().splitlines()]
    assert len(rows) == 4 * 3  # 4 examples, N=2 -> 3 spans each
    for row in rows:
        assert abs(sum(row["probs"]) - 1.0) < 1e-6

    report = tmp_path / "report.json"
    result = run_kit(
        "evaluate", "--dataset", dataset, "--backend", f"file:{preds}",
        "--report", str(report), "--no-timestamp",
    )
    assert result.returncode == 0, result.stderr
    doc = json.loads(report.read_text())
    assert doc["metrics"]["n_examples"] == 4


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_http_protocol_end_to_end(dataset, tmp_path):
    port = _free_port()
    server = subprocess.Popen(
        [sys.executable, "-m", "pyadapter", "--port", str(port)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        deadline = time.time() + 20
        while time.time() < deadline:
            try:
                with socket.create_connection(("127.0.0.1", port), timeout=0.2):
                    break
            except OSError:
                time.sleep(0.1)
        else:
            pytest.fail("adapter server did not come up")

        live = tmp_path / "live.jsonl"
        result = run_kit(
            "cache", "--dataset", dataset, "--backend", f"http:http://127.0.0.1:{port}",
            "--out", str(live),
        )
        assert result.returncode == 0, result.stderr

        # both protocols expose the same deterministic model
        via_stdio = tmp_path / "stdio.jsonl"
        backend = f"subprocess:{sys.executable} -m pyadapter --stdio"
        run_kit("cache", "--dataset", dataset, "--backend", backend, "--out", str(via_stdio))
        assert live.read_text() == via_stdio.read_text()
    finally:
        server.terminate()
        server.wait(timeout=10)
