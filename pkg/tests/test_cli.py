from __future__ import annotations

import json
import socket
import subprocess
import sys
import time

import httpx
import pytest

from reqboard.cli import main

FIXTURE = {
    "stakeholders": [
        {"handle": "boss", "secret": "pw", "role": "MANAGEMENT"},
        {"handle": "user1", "secret": "pw"},
    ],
    "gifts": [{"name": "Mug", "cost": 5, "stock": 2}],
}


def write_config(tmp_path, **overrides) -> str:
    lines = {"storage": str(tmp_path / "forum.json")}
    lines.update(overrides)
    path = tmp_path / "reqboard.conf"
    path.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
    return str(path)


def write_fixture(tmp_path, payload=FIXTURE) -> str:
    path = tmp_path / "fixture.json"
    path.write_text(json.dumps(payload))
    return str(path)


def test_seed_then_export_roundtrip(tmp_path, capsys):
    config = write_config(tmp_path)
    main(["seed", "--config", config, "--fixture", write_fixture(tmp_path)])
    assert "2 stakeholders" in capsys.readouterr().out

    out = tmp_path / "export.json"
    ledger = tmp_path / "ledger.jsonl"
    main(["export", "--config", config, "--out", str(out), "--ledger", str(ledger)])
    document = json.loads(out.read_text())
    assert document["topics"] == []
    assert ledger.exists()


def test_seed_rejects_bad_fixture(tmp_path):
    config = write_config(tmp_path)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SystemExit) as exc:
        main(["seed", "--config", config, "--fixture", str(bad)])
    assert exc.value.code == 2

    missing_secret = write_fixture(tmp_path, {"stakeholders": [{"handle": "x"}]})
    with pytest.raises(SystemExit) as exc:
        main(["seed", "--config", config, "--fixture", missing_secret])
    assert exc.value.code == 2


def test_bad_config_rejected(tmp_path):
    config = write_config(tmp_path, dedup_threshold="1.5")
    with pytest.raises(SystemExit) as exc:
        main(["serve", "--config", config])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["seed", "--config", config, "--fixture", write_fixture(tmp_path)])
    assert exc.value.code == 2

    unknown_key = write_config(tmp_path, frobnicate="yes")
    with pytest.raises(SystemExit) as exc:
        main(["export", "--config", unknown_key, "--out", str(tmp_path / "x.json")])
    assert exc.value.code == 2


def test_export_to_unwritable_path_fails(tmp_path):
    config = write_config(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["export", "--config", config, "--out", str(tmp_path)])  # a directory
    assert exc.value.code == 2


def test_export_state_filter_validation(tmp_path):
    config = write_config(tmp_path)
    with pytest.raises(SystemExit) as exc:
        main(["export", "--config", config, "--out", str(tmp_path / "x.json"), "--state", "WARP"])
    assert exc.value.code == 2


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_serve_answers_requests(tmp_path):
    port = free_port()
    config = write_config(tmp_path, listen=f"127.0.0.1:{port}")
    main(["seed", "--config", config, "--fixture", write_fixture(tmp_path)])

    proc = subprocess.Popen(
        [sys.executable, "-m", "reqboard.cli", "serve", "--config", config],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        base = f"http://127.0.0.1:{port}/api/v1"
        deadline = time.time() + 15
        token = None
        while time.time() < deadline:
            try:
                res = httpx.post(
                    f"{base}/auth/login", json={"handle": "boss", "secret": "pw"}, timeout=2
                )
                if res.status_code == 200:
                    token = res.json()["token"]
                    break
            except httpx.TransportError:
                time.sleep(0.2)
        assert token, "service never came up"
        cfg = httpx.get(f"{base}/config", headers={"Authorization": f"Bearer {token}"})
        assert cfg.status_code == 200
        assert cfg.json()["dedup"]["threshold"] == 0.6
    finally:
        proc.terminate()
        proc.wait(timeout=10)
