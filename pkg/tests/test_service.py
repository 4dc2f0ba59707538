import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from wl1recovery import cli
from wl1recovery.api import app
from wl1recovery.ensemble import EnsembleConfig, make_instance, sample_instance

client = TestClient(app)


@pytest.fixture
def problem():
    return sample_instance(EnsembleConfig(n=8, k=2, m=6, sigma_z=0.3, seed=2)).to_dict()


@pytest.fixture
def problem_file(tmp_path, problem):
    p = tmp_path / "problem.json"
    p.write_text(json.dumps(problem))
    return p


def test_health():
    body = client.get("/health").json()
    assert body["status"] == "ok" and "Philox" in body["rng"]


def test_solve_endpoint(problem):
    r = client.post("/solve", json={"problem": problem, "weights": "support:0.5", "h": 0.2})
    assert r.status_code == 200
    body = r.json()
    assert body["converged"] and body["kkt_residual"] <= 1e-9 and body["h"] == 0.2
    assert len(body["x_hat"]) == 8


def test_solve_and_oracle_agree(problem):
    s = client.post("/solve", json={"problem": problem, "h": 0.1}).json()
    o = client.post("/oracle", json={"problem": problem, "h": 0.1}).json()
    np.testing.assert_allclose(s["x_hat"], o["x_opt"], atol=1e-6)


def test_check_endpoint(problem):
    body = client.post("/check", json={"problem": problem, "weights": [1.0] * 8, "h": "auto"}).json()
    assert set(body) == {"event1_holds", "event1_margin", "event2_holds", "x_dagger", "h"}


def test_predict_endpoint():
    body = client.post("/predict", json=dict(n=512, k=10, eta=1, sigma_z=0.5, sigma_a=1, phi_n=9, m=200)).json()
    assert body["h"] == pytest.approx(0.37405681746636286, rel=1e-12)
    assert body["theta_m_star_tuned"] == pytest.approx(1 / (1 - 1 / 9))


@pytest.mark.parametrize("payload", [
    {"weights": "uniform:-1"}, {"h": -1.0}, {"h": "big"}, {"weights": [1.0, 2.0]},
])
def test_validation_errors(problem, payload):
    r = client.post("/solve", json={"problem": problem, **payload})
    assert r.status_code == 422


def test_oracle_refuses_large_n():
    prob = sample_instance(EnsembleConfig(n=16, k=2, m=8, seed=0)).to_dict()
    r = client.post("/oracle", json={"problem": prob, "h": 0.1})
    assert r.status_code == 422 and "n <= 14" in r.json()["detail"]


def test_auto_h_noiseless_rejected():
    prob = make_instance(np.eye(3), np.array([1.0, 0, 0])).to_dict()
    r = client.post("/solve", json={"problem": prob})
    assert r.status_code == 422


def test_sweep_and_plot_endpoints():
    cfg = {"n_list": [40], "m_grid": [20, 40], "trials": 4, "master_seed": 1}
    body = client.post("/sweep", json=cfg).json()
    assert [r["m"] for r in body["records"]] == [20, 40]
    svg = client.post("/plot", json={"records": body["records"], "x": "m"})
    assert svg.status_code == 200 and svg.text.startswith("<?xml")
    assert client.post("/sweep", json={**cfg, "trials": 0}).status_code == 422


def test_cli_solve_check_oracle(tmp_path, problem_file, capsys):
    out = tmp_path / "result.json"
    assert cli.main(["solve", "--problem", str(problem_file), "--h", "0.15", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert {"x_hat", "kkt_residual", "iterations", "objective"} <= set(res)
    assert cli.main(["oracle", "--problem", str(problem_file), "--h", "0.15"]) == 0
    o = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(res["x_hat"], o["x_opt"], atol=1e-6)
    assert cli.main(["check", "--problem", str(problem_file), "--weights", "support:0.7"]) == 0
    assert "event1_margin" in json.loads(capsys.readouterr().out)


def test_cli_weights_file(tmp_path, problem_file):
    wf = tmp_path / "w.txt"
    wf.write_text(" ".join(["2.0"] * 8))
    assert cli.main(["solve", "--problem", str(problem_file), "--weights", str(wf), "--h", "0.1"]) == 0


def test_cli_predict_table(capsys):
    assert cli.main(["predict", "--n", "512", "--k", "10", "--eta", "1", "--sigma-z", "0.5",
                     "--sigma-a", "1", "--phi-n", "9", "--m", "200"]) == 0
    out = capsys.readouterr().out
    assert "0.374057" in out and "m*" in out and "g(h)" in out


def test_cli_sweep_and_plot(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_list": [40, 60], "m_grid": {"theta_min": 0.5, "theta_max": 2, "steps": 3},
                               "trials": 5, "master_seed": 4}))
    csv = tmp_path / "r.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(csv)]) == 0
    assert csv.read_text().startswith("n,k,m,theta,eta,h,trials,successes,prob,master_seed\n")
    meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
    assert "Philox" in meta["rng"] and meta["config"]["master_seed"] == 4
    svg = tmp_path / "f.svg"
    assert cli.main(["plot", "--csv", str(csv), "--x", "theta", "--out", str(svg)]) == 0
    assert svg.read_text().count("<polyline") == 2


@pytest.mark.parametrize("argv,code", [
    (["sweep", "--config", "/nonexistent.json", "--out", "x.csv"], 1),
    (["predict", "--n", "10", "--k", "10", "--m", "5"], 1),
    (["predict", "--n", "100", "--k", "5", "--m", "5", "--sigma-z", "0"], 1),
])
def test_cli_exit_codes(argv, code, capsys):
    assert cli.main(argv) == code
    assert "error" in capsys.readouterr().err


def test_cli_oracle_refuses_large_n(tmp_path, capsys):
    p = tmp_path / "big.json"
    p.write_text(sample_instance(EnsembleConfig(n=20, k=2, m=8, seed=0)).to_json())
    assert cli.main(["oracle", "--problem", str(p), "--h", "0.1"]) == 1
    assert "n <= 14" in capsys.readouterr().err


def test_cli_runtime_error_exit_code(tmp_path, capsys):
    # duplicated support columns make the certificate's Gram matrix singular
    A = np.random.default_rng(0).standard_normal((5, 4))
    A[:, 1] = A[:, 0]
    p = tmp_path / "dup.json"
    p.write_text(make_instance(A, np.array([1.0, 1.0, 0, 0])).to_json())
    assert cli.main(["check", "--problem", str(p), "--h", "0.1"]) == 2


def test_cli_remote_mode(monkeypatch, problem_file, capsys):
    import httpx

    def fake_post(url, json=None, timeout=None):
        path = "/" + url.rsplit("/", 1)[1]
        r = client.post(path, json=json)
        return httpx.Response(r.status_code, content=r.content, headers=dict(r.headers))

    monkeypatch.setattr(httpx, "post", fake_post)
    assert cli.main(["--url", "http://svc", "solve", "--problem", str(problem_file), "--h", "0.2"]) == 0
    assert json.loads(capsys.readouterr().out)["h"] == 0.2
    assert cli.main(["--url", "http://svc", "solve", "--problem", str(problem_file), "--h", "-1"]) == 1
