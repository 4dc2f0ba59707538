import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from pydantic import ValidationError

from wl1recovery.harness import (CSV_FIELDS, SweepConfig, SweepRecord, ThetaGrid, crossing_theta,
                                 emit_csv, emit_plot, read_csv, render_svg, run_sweep, run_trial,
                                 smoothed_probs)
from wl1recovery.theory import rescaled_theta

SVG = "{http://www.w3.org/2000/svg}"


def small_cfg(**kw):
    base = dict(n_list=[64], m_grid=ThetaGrid(theta_min=0.5, theta_max=2.5, steps=5), trials=20, master_seed=3)
    base.update(kw)
    return SweepConfig(**base)


def record(n=128, m=50, successes=10, trials=20, k=5):
    return SweepRecord(n=n, k=k, m=m, theta=rescaled_theta(m, n, k), eta=1.0, h=0.3,
                       trials=trials, successes=successes, prob=successes / trials, master_seed=0)


def test_noiseless_overdetermined_trial_succeeds():
    cfg = small_cfg(n_list=[40], sigma_z=0.0, h=0.05, sparsity=3)
    out = run_trial(cfg, 40, 3, 40 * 4, 0)
    assert out.success and out.converged


def test_undersampled_trial_fails():
    cfg = small_cfg(n_list=[40], sparsity=6, m_grid=[5], check_certificates=True)
    for t in range(10):
        out = run_trial(cfg, 40, 6, 5, t)
        assert not out.success
        assert out.event1_holds is False


def test_trial_determinism():
    cfg = small_cfg(check_certificates=True)
    assert run_trial(cfg, 64, 4, 40, 7) == run_trial(cfg, 64, 4, 40, 7)


def test_weighted_trial_uses_eta():
    cfg = small_cfg(weight_scheme={"kind": "support", "support_weight": 0.5})
    out = run_trial(cfg, 64, 4, 40, 0)
    assert out.eta == pytest.approx(0.25)
    assert out.h == pytest.approx(math.sqrt(2 * 9 * 0.25 * 0.25 * math.log(60) / 40))


def test_sweep_records_complete_and_ordered():
    cfg = small_cfg(n_list=[100, 64])
    recs = run_sweep(cfg)
    assert [r.n for r in recs] == sorted(r.n for r in recs)
    assert len(recs) == len(cfg.points())
    for r in recs:
        assert 0 <= r.successes <= r.trials == 20
        assert r.prob == r.successes / r.trials
        assert r.theta == rescaled_theta(r.m, r.n, r.k)
    for n in (64, 100):
        ms = [r.m for r in recs if r.n == n]
        assert ms == sorted(ms)


def test_sweep_parallel_matches_serial():
    cfg = small_cfg(trials=6)
    assert run_sweep(cfg, workers=2) == run_sweep(cfg)


def test_sweep_determinism_bytes(tmp_path):
    cfg = small_cfg(trials=10)
    emit_csv(run_sweep(cfg), tmp_path / "a.csv")
    emit_csv(run_sweep(cfg), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_sweep_outcomes_certificate_consistency():
    cfg = small_cfg(trials=30, check_certificates=True)
    _, outcomes = run_sweep(cfg, keep_outcomes=True)
    both = [o for outs in outcomes.values() for o in outs if o.event1_holds and o.event2_holds]
    assert both and sum(o.success for o in both) >= 0.99 * len(both)


@pytest.mark.parametrize("bad", [
    dict(trials=0), dict(n_list=[]), dict(sigma_z=0.0), dict(sparsity=64),
    dict(m_grid={"theta_min": 2.0, "theta_max": 1.0, "steps": 3}),
    dict(weight_scheme={"kind": "file", "weights": [1.0, -1.0]}),
    dict(unknown_field=1),
])
def test_config_validation(bad):
    base = dict(n_list=[64])
    base.update(bad)
    with pytest.raises(ValidationError):
        SweepConfig(**base)


def test_file_weight_scheme(tmp_path):
    p = tmp_path / "w.json"
    p.write_text("[" + ",".join(["1.0"] * 30) + "]")
    cfg = SweepConfig(n_list=[30], sparsity=2, m_grid=[20], trials=3,
                      weight_scheme={"kind": "file", "path": str(p)})
    assert run_sweep(cfg)[0].eta == 1.0


def test_csv_empty(tmp_path):
    emit_csv([], tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == ",".join(CSV_FIELDS) + "\n"


def test_csv_round_trip(tmp_path):
    recs = [record(m=60, successes=3), record(m=40), record(n=64, m=30, k=4)]
    emit_csv(recs, tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 4
    back = read_csv(tmp_path / "r.csv")
    assert back == sorted(recs, key=lambda r: (r.n, r.m))


def test_csv_io_error_has_path(tmp_path):
    with pytest.raises(OSError, match="missing"):
        emit_csv([record()], tmp_path / "missing" / "x.csv")


def test_plot_single_record(tmp_path):
    emit_plot([record()], tmp_path / "p.svg")
    root = ET.parse(tmp_path / "p.svg").getroot()
    assert len(root.findall(f"{SVG}circle")) == 1
    assert not root.findall(f"{SVG}polyline")


def test_plot_three_curves():
    recs = [record(n=n, k=k, m=m) for n, k in ((128, 5), (256, 7), (512, 10)) for m in (40, 80, 120)]
    root = ET.fromstring(render_svg(recs))
    assert len(root.findall(f"{SVG}polyline")) == 3
    legend = [t.text for t in root.findall(f"{SVG}text") if t.text and t.text.startswith("n=")]
    assert legend == ["n=128, k=5", "n=256, k=7", "n=512, k=10"]


def test_plot_axis_flag_only_changes_x():
    recs = [record(m=m, successes=s) for m, s in ((40, 2), (80, 10), (120, 19))]
    pts = {}
    for axis in ("m", "theta"):
        root = ET.fromstring(render_svg(recs, axis))
        pts[axis] = [(float(c.get("cx")), float(c.get("cy"))) for c in root.findall(f"{SVG}circle")]
    assert [y for _, y in pts["m"]] == [y for _, y in pts["theta"]]
    # theta is linear in m at fixed (n, k), so pixel positions coincide
    np.testing.assert_allclose([x for x, _ in pts["m"]], [x for x, _ in pts["theta"]], atol=0.01)


def test_plot_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_plot([], tmp_path / "x.svg")


def test_crossing_and_smoothing():
    recs = [record(m=m, successes=s) for m, s in ((20, 0), (40, 12), (60, 8), (80, 18), (100, 20))]
    p = smoothed_probs(recs)
    assert np.all(np.diff(p) >= 0)
    th = crossing_theta(recs)
    assert recs[0].theta < th < recs[3].theta
    assert crossing_theta(recs[:1]) is None


@pytest.fixture(scope="module")
def scheme_sweeps():
    grid = ThetaGrid(theta_min=0.3, theta_max=1.8, steps=6)
    out = {}
    for eta, ws in ((1.0, 1.0), (0.5, math.sqrt(2) / 2), (0.25, 0.5)):
        cfg = SweepConfig(n_list=[128], m_grid=grid, trials=100, master_seed=11,
                          weight_scheme={"kind": "support", "support_weight": ws})
        out[eta] = run_sweep(cfg)
    return out


def test_monotone_trend(scheme_sweeps):
    for recs in scheme_sweeps.values():
        p = np.array([r.prob for r in recs])
        assert np.max(np.abs(p - smoothed_probs(recs))) <= 2 / math.sqrt(100)


def test_weighted_speedup_ordering(scheme_sweeps):
    tol = 3 / math.sqrt(100)
    for r1, r5, r25 in zip(scheme_sweeps[1.0], scheme_sweeps[0.5], scheme_sweeps[0.25]):
        assert r1.m == r5.m == r25.m
        assert r25.prob >= r5.prob - tol
        assert r5.prob >= r1.prob - tol
