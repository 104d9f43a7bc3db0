import dataclasses

import numpy as np
import pytest

import wdment.sweep as sweep
from wdment.cli import main
from wdment.config import load_config


def test_noiseless_sweep_is_perfect():
    report = sweep.run_sweep(load_config("noiseless"))
    rows = report.rows()
    assert len(rows) == 44 and not report.failed
    for r in rows:
        assert r["converged"]
        assert r["fidelity_max"] == pytest.approx(1.0, abs=1e-8)
        assert r["fidelity_phi_plus"] == pytest.approx(1.0, abs=1e-8)
        assert r["theta_star"] == pytest.approx(0.3, abs=1e-6)


def test_subset_sees_same_drift():
    cfg = load_config("paper")
    full = sweep.run_sweep(cfg, channels=[5, 30])
    one = sweep.run_sweep(cfg, channels=[30])
    assert full.rows()[1] == one.rows()[0]


def test_unknown_channel_rejected():
    with pytest.raises(ValueError):
        sweep.run_sweep(load_config("paper"), channels=[45])


def _files(path):
    return {p.name: p.read_bytes() for p in sorted(path.glob("*.csv"))}


def test_reruns_are_byte_identical(tmp_path):
    cfg = load_config("paper", {"run.seed": 3})
    sweep.write_sweep(sweep.run_sweep(cfg, channels=range(1, 9)), tmp_path / "a")
    sweep.write_sweep(sweep.run_sweep(cfg, channels=range(1, 9)), tmp_path / "b")
    sweep.write_sweep(sweep.run_sweep(cfg, channels=range(1, 9), workers=2), tmp_path / "c")
    a = _files(tmp_path / "a")
    assert len(a) == 5
    assert a == _files(tmp_path / "b") == _files(tmp_path / "c")


def test_seed_changes_counts():
    a = sweep.run_sweep(load_config("paper", {"run.seed": 1}), channels=[1]).rows()[0]
    b = sweep.run_sweep(load_config("paper", {"run.seed": 2}), channels=[1]).rows()[0]
    assert a["hh_counts"] != b["hh_counts"]


def test_failed_channel_is_isolated(tmp_path, monkeypatch, capsys):
    real = sweep.simulate_channel

    def flaky(cfg, channel, paths):
        if channel.index == 2:
            raise RuntimeError("detector fell over")
        return real(cfg, channel, paths)

    monkeypatch.setattr(sweep, "simulate_channel", flaky)
    code = main(["sweep", "--config", "noiseless", "--channels", "1-3", "--out-dir", str(tmp_path)])
    assert code == 3
    assert "channel 2 failed" in capsys.readouterr().err
    rows = sweep.io.read_csv(tmp_path / "sweep.csv")
    assert [r["error"] != "" for r in rows] == [False, True, False]
    assert rows[1]["fidelity_max"] == ""


def test_drift_rows_cover_timeline():
    cfg = load_config("paper")
    cfg = dataclasses.replace(cfg, schedule=dataclasses.replace(cfg.schedule, intervals_per_channel=3))
    report = sweep.run_sweep(cfg, channels=[1])
    rows = report.drift_rows()
    assert len(rows) == 44 * 3 + 1
    assert rows[0]["signal_angle"] == 0.0
    assert np.all(np.array([r["signal_angle"] for r in rows]) >= 0)
