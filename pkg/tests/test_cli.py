import json

import numpy as np
import pytest

from ddlpv.cli import ConfigError, RunConfig, main
from ddlpv.core import read_dictionary, write_dictionary


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["collect", "--out", str(out), "--window-sweep"]) == 0
    return out


def test_full_pipeline(run_dir, capsys):
    d = run_dir / "dictionary.csv"
    assert main(["check", str(d)]) == 0
    assert json.loads((run_dir / "pe_report.json").read_text())["is_pe"]
    assert main(["synth", str(d), "--kind", "qp"]) == 0
    res = json.loads((run_dir / "result_qp.json").read_text())
    assert res["kind"] == "qp"
    assert main(["simulate", str(run_dir / "result_qp.json"), "--scenario", "disturbance"]) == 0
    summary = json.loads((run_dir / "sim_disturbance_qp" / "summary.json").read_text())
    assert summary
    assert (run_dir / "sim_disturbance_qp" / "trajectory.csv").exists()
    assert main(["report", str(run_dir)]) == 0
    assert (run_dir / "report.txt").read_text().strip()
    cert = (run_dir / "certification_qp.csv").read_text().splitlines()
    assert len(cert) > 1
    capsys.readouterr()


def test_sweep_table(run_dir):
    lines = (run_dir / "window_sweep.csv").read_text().splitlines()
    assert lines[0].startswith("offset,rank")
    assert len(lines) == 1 + 100 - 1 - 7 + 1


def test_collect_is_reproducible(run_dir, tmp_path):
    assert main(["collect", "--out", str(tmp_path)]) == 0
    for name in ("record.csv", "dictionary.csv"):
        assert (tmp_path / name).read_bytes() == (run_dir / name).read_bytes()


def test_missing_file_is_io_error(tmp_path):
    assert main(["check", str(tmp_path / "nope.csv")]) == 1
    assert main(["synth", str(tmp_path / "nope.csv")]) == 1


def test_unexciting_dictionary_rejected(run_dir, tmp_path):
    d = read_dictionary(run_dir / "dictionary.csv")
    short = write_dictionary(d.truncate(4), tmp_path / "short.csv")
    assert main(["check", str(short)]) == 2
    assert main(["synth", str(short), "--kind", "l2"]) == 2


def test_bad_window_and_config(tmp_path):
    cfg = tmp_path / "short.json"
    cfg.write_text(json.dumps({"excitation": {"horizon": 0.05}}))
    assert main(["collect", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert main(["collect", "--window", "x:y", "--out", str(tmp_path / "o")]) == 1
    assert main(["collect", "--window", "95", "--out", str(tmp_path / "o")]) == 1


def test_toml_config(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text('[excitation]\nseed = 3\ncutoff_hz = 20.0\n\n[window]\noffset = 30\nN_d = 8\n'
                   '[synthesis]\nkind = "l2"\n')
    rc = RunConfig.load(cfg)
    assert (rc.seed, rc.cutoff_hz, rc.offset, rc.N_d, rc.kind) == (3, 20.0, 30, 8, "l2")
    assert RunConfig.from_dict(rc.to_dict()).to_dict() == rc.to_dict()
    assert main(["collect", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    d = read_dictionary(tmp_path / "o" / "dictionary.csv")
    assert d.N_d == 8
    np.testing.assert_array_equal(d.x, read_dictionary(tmp_path / "o" / "record.csv").x[30:39])
    bad = tmp_path / "bad.toml"
    bad.write_text("[synthesis]\nkind = 'mpc'\n")
    with pytest.raises(ConfigError):
        RunConfig.load(bad).validate()
