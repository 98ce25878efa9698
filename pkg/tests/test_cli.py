import csv
import json
import subprocess
import sys

import pytest

from kamlattice.cli import OUT_ENV, Report, emit, main, run


def run_json(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 else None)


def test_genericity_examples(capsys):
    code, rep = run_json(["genericity", "--support", "-1,3"], capsys)
    assert code == 0 and rep["results"]["generic"] is True
    code, rep = run_json(["genericity", "--support", "0,1,2"], capsys)
    assert code == 0 and rep["results"]["generic"] is False
    assert rep["wall_time"] is None and rep["schema_version"] == "1.0"


def test_measure_is_byte_identical_across_processes(tmp_path):
    argv = [sys.executable, "-m", "kamlattice", "measure", "--support", "-1,3",
            "--gamma", "0.02,0.01,0.005", "--samples", "20000", "--seed", "7"]
    outs = [subprocess.run(argv, capture_output=True, check=True).stdout for _ in range(2)]
    assert outs[0] == outs[1]
    rows = json.loads(outs[0])["results"]["rows"]
    assert [r["gamma"] for r in rows] == [0.02, 0.01, 0.005]


def test_exit_codes(capsys):
    assert main(["genericity", "--bogus"]) == 2
    assert main(["genericity"]) == 2  # neither support nor R
    assert main(["melnikov", "--support", "0,1,2", "--lambda", "1,1,1"]) == 3
    assert main(["spectra", "--lambda", "1,-1"]) == 2
    capsys.readouterr()


def test_out_dir_flag_and_env(tmp_path, monkeypatch, capsys):
    code, _ = run(["kam", "--nu-max", "1", "--out", str(tmp_path / "a")])
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["report.json", "trace.csv", "trace.jsonl"]
    with (tmp_path / "a" / "trace.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["nu", "s_nu", "N_nu", "q_norm", "drift"] and len(rows) == 3
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "b"))
    assert main(["genericity", "--support", "-1,3"]) == 0
    with (tmp_path / "b" / "violations.csv").open() as fh:
        assert list(csv.reader(fh)) == [["kind", "witness"]]
    capsys.readouterr()


def test_report_roundtrip(tmp_path):
    rep = Report("spectra", {"lambda": [1.0, 1.0]}, {"gap": float("inf"), "pairs": (1, 2)})
    paths = emit(rep, tmp_path, {"empty": (["a", "b"], [])})
    back = Report.from_json(paths[0].read_text())
    assert back.command == "spectra" and back.results == {"gap": None, "pairs": [1, 2]}
    assert paths[1].read_text().strip() == "a,b"


def test_kam_config_file_overrides(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nu_max": 2, "grid": {"Lmax": 3}}))
    code, rep = run_json(["kam", "--config", str(cfg)], capsys)
    assert code == 0 and len(rep["results"]["records"]) == 3
    assert rep["config"]["grid"]["Lmax"] == 3 and rep["config"]["grid"]["Mx"] == 6
    cfg.write_text("{not json")
    assert main(["kam", "--config", str(cfg)]) == 2
    capsys.readouterr()


def test_version(capsys):
    with pytest.raises(SystemExit):
        from kamlattice.cli import build_parser

        build_parser().parse_args(["--version"])
    assert capsys.readouterr().out.strip()
