from __future__ import annotations

import json

import pytest

from ifpbench.cli import main
from ifpbench.config import load_config
from ifpbench.errors import EmptyValueList, UnknownParameter
from ifpbench.report import read_report
from ifpbench.runner import sweep


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--config", "notary_ctp", "--out", str(out)]) == 0
    for name in ("report.json", "transfers.csv", "windows.csv", "events.log",
                 "charts/goodput.svg", "charts/state_pie.svg"):
        assert (out / name).exists(), name
    assert read_report(out / "report.json")["mandatory_pass"] is True
    assert "M1-conservation" in capsys.readouterr().out


def test_verify_saved_and_tampered_logs(tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", "--config", "notary_ctp", "--horizon", "120", "--out", str(out)])
    assert main(["verify", str(out / "events.log")]) == 0
    lines = (out / "events.log").read_text().splitlines()
    for pos, line in enumerate(lines):
        rec = json.loads(line)
        if rec["type"] == "transfer_state" and rec["state"] == "Settled":
            lines.insert(pos + 1, json.dumps(dict(rec, state="SourceIncluded"), sort_keys=True))
            break
    bad = tmp_path / "bad.log"
    bad.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["verify", str(bad)]) == 1
    assert "M3-state-machine" in capsys.readouterr().out


def test_missing_log_is_io_error(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "nope.log")]) == 2
    assert "IoError" in capsys.readouterr().err


def test_bad_override_is_config_error(capsys):
    assert main(["run", "--set", "runtime.bridges[0].source=Z"]) == 2
    assert "runtime.bridges[0].source" in capsys.readouterr().err


def test_sybil_run_exits_one():
    assert main(["run", "--config", "notary_sybil"]) == 1


def test_compare(capsys):
    assert main(["compare", "--published-only", "--attributes", "Consensus,DApps"]) == 0
    out = capsys.readouterr().out
    rows = [l for l in out.splitlines() if l.startswith("|")]
    assert len(rows) == 4  # header, rule, two attributes
    assert "PoW + DPoS + PoI" in out and "(ref)" not in out
    assert main(["compare", "--attributes", "Colour"]) == 2


def test_list_benchmarks(capsys):
    assert main(["list-benchmarks"]) == 0
    out = capsys.readouterr().out
    for name in ("CTP", "RWE", "NoAction", "notary_ctp"):
        assert name in out


def test_sweep_rates(tmp_path, capsys):
    code = main(["sweep", "--config", "notary_ctp", "--horizon", "120", "--parameter", "workload.rate",
                 "--values", "1,2,4", "--out", str(tmp_path)])
    assert code == 0
    reports = sorted(tmp_path.glob("*/report.json"))
    assert len(reports) == 3
    seeds = [read_report(p)["header"]["seed"] for p in reports]
    assert seeds == [0, 1, 2]
    table = capsys.readouterr().out.splitlines()
    assert len(table) == 4 and "workload.rate" in table[0]
    assert (tmp_path / "sweep.csv").read_text().count("\n") == 5


def test_sweep_errors():
    cfg = load_config("notary_ctp")
    with pytest.raises(EmptyValueList):
        sweep(cfg, "workload.rate", [])
    with pytest.raises(UnknownParameter):
        sweep(cfg, "workload.speed", [1])
    assert main(["sweep", "--parameter", "workload.rate", "--values", ""]) == 2


def test_dos_sweep_goodput_non_increasing():
    _, table = sweep(load_config("notary_dos"), "attack.intensity", [0, 4, 8, 16])
    goodput = [row["goodput"] for row in table]
    assert goodput == sorted(goodput, reverse=True)
    assert goodput[-1] < goodput[0]
