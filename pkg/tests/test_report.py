from __future__ import annotations

import csv
import io

import pytest

from ifpbench.config import apply_overrides, load_config
from ifpbench.errors import IoError, RunIdMismatch
from ifpbench.report import (assemble, build_id, chart_data, comparable, parse, parse_chart,
                             read_report, render_charts, serialize, write_report)
from ifpbench.runner import run_config
from ifpbench.verify import VerdictSet


@pytest.fixture(scope="module")
def notary_result():
    return run_config(load_config("notary_ctp"))


def test_header_provenance(notary_result):
    h = notary_result.report["header"]
    assert h["run_id"] == notary_result.plan.run_id and h["build_id"] == build_id()
    assert h["non_default_settings"] == []
    assert [d["strategy"] for d in h["ifps"]] == ["Notary"]
    assert "nearest-rank" in h["percentile_method"]
    assert notary_result.report["attack"] == {"absent": True}


def test_one_override_one_setting():
    cfg = apply_overrides(load_config("notary_ctp"), ["runtime.chains[0].finality_depth=4"])
    rep = run_config(cfg).report
    assert [d["key"] for d in rep["header"]["non_default_settings"]] == ["runtime.chains[0].finality_depth"]


def test_mismatched_run_ids(notary_result):
    other = VerdictSet("someone-else", notary_result.verdicts.verdicts)
    with pytest.raises(RunIdMismatch):
        assemble(notary_result.summary, other, notary_result.plan, {})


def test_missing_sections_marked_absent(notary_result):
    rep = assemble(notary_result.summary, notary_result.verdicts, notary_result.plan, {})
    assert rep["series"] == {"absent": True}
    assert rep["header"]["config"] == {"absent": True}


def test_round_trip_is_byte_identical(notary_result):
    text = serialize(notary_result.report)
    assert serialize(parse(text)) == text
    assert text.endswith("\n")


def test_comparable_strips_wall_clock(notary_result):
    again = run_config(load_config("notary_ctp"))
    assert notary_result.report["header"]["wall_clock"] != {"absent": True}
    assert serialize(comparable(again.report)) == serialize(comparable(notary_result.report))


def fake_report(latencies, breakdown, goodput):
    from ifpbench.monitor import _histogram
    return {"metrics": {"latency_histogram": _histogram(latencies), "terminal_breakdown": breakdown,
                        "goodput_series": goodput, "window": 10}}


def test_histogram_bars_sum_to_sample_count():
    rep = fake_report([2, 2, 5], {"Settled": 3}, [[0, 3]])
    bars = parse_chart(render_charts(rep)["latency_histogram.svg"])
    assert sum(v for _, v in bars) == 3
    assert bars == [("2-2", 2), ("3-3", 0), ("4-4", 0), ("5-5", 1)]


def test_single_state_pie_is_one_full_slice():
    svg = render_charts(fake_report([1], {"Settled": 7}, [[0, 7]]))["state_pie.svg"]
    assert parse_chart(svg) == [("Settled", 7)]
    assert svg.count('class="slice"') == 1 and "<circle" in svg


def test_charts_match_csv(notary_result):
    charts = render_charts(notary_result.report)
    rows = list(csv.DictReader(io.StringIO(notary_result.series.windows_csv())))
    goodput = parse_chart(charts["goodput.svg"])
    assert goodput == [(r["window_start"], int(r["settled"])) for r in rows]
    data = chart_data(notary_result.report)
    for name in ("latency_histogram", "state_pie", "state_bar"):
        assert parse_chart(charts[f"{name}.svg"]) == [tuple(x) for x in data[name]]


def test_write_and_read(tmp_path, notary_result):
    p = tmp_path / "r.json"
    write_report(notary_result.report, p)
    assert read_report(p) == parse(serialize(notary_result.report))
    with pytest.raises(IoError):
        read_report(tmp_path / "missing.json")
    with pytest.raises(IoError):
        write_report(notary_result.report, tmp_path / "no" / "dir" / "r.json")


def test_attack_section_present_for_attack_runs():
    rep = run_config(load_config("notary_sybil")).report
    assert rep["attack"]["spec"]["kind"] == "SybilNotary"
    assert rep["attack"]["outcomes"]["forged_mints_accepted"] == 1
    assert rep["mandatory_pass"] is False
