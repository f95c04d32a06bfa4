"""End-to-end pipeline: config -> simulation -> metrics -> verdicts -> report.

Output directory layout::

    report.json       the BenchReport
    transfers.csv     one row per transfer (monitor.TRANSFER_COLUMNS)
    windows.csv       one row per metric window (MetricSeries.window_columns)
    charts/*.svg      latency histogram, state pie, state bar, goodput
    events.log        the raw event log, JSON lines
"""

from __future__ import annotations

import copy
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .adversary import attack_outcomes
from .config import get_path, non_default_settings, normalize, set_path, to_plan
from .engine import EventLog
from .errors import EmptyValueList, IoError
from .executor import RunPlan, execute
from .monitor import MetricSeries, derive_metrics, summarize
from .report import assemble, build_id, write_charts, write_report
from .verify import VerdictSet, verify_run


@dataclass
class RunResult:
    plan: RunPlan
    log: EventLog
    series: MetricSeries
    summary: dict[str, Any]
    verdicts: VerdictSet
    report: dict[str, Any]

    @property
    def exit_code(self) -> int:
        return 0 if self.verdicts.mandatory_pass else 1


def run_config(cfg: dict[str, Any], out_dir: str | Path | None = None) -> RunResult:
    """Run a normalized config; writes the output directory when ``out_dir`` is given."""
    started = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    plan = to_plan(cfg)
    log = execute(plan)
    series = derive_metrics(log, plan.warmup, cfg["runtime"]["window"])
    summary = summarize(series)
    verdicts = verify_run(log)
    provenance = {
        "run_id": plan.run_id,
        "build_id": build_id(),
        "config": cfg,
        "non_default_settings": non_default_settings(cfg),
        "attack_outcomes": attack_outcomes(log),
        "series": {"transfers": "transfers.csv", "windows": "windows.csv", "events": "events.log"},
        "wall_clock": {"started_at": stamp,
                       "runtime_seconds": round(time.perf_counter() - started, 6)},
    }
    report = assemble(summary, verdicts, plan, provenance)
    result = RunResult(plan, log, series, summary, verdicts, report)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result: RunResult, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "transfers.csv").write_text(result.series.transfers_csv())
        (out / "windows.csv").write_text(result.series.windows_csv())
    except OSError as exc:
        raise IoError(str(exc)) from exc
    write_report(result.report, out / "report.json")
    write_charts(result.report, out / "charts")
    result.log.dump(out / "events.log")
    return out


def sweep(cfg: dict[str, Any], parameter: str, values: list[Any],
          out_dir: str | Path | None = None) -> tuple[list[RunResult], list[dict[str, Any]]]:
    """One run per value with seed ``base + index``; returns results and the combined table."""
    if not values:
        raise EmptyValueList(f"sweep over {parameter!r} needs at least one value")
    get_path(cfg, parameter)  # raises UnknownParameter
    results, table = [], []
    for i, value in enumerate(values):
        run_cfg = copy.deepcopy(cfg)
        set_path(run_cfg, parameter, value)
        run_cfg["seed"] = cfg["seed"] + i
        run_cfg = normalize(run_cfg)
        sub = None if out_dir is None else Path(out_dir) / f"{i:02d}-{_slug(value)}"
        res = run_config(run_cfg, sub)
        lat = res.summary["latency"]
        results.append(res)
        table.append({"value": value, "seed": run_cfg["seed"], "p50": lat["p50"], "p95": lat["p95"],
                      "goodput": res.summary["goodput_per_tick"], "settled": res.summary["settled"],
                      "mandatory_pass": res.verdicts.mandatory_pass})
    if out_dir is not None:
        try:
            Path(out_dir, "sweep.csv").write_text(format_sweep_csv(parameter, table))
        except OSError as exc:
            raise IoError(str(exc)) from exc
    return results, table


def _slug(value: Any) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in str(value))


def format_sweep_csv(parameter: str, table: list[dict[str, Any]]) -> str:
    cols = ("value", "seed", "p50", "p95", "goodput", "settled", "mandatory_pass")
    lines = [",".join(cols)]
    for row in table:
        lines.append(",".join("" if row[c] is None else str(row[c]) for c in cols))
    return f"# sweep over {parameter}\n" + "\n".join(lines) + "\n"


def format_sweep_table(parameter: str, table: list[dict[str, Any]]) -> str:
    head = f"{parameter:>20} {'seed':>6} {'p50':>6} {'p95':>6} {'goodput':>10} {'settled':>8}"
    rows = [head]
    for r in table:
        p50 = "-" if r["p50"] is None else r["p50"]
        p95 = "-" if r["p95"] is None else r["p95"]
        rows.append(f"{str(r['value']):>20} {r['seed']:>6} {p50:>6} {p95:>6} "
                    f"{r['goodput']:>10.4f} {r['settled']:>8}")
    return "\n".join(rows)

