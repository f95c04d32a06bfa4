"""Benchmark report: provenance header, metrics, verdicts and static SVG charts.

Serialized form is JSON with sorted keys and two-space indent, so a
serialize/parse/serialize cycle is byte-identical.  Chart elements carry
their numbers in ``data-label`` / ``data-value`` attributes, which is how
:func:`parse_chart` reads them back.

Report schema (``schema_version`` 1)::

    schema_version  int
    header          tool, version, build_id, run_id, seed, time_model,
                    percentile_method, resource_proxies, ifps, config,
                    non_default_settings, wall_clock
    metrics         output of monitor.summarize
    series          {"transfers": file, "windows": file} or {"absent": true}
    verdicts        list of RuleVerdict dicts
    mandatory_pass  bool
    attack          attack spec and outcome counts, or {"absent": true}
"""

from __future__ import annotations

import copy
import functools
import hashlib
import json
import math
import xml.etree.ElementTree as ET
from dataclasses import asdict
from pathlib import Path
from typing import Any
from xml.sax.saxutils import quoteattr

from . import __version__
from .errors import IoError, RunIdMismatch
from .executor import RunPlan
from .ifp.base import IfpDescriptor
from .verify import VerdictSet

SCHEMA_VERSION = 1
WALL_CLOCK_FIELDS = ("wall_clock",)
ABSENT = {"absent": True}


@functools.lru_cache(maxsize=None)
def build_id() -> str:
    """Digest of the package's own source files: changes whenever the code does."""
    root = Path(__file__).parent
    h = hashlib.sha256()
    for p in sorted(root.rglob("*.py")):
        h.update(p.relative_to(root).as_posix().encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


def _descriptor(b) -> dict[str, Any]:
    d = IfpDescriptor(b.name or b.bridge_id, b.strategy, dict(b.params))
    return {"bridge_id": b.bridge_id, "name": d.name, "strategy": d.strategy.value,
            "source": b.source, "dest": b.dest, "params": asdict(d.params),
            "attributes": asdict(d.attributes)}


def assemble(summary: dict[str, Any], verdicts: VerdictSet, plan: RunPlan,
             provenance: dict[str, Any]) -> dict[str, Any]:
    """Combine one run's pieces; every input must carry the same run id."""
    ids = {"summary": summary.get("run_id"), "verdicts": verdicts.run_id, "plan": plan.run_id,
           "provenance": provenance.get("run_id", plan.run_id)}
    if len(set(ids.values())) != 1:
        raise RunIdMismatch(f"inputs come from different runs: {ids}")
    header = {
        "tool": "ifpbench",
        "version": __version__,
        "build_id": provenance.get("build_id") or build_id(),
        "run_id": plan.run_id,
        "seed": plan.runtime.seed,
        "time_model": "logical ticks; block k of a chain is produced at tick k * block_interval",
        "percentile_method": "nearest-rank: the ceil(q*n/100)-th smallest sample",
        "resource_proxies": "network = log records per component, CPU = the same counts over time, "
                            "memory = state-store entries per chain; simulated, not OS measurements",
        "ifps": [_descriptor(b) for b in plan.runtime.bridges],
        "config": provenance.get("config", ABSENT),
        "non_default_settings": provenance.get("non_default_settings", []),
        "wall_clock": provenance.get("wall_clock", ABSENT),
    }
    attack = ABSENT
    if plan.attack is not None:
        attack = {"spec": asdict(plan.attack), "outcomes": provenance.get("attack_outcomes", ABSENT)}
    return {
        "schema_version": SCHEMA_VERSION,
        "header": header,
        "metrics": summary,
        "series": provenance.get("series", ABSENT),
        "verdicts": [v.to_dict() for v in verdicts.verdicts],
        "mandatory_pass": verdicts.mandatory_pass,
        "attack": attack,
    }


def serialize(report: dict[str, Any]) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def parse(text: str) -> dict[str, Any]:
    return json.loads(text)


def comparable(report: dict[str, Any]) -> dict[str, Any]:
    """The report with wall-clock fields removed, for run-to-run comparison."""
    out = copy.deepcopy(report)
    for name in WALL_CLOCK_FIELDS:
        out["header"].pop(name, None)
    return out


def write_report(report: dict[str, Any], path: str | Path) -> None:
    try:
        Path(path).write_text(serialize(report))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_report(path: str | Path) -> dict[str, Any]:
    try:
        return parse(Path(path).read_text())
    except OSError as exc:
        raise IoError(str(exc)) from exc


# charts ------------------------------------------------------------------------

W, H = 640, 360
ML, MR, MT, MB = 60, 20, 40, 60
PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860", "#da8bc3", "#8c8c8c")


def _num(v: float) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def _svg(title: str, body: list[str], kind: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" data-chart={quoteattr(kind)}>')
    return "\n".join([head, f'<title>{title}</title>',
                      f'<text x="{W / 2}" y="24" text-anchor="middle" font-size="16">{title}</text>',
                      *body, "</svg>"]) + "\n"


def _bars(title: str, kind: str, items: list[tuple[str, float]], xlabel: str, ylabel: str) -> str:
    body = []
    pw, ph = W - ML - MR, H - MT - MB
    top = max((v for _, v in items), default=0) or 1
    n = max(len(items), 1)
    bw = pw / n
    body.append(f'<line x1="{ML}" y1="{MT + ph}" x2="{ML + pw}" y2="{MT + ph}" stroke="black"/>')
    body.append(f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{MT + ph}" stroke="black"/>')
    body.append(f'<text x="{ML - 8}" y="{MT + 4}" text-anchor="end" font-size="11">{_num(top)}</text>')
    body.append(f'<text x="{ML - 8}" y="{MT + ph}" text-anchor="end" font-size="11">0</text>')
    for i, (label, value) in enumerate(items):
        h = ph * value / top
        x = ML + i * bw
        body.append(f'<rect class="bar" x="{x + bw * 0.1:.2f}" y="{MT + ph - h:.2f}" '
                    f'width="{bw * 0.8:.2f}" height="{h:.2f}" fill="{PALETTE[0]}" '
                    f'data-label={quoteattr(label)} data-value="{_num(value)}"/>')
        if n <= 30 or i % math.ceil(n / 30) == 0:
            body.append(f'<text x="{x + bw / 2:.2f}" y="{MT + ph + 14}" text-anchor="middle" '
                        f'font-size="10">{label}</text>')
    body.append(f'<text x="{ML + pw / 2}" y="{H - 16}" text-anchor="middle" font-size="12">{xlabel}</text>')
    body.append(f'<text x="16" y="{MT + ph / 2}" font-size="12" transform="rotate(-90 16 {MT + ph / 2})" '
                f'text-anchor="middle">{ylabel}</text>')
    return _svg(title, body, kind)


def _pie(title: str, items: list[tuple[str, float]]) -> str:
    cx, cy, r = W / 2 - 80, H / 2 + 10, 120
    total = sum(v for _, v in items)
    body = []
    angle = -math.pi / 2
    for i, (label, value) in enumerate(items):
        color = PALETTE[i % len(PALETTE)]
        attrs = f'class="slice" fill="{color}" data-label={quoteattr(label)} data-value="{_num(value)}"'
        if total and value == total:
            body.append(f'<circle cx="{cx}" cy="{cy}" r="{r}" {attrs}/>')
        elif value:
            sweep = 2 * math.pi * value / total
            x0, y0 = cx + r * math.cos(angle), cy + r * math.sin(angle)
            angle += sweep
            x1, y1 = cx + r * math.cos(angle), cy + r * math.sin(angle)
            large = 1 if sweep > math.pi else 0
            body.append(f'<path d="M{cx},{cy} L{x0:.3f},{y0:.3f} A{r},{r} 0 {large} 1 {x1:.3f},{y1:.3f} Z" '
                        f'{attrs}/>')
        ly = 70 + 22 * i
        share = 100 * value / total if total else 0
        body.append(f'<rect x="{W - 200}" y="{ly - 11}" width="12" height="12" fill="{color}"/>')
        body.append(f'<text x="{W - 182}" y="{ly}" font-size="12">{label}: {_num(value)} '
                    f'({share:.1f}%)</text>')
    return _svg(title, body, "pie")


def chart_data(report: dict[str, Any]) -> dict[str, list[tuple[str, float]]]:
    """The exact (label, value) pairs each chart draws, taken from the report."""
    m = report["metrics"]
    breakdown = list(m["terminal_breakdown"].items())
    return {
        "latency_histogram": [(f"{lo}-{hi - 1}", c) for lo, hi, c in m["latency_histogram"]],
        "state_pie": breakdown,
        "state_bar": breakdown,
        "goodput": [(str(start), settled) for start, settled in m["goodput_series"]],
    }


def render_charts(report: dict[str, Any]) -> dict[str, str]:
    """``{filename: svg_text}`` for the four standard charts."""
    data = chart_data(report)
    window = report["metrics"]["window"]
    return {
        "latency_histogram.svg": _bars("Settle latency histogram", "bar", data["latency_histogram"],
                                       "settle latency (ticks)", "transfers"),
        "state_pie.svg": _pie("Terminal-state breakdown", data["state_pie"]),
        "state_bar.svg": _bars("Terminal-state breakdown", "bar", data["state_bar"], "state", "transfers"),
        "goodput.svg": _bars(f"Settled transfers per {window}-tick window", "bar", data["goodput"],
                             "window start (tick)", "settled"),
    }


def write_charts(report: dict[str, Any], directory: str | Path) -> list[Path]:
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, svg in render_charts(report).items():
            (out / name).write_text(svg)
            paths.append(out / name)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return paths


def parse_chart(svg: str) -> list[tuple[str, float]]:
    """Recover the (label, value) pairs drawn in a chart produced here."""
    root = ET.fromstring(svg)
    out = []
    for el in root.iter():
        if "data-value" in el.attrib:
            raw = el.attrib["data-value"]
            value = float(raw) if any(c in raw for c in ".e") else int(raw)
            out.append((el.attrib["data-label"], value))
    return out
