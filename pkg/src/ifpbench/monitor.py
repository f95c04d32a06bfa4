"""Transaction behaviour monitor: metrics derived from a finished run log.

Resource usage is reported through simulated proxies, not machine
measurements:

* network -> log records emitted per component (``msgs:<component>``)
* CPU     -> the same per-component record counts over time
* memory  -> state-store entry count per chain (``store:<chain>``)

Percentiles use the nearest-rank definition: the ``ceil(q * n / 100)``-th
smallest sample.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .engine import EventLog
from .errors import EmptySeries, TruncatedLog
from .ifp.base import MAIN_PATH, TransferState

STATE_ORDER = [s.value for s in MAIN_PATH] + [TransferState.REFUNDED.value, TransferState.FAILED.value]
TIMED_OUT = "TimedOutAtHorizon"
TRANSFER_COLUMNS = ("transfer_id", "bridge", "kind", "origin", "submitted_at", "terminal_state",
                    "terminal_at", "settle_latency")


@dataclass
class TransferRow:
    transfer_id: str
    bridge: str
    kind: str
    origin: str
    submitted_at: int
    terminal_state: str | None = None
    terminal_at: int | None = None
    settle_latency: int | None = None


@dataclass
class MetricSeries:
    run_id: str
    warmup: int
    horizon: int
    window: int
    transfers: list[TransferRow]
    windows: list[dict[str, Any]]
    chains: list[str] = field(default_factory=list)
    components: list[str] = field(default_factory=list)

    def window_columns(self) -> list[str]:
        return (["window_start", "window_end", "submitted", "settled", "spam_submitted"]
                + [f"queue_max:{c}" for c in self.chains]
                + [f"store:{c}" for c in self.chains]
                + [f"msgs:{c}" for c in self.components]
                + [f"entered:{s}" for s in STATE_ORDER])

    def transfers_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRANSFER_COLUMNS)
        for row in self.transfers:
            d = asdict(row)
            w.writerow(["" if d[c] is None else d[c] for c in TRANSFER_COLUMNS])
        return buf.getvalue()

    def windows_csv(self) -> str:
        cols = self.window_columns()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for win in self.windows:
            w.writerow([win[c] for c in cols])
        return buf.getvalue()


def nearest_rank(samples: Sequence[float], q: float) -> float:
    """Nearest-rank percentile, ``0 < q <= 100``."""
    if not samples:
        raise EmptySeries("percentile of an empty sample")
    if not 0 < q <= 100:
        raise ValueError("q must lie in (0, 100]")
    ordered = sorted(samples)
    rank = math.ceil(Fraction(q).limit_denominator(10**9) * len(ordered) / 100)
    return ordered[max(rank, 1) - 1]


def derive_metrics(log: EventLog, warmup: int | None = None, window: int = 10) -> MetricSeries:
    """Per-transfer and per-window series for ``log``.

    Window counts ignore events before ``warmup`` (default: the run's own
    warmup).  Transfer rows cover every transfer that resolves, terminally or
    by reaching the horizon, at or after ``warmup``; its latency still runs
    from its own submit tick.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    starts = log.of_type("run_start")
    ends = log.of_type("run_end")
    if not starts or not ends:
        raise TruncatedLog("log has no run_start/run_end record")
    start, end = starts[0], ends[-1]
    horizon = end["horizon"]
    if warmup is None:
        warmup = start["warmup"]

    rows: dict[str, TransferRow] = {}
    chains: list[str] = []
    components: set[str] = set()
    edges = list(range(warmup, horizon, window))
    wins = [Counter() for _ in edges]
    queue_max = [dict() for _ in edges]
    store_max = [dict() for _ in edges]

    def slot(t: int) -> int | None:
        if t < warmup or t >= horizon:
            return None
        return (t - warmup) // window

    for r in log:
        typ, t = r["type"], r["t"]
        if typ == "genesis":
            chains.append(r["chain"])
        i = slot(t)
        if i is not None:
            components.add(r["src"])
            wins[i][f"msgs:{r['src']}"] += 1
        if typ == "transfer_submitted":
            rows[r["transfer"]] = TransferRow(r["transfer"], r["bridge"], r["kind"], r["origin"], t)
            if i is not None:
                wins[i]["spam_submitted" if r["origin"] == "spam" else "submitted"] += 1
        elif typ == "transfer_state":
            row = rows.get(r["transfer"])
            if row is None:
                continue
            if i is not None:
                wins[i][f"entered:{r['state']}"] += 1
            if r["state"] in ("Settled", "Refunded", "Failed"):
                row.terminal_state, row.terminal_at = r["state"], t
                if r["state"] == "Settled":
                    row.settle_latency = t - row.submitted_at
                    if i is not None and row.origin != "spam":
                        wins[i]["settled"] += 1
        elif typ == "timed_out":
            row = rows.get(r["transfer"])
            if row is not None and row.terminal_state is None:
                row.terminal_state, row.terminal_at = TIMED_OUT, t
        elif typ == "block" and i is not None:
            q = queue_max[i]
            q[r["chain"]] = max(q.get(r["chain"], 0), r["queue"])
            s = store_max[i]
            s[r["chain"]] = max(s.get(r["chain"], 0), r["store"])

    comps = sorted(components)
    windows = []
    for i, lo in enumerate(edges):
        c = wins[i]
        win: dict[str, Any] = {"window_start": lo, "window_end": min(lo + window, horizon),
                               "submitted": c["submitted"], "settled": c["settled"],
                               "spam_submitted": c["spam_submitted"]}
        for ch in chains:
            win[f"queue_max:{ch}"] = queue_max[i].get(ch, 0)
            win[f"store:{ch}"] = store_max[i].get(ch, 0)
        for comp in comps:
            win[f"msgs:{comp}"] = c[f"msgs:{comp}"]
        for s in STATE_ORDER:
            win[f"entered:{s}"] = c[f"entered:{s}"]
        windows.append(win)
    # a transfer is measured iff it resolves (terminally or at the horizon) after warmup
    measured = [row for row in rows.values() if row.terminal_at is None or row.terminal_at >= warmup]
    return MetricSeries(start["run_id"], warmup, horizon, window, measured, windows, chains, comps)


def _histogram(values: list[int], max_bins: int = 20) -> list[list[int]]:
    """Integer-aligned equal-width bins as ``[lo, hi_exclusive, count]``."""
    if not values:
        return []
    lo, hi = min(values), max(values)
    width = max(1, math.ceil((hi - lo + 1) / max_bins))
    counts = Counter((v - lo) // width for v in values)
    nbins = (hi - lo) // width + 1
    return [[lo + b * width, lo + (b + 1) * width, counts.get(b, 0)] for b in range(nbins)]


def summarize(series: MetricSeries) -> dict[str, Any]:
    legit = [r for r in series.transfers if r.origin != "spam"]
    if not legit:
        raise EmptySeries("no workload transfers resolved after warmup")
    latencies = [r.settle_latency for r in legit if r.settle_latency is not None]
    span = series.horizon - series.warmup
    breakdown = Counter(r.terminal_state or "InFlight" for r in legit)
    latency: dict[str, Any] = {"count": len(latencies)}
    if latencies:
        latency.update(min=min(latencies), max=max(latencies),
                       mean=float(sum(latencies)) / len(latencies),
                       p50=nearest_rank(latencies, 50), p95=nearest_rank(latencies, 95),
                       p99=nearest_rank(latencies, 99))
    else:
        latency.update(min=None, max=None, mean=None, p50=None, p95=None, p99=None)
    peak = max((w["settled"] for w in series.windows), default=0)
    return {
        "run_id": series.run_id,
        "warmup": series.warmup,
        "horizon": series.horizon,
        "window": series.window,
        "transfers": len(legit),
        "settled": len(latencies),
        "spam_transfers": len(series.transfers) - len(legit),
        "latency": latency,
        "goodput_per_tick": len(latencies) / span,
        "peak_window_settled": peak,
        "peak_goodput_per_tick": peak / series.window,
        "terminal_breakdown": {k: breakdown[k] for k in sorted(breakdown)},
        "latency_histogram": _histogram(latencies),
        "goodput_series": [[w["window_start"], w["settled"]] for w in series.windows],
        "percentile_method": "nearest-rank",
        "resource_proxies": {
            "network_msgs": {c: sum(w[f"msgs:{c}"] for w in series.windows) for c in series.components},
            "peak_store_entries": {c: max((w[f"store:{c}"] for w in series.windows), default=0)
                                   for c in series.chains},
            "peak_queue_depth": {c: max((w[f"queue_max:{c}"] for w in series.windows), default=0)
                                 for c in series.chains},
            "note": "simulated proxies (log records, state-store entries, mempool depth), not OS measurements",
        },
    }
