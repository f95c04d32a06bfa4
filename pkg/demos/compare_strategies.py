"""Run the same cross-chain transfer workload over each reference bridge.

Notary, relay and hash-lock bridges trade latency for trust assumptions; this
prints their settle latency and goodput side by side, followed by the static
capability matrix.
"""

from __future__ import annotations

from ifpbench.config import load_config
from ifpbench.ifp import capability_matrix, format_matrix
from ifpbench.runner import run_config


def main() -> None:
    print(f"{'config':<12} {'settled':>8} {'p50':>5} {'p95':>5} {'goodput':>9}  mandatory")
    for name in ("notary_ctp", "relay_ctp", "htlc_ctp"):
        res = run_config(load_config(name))
        s, lat = res.summary, res.summary["latency"]
        print(f"{name:<12} {s['settled']:>8} {lat['p50']:>5} {lat['p95']:>5} "
              f"{s['goodput_per_tick']:>9.3f}  {'pass' if res.verdicts.mandatory_pass else 'FAIL'}")
    print()
    print(format_matrix(capability_matrix()), end="")


if __name__ == "__main__":
    main()
