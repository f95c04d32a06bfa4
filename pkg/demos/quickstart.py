"""Run the default notary benchmark, print its summary and write the output directory.

    python demos/quickstart.py [OUT_DIR]
"""

from __future__ import annotations

import sys

from ifpbench.config import load_config
from ifpbench.runner import run_config
from ifpbench.verify import format_verdicts


def main(out_dir: str = "out/quickstart") -> None:
    result = run_config(load_config("notary_ctp"), out_dir)
    s = result.summary
    print(f"run {result.plan.run_id}: {s['settled']} of {s['transfers']} transfers settled")
    print(f"latency p50={s['latency']['p50']} p95={s['latency']['p95']} ticks, "
          f"goodput {s['goodput_per_tick']:.3f}/tick")
    print(format_verdicts(result.verdicts.verdicts))
    print(f"report, CSV series and charts written to {out_dir}/")


if __name__ == "__main__":
    main(*sys.argv[1:2])
