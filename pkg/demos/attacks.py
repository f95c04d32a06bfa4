"""Security tier walkthrough: a DoS ladder, a Sybil notary quorum and a Byzantine relay.

Each attack is switched on through a config override, the same way the CLI's
``--set`` flag does it.
"""

from __future__ import annotations

from ifpbench.config import apply_overrides, load_config
from ifpbench.runner import run_config


def dos_ladder() -> None:
    print("DoS flood on the notary bridge (spam transfers per tick)")
    base = load_config("notary_dos")
    for intensity in (0, 2, 4, 8, 16):
        res = run_config(apply_overrides(base, [f"attack.intensity={intensity}"]))
        s = res.summary
        print(f"  intensity {intensity:>2}: goodput {s['goodput_per_tick']:.3f}/tick, "
              f"p50 {s['latency']['p50']}, spam {res.report['attack']['outcomes']['spam_submitted']}")


def sybil() -> None:
    print("Sybil notaries (n=4, k=3) co-signing a forged mint")
    base = load_config("notary_sybil")
    for count in range(5):
        res = run_config(apply_overrides(base, [f"attack.intensity={count}"]))
        m1 = next(v for v in res.verdicts.verdicts if v.rule_id == "M1-conservation")
        outcomes = res.report["attack"]["outcomes"]
        print(f"  {count} adversarial: forged mints accepted {outcomes['forged_mints_accepted']}, "
              f"conservation {m1.verdict} {m1.evidence or ''}")


def byzantine_relay() -> None:
    res = run_config(load_config("relay_byzantine"))
    outcomes = res.report["attack"]["outcomes"]
    print(f"Byzantine relay: {outcomes['headers_rejected']} invalid headers rejected, "
          f"{res.summary['settled']} transfers settled, mandatory rules "
          f"{'pass' if res.verdicts.mandatory_pass else 'FAIL'}")


if __name__ == "__main__":
    dos_ladder()
    print()
    sybil()
    print()
    byzantine_relay()
