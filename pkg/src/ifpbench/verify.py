"""Post-run correctness checks over an event log and final chain states.

Rules are data: each :class:`Rule` carries an id, a level and a check
function.  Mandatory rules decide the run's exit status; Suggested rules are
quality signals; usability rules are documentation-level and always report
NotApplicable.  Checkers never raise on log content, they return verdicts.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

from .engine import EventLog
from .ifp.base import is_legal_sequence

MANDATORY = "Mandatory"
SUGGESTED = "Suggested"
PASS, FAIL, NA = "Pass", "Fail", "NotApplicable"

MINTING_STRATEGIES = ("Notary", "RelayPeg")
RELEASE_KINDS = ("Unlock", "Redeem", "Refund")


@dataclass
class RuleVerdict:
    rule_id: str
    level: str
    verdict: str
    evidence: list[str] = field(default_factory=list)
    detail: str = ""

    def __post_init__(self):
        if self.verdict == FAIL and not self.evidence:
            raise ValueError(f"{self.rule_id}: a Fail verdict needs evidence")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class Rule:
    rule_id: str
    level: str
    description: str
    check: Callable[[dict, EventLog], RuleVerdict]


def _verdict(rule_id: str, level: str, bad: list[str], detail: str = "") -> RuleVerdict:
    bad = sorted(set(bad))
    return RuleVerdict(rule_id, level, FAIL if bad else PASS, bad, detail if bad else "")


def final_states_from_log(log: EventLog) -> dict[str, dict[str, Any]]:
    """Last ``final_state`` record per chain, as ``{chain: snapshot}``."""
    out = {}
    for r in log.of_type("final_state"):
        out[r["chain"]] = {k: r[k] for k in ("balances", "locks", "released", "wrapped",
                                             "wrapped_supply", "burned", "minted") if k in r}
    return out


def _strategies(log: EventLog) -> dict[str, str]:
    return {r["bridge"]: r["strategy"] for r in log.of_type("bridge")}


# mandatory rules -------------------------------------------------------------

def check_conservation(final_states: dict[str, dict[str, Any]], log: EventLog) -> RuleVerdict:
    """Per-asset conservation at the final tick.

    For every chain's native asset:

    * home balances plus home locks equal the genesis total;
    * wrapped supply on all foreign chains never exceeds the home escrow held
      by minting bridges;
    * every accepted Mint is backed by a successful Lock with the same
      transfer id and amount, and every bridge Unlock by a Burn of that lock.
    """
    rid = "M1-conservation"
    bad: list[str] = []
    notes: list[str] = []
    genesis = {r["chain"]: sum(r["balances"].values()) for r in log.of_type("genesis")}
    strategies = _strategies(log)

    for chain, total in genesis.items():
        st = final_states.get(chain)
        if st is None:
            continue
        home = sum(st.get("balances", {}).values()) + sum(l["amount"] for l in st.get("locks", {}).values())
        if home != total:
            bad.append(f"chain:{chain}")
            notes.append(f"{chain}: balances+locks {home} != genesis {total}")
        escrow = sum(l["amount"] for l in st.get("locks", {}).values()
                     if strategies.get(l.get("bridge")) in MINTING_STRATEGIES)
        wrapped = sum(s.get("wrapped_supply", {}).get(chain, 0)
                      for c, s in final_states.items() if c != chain)
        if wrapped > escrow:
            notes.append(f"{chain}: wrapped supply {wrapped} > escrow {escrow}")
            bad.append(f"asset:{chain}")

    locks: dict[tuple[str, str], int] = {}
    burns: dict[tuple[str, str], int] = {}
    for r in log.of_type("tx"):
        if r["ok"] and r["kind"] == "Lock":
            locks[(r["chain"], r["transfer"])] = r["amount"]
        elif r["ok"] and r["kind"] == "Burn":
            burns[(r["asset"], r["lock_id"])] = r["amount"]
    for r in log.of_type("tx"):
        if not r["ok"]:
            continue
        if r["kind"] == "Mint" and locks.get((r["asset"], r["transfer"])) != r["amount"]:
            bad.append(r["transfer"])
            notes.append(f"unbacked Mint {r['tx_id']}")
        elif r["kind"] == "Unlock" and (r["chain"], r["lock_id"]) not in burns:
            bad.append(r["transfer"] or r["tx_id"])
            notes.append(f"Unlock {r['tx_id']} without a Burn")
    # evidence prefers transfer ids; chain/asset markers only when nothing finer exists
    fine = [b for b in bad if not b.startswith(("chain:", "asset:"))]
    return _verdict(rid, MANDATORY, fine or bad, "; ".join(notes))


def check_atomicity(log: EventLog) -> RuleVerdict:
    """Every hash-locked swap ends both-redeemed or both-refunded."""
    rid = "M2-atomicity"
    strategies = _strategies(log)
    htlc = {b for b, s in strategies.items() if s == "HashLock"}
    swaps = {r["transfer"] for r in log.of_type("transfer_submitted")
             if r["bridge"] in htlc and r["kind"] == "ValueTransfer"}
    if not swaps:
        return RuleVerdict(rid, MANDATORY, NA, detail="no hash-locked swaps in log")
    outcomes: dict[str, set[str]] = defaultdict(set)
    for r in log.of_type("tx"):
        if r["ok"] and r["kind"] in ("Redeem", "Refund") and r["transfer"] in swaps:
            outcomes[r["transfer"]].add(r["kind"])
    bad = [tid for tid, kinds in outcomes.items() if kinds == {"Redeem", "Refund"}]
    return _verdict(rid, MANDATORY, bad, "one leg redeemed and the other refunded")


def check_state_machine(log: EventLog) -> RuleVerdict:
    """Every transfer walks a prefix of the legal state order and never leaves a terminal state."""
    rid = "M3-state-machine"
    seqs: dict[str, list[str]] = defaultdict(list)
    for r in log.of_type("transfer_state"):
        seqs[r["transfer"]].append(r["state"])
    bad = [tid for tid, seq in seqs.items() if not is_legal_sequence(seq)]
    return _verdict(rid, MANDATORY, bad, "illegal state sequence")


def check_no_double_release(log: EventLog) -> RuleVerdict:
    """Each lock is released (Unlock, Redeem or Refund) at most once."""
    rid = "M4-no-double-release"
    seen: dict[tuple[str, str], list[str]] = defaultdict(list)
    for r in log.of_type("tx"):
        if r["ok"] and r["kind"] in RELEASE_KINDS:
            seen[(r["chain"], r["lock_id"])].append(r["tx_id"])
    bad = [tx for ids in seen.values() if len(ids) > 1 for tx in ids]
    return _verdict(rid, MANDATORY, bad, "lock released more than once")


# suggested and usability rules ----------------------------------------------

def check_liveness(log: EventLog) -> RuleVerdict:
    """Workload transfers reach a terminal state before the horizon."""
    legit = {r["transfer"] for r in log.of_type("transfer_submitted") if r["origin"] == "workload"}
    bad = [r["transfer"] for r in log.of_type("timed_out") if r["transfer"] in legit]
    return _verdict("S1-liveness", SUGGESTED, bad, "workload transfers still in flight at horizon")


def check_no_failures(log: EventLog) -> RuleVerdict:
    """Workload transfers do not end Failed."""
    legit = {r["transfer"] for r in log.of_type("transfer_submitted") if r["origin"] == "workload"}
    bad = [r["transfer"] for r in log.of_type("transfer_state")
           if r["state"] == "Failed" and r["transfer"] in legit]
    return _verdict("S2-no-failed-transfers", SUGGESTED, bad, "workload transfers ended Failed")


def _not_applicable(rule_id: str, pointer: str) -> Callable[[dict, EventLog], RuleVerdict]:
    def check(_states: dict, _log: EventLog) -> RuleVerdict:
        return RuleVerdict(rule_id, SUGGESTED, NA, detail=f"documentation-level; see {pointer}")
    return check


CATALOG: list[Rule] = [
    Rule("M1-conservation", MANDATORY, "per-asset value conservation", check_conservation),
    Rule("M2-atomicity", MANDATORY, "hash-locked swaps are all-or-nothing",
         lambda s, log: check_atomicity(log)),
    Rule("M3-state-machine", MANDATORY, "legal transfer state sequences",
         lambda s, log: check_state_machine(log)),
    Rule("M4-no-double-release", MANDATORY, "each lock released at most once",
         lambda s, log: check_no_double_release(log)),
    Rule("S1-liveness", SUGGESTED, "workload transfers terminate before the horizon",
         lambda s, log: check_liveness(log)),
    Rule("S2-no-failed-transfers", SUGGESTED, "workload transfers do not fail",
         lambda s, log: check_no_failures(log)),
    Rule("U1-documentation", SUGGESTED, "IFP documentation quality",
         _not_applicable("U1-documentation", "README.md#verification-rules")),
    Rule("U2-user-experience", SUGGESTED, "IFP user-facing tooling",
         _not_applicable("U2-user-experience", "README.md#verification-rules")),
]


def verify_log(log: EventLog, final_states: dict[str, dict[str, Any]] | None = None,
               rules: list[Rule] | None = None) -> list[RuleVerdict]:
    if final_states is None:
        final_states = final_states_from_log(log)
    return [rule.check(final_states, log) for rule in (rules or CATALOG)]


def mandatory_ok(verdicts: list[RuleVerdict]) -> bool:
    return all(v.verdict != FAIL for v in verdicts if v.level == MANDATORY)


@dataclass
class VerdictSet:
    """Verdicts of one run, tagged with the run id they were computed for."""

    run_id: str
    verdicts: list[RuleVerdict]

    @property
    def mandatory_pass(self) -> bool:
        return mandatory_ok(self.verdicts)


def verify_run(log: EventLog, rules: list[Rule] | None = None) -> VerdictSet:
    starts = log.of_type("run_start")
    run_id = starts[0]["run_id"] if starts else ""
    return VerdictSet(run_id, verify_log(log, rules=rules))


def format_verdicts(verdicts: list[RuleVerdict]) -> str:
    lines = []
    for v in verdicts:
        line = f"{v.rule_id:<24} {v.level:<10} {v.verdict}"
        if v.evidence:
            shown = ", ".join(v.evidence[:5]) + (" ..." if len(v.evidence) > 5 else "")
            line += f"  [{shown}]"
        lines.append(line)
    return "\n".join(lines)
