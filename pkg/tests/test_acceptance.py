"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (the lines appear in the
"acceptance criteria" summary section) or directly as a script.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from contextlib import redirect_stdout

import numpy as np
import pytest

from ifpbench.adversary import AttackSpec, attack_outcomes
from ifpbench.cli import main as cli_main
from ifpbench.config import apply_overrides, load_config
from ifpbench.executor import BridgeSpec, RunPlan, RuntimeSpec, execute
from ifpbench.ifp import SwapSchedule, TransferKind, TransferRequest
from ifpbench.ledger import ChainConfig
from ifpbench.monitor import derive_metrics, nearest_rank, summarize
from ifpbench.report import chart_data, comparable, parse, parse_chart, render_charts, serialize
from ifpbench.runner import run_config
from ifpbench.verify import FAIL, MINTING_STRATEGIES, verify_run
from ifpbench.workload import WorkloadSpec

from conftest import World, funded, make_plan
from violations import (clean_htlc_run, duplicate_release, lazy_counterparty_run, sybil_run,
                        tamper_state_record)

criterion = pytest.mark.criterion


def by_rule(verdicts):
    return {v.rule_id: v for v in verdicts.verdicts}


# 1 ---------------------------------------------------------------------------

DETERMINISM_PAIRS = [(name, seed) for name in ("notary_ctp", "relay_ctp", "htlc_ctp", "notary_rwe",
                                               "notary_noaction", "notary_dos", "notary_sybil",
                                               "relay_byzantine", "multi_ifp", "notary_ctp")
                     for seed in (0, 1)]
DETERMINISM_PAIRS[-2:] = [("notary_ctp", 17), ("htlc_ctp", 23)]


def pair_config(name, seed):
    return apply_overrides(load_config(name), [f"seed={seed}", "runtime.horizon=200", "runtime.warmup=20"])


@criterion(1, "Determinism")
def test_determinism(detail):
    assert len(set(DETERMINISM_PAIRS)) == 20
    mismatches = []
    for name, seed in DETERMINISM_PAIRS:
        a, b = run_config(pair_config(name, seed)), run_config(pair_config(name, seed))
        if a.log.to_jsonl() != b.log.to_jsonl():
            mismatches.append(f"{name}/{seed}: log")
        if serialize(comparable(a.report)) != serialize(comparable(b.report)):
            mismatches.append(f"{name}/{seed}: report")
    detail(f"{len(DETERMINISM_PAIRS)} (config, seed) pairs run twice, {len(mismatches)} differences")
    assert not mismatches, mismatches


# 2 ---------------------------------------------------------------------------

def conservation_oracle(log):
    """Independent per-asset ledger check straight from genesis, final state and tx records.

    Returns a list of violated identities (empty when conservation holds).
    """
    problems = []
    genesis = {r["chain"]: sum(r["balances"].values()) for r in log.of_type("genesis")}
    final = {r["chain"]: r for r in log.of_type("final_state")}
    minting = {r["bridge"] for r in log.of_type("bridge") if r["strategy"] in MINTING_STRATEGIES}
    txs = [r for r in log.of_type("tx") if r["ok"]]
    for asset, total in genesis.items():
        st = final[asset]
        held = sum(st["balances"].values()) + sum(l["amount"] for l in st["locks"].values())
        if held != total:
            problems.append(f"{asset}: balances+locks {held} != genesis {total}")
        wrapped = sum(f["wrapped_supply"].get(asset, 0) for c, f in final.items() if c != asset)
        minted = sum(r["amount"] for r in txs if r["kind"] == "Mint" and r["asset"] == asset)
        burned = sum(r["amount"] for r in txs if r["kind"] == "Burn" and r["asset"] == asset)
        if wrapped != minted - burned:
            problems.append(f"{asset}: wrapped {wrapped} != minted {minted} - burned {burned}")
        minted_ids = {r["transfer"] for r in txs if r["kind"] == "Mint" and r["asset"] == asset}
        escrow = {lid: l for lid, l in st["locks"].items() if l["bridge"] in minting}
        pending = sum(l["amount"] for l in escrow.values() if l["transfer_id"] not in minted_ids)
        if sum(l["amount"] for l in escrow.values()) - wrapped != pending:
            problems.append(f"{asset}: escrow - wrapped != locked-but-unminted {pending}")
    return problems


@criterion(2, "Conservation")
def test_conservation(detail):
    strategies = ("Notary", "RelayPeg", "HashLock")
    failures, transfers = [], 0
    for i in range(100):
        strategy = strategies[i % 3]
        total = 40 + (i * 37) % 161  # 40..200
        rate = (1, 2, 4)[i % 4 % 3]
        horizon = 120 + (i * 53) % 180
        log = execute(make_plan(strategy=strategy, total=total, rate=rate, horizon=horizon,
                                seed=1000 + i, capacity=6 + i % 5))
        transfers += len(log.of_type("transfer_submitted"))
        m1 = by_rule(verify_run(log))["M1-conservation"]
        problems = conservation_oracle(log)
        if m1.verdict == FAIL or problems:
            failures.append((strategy, i, m1.evidence, problems))
    detail(f"100 runs ({transfers} transfers), {len(failures)} conservation violations")
    assert not failures, failures[:3]


# 3 ---------------------------------------------------------------------------

HTLC_HORIZON = 60
INITIATOR = ("acct-0", "acct-1")


def swap_once(schedule):
    w = World(ChainConfig("A", 2, 1, 10, funded(2)), ChainConfig("B", 2, 1, 10, funded(2)))
    br = w.connect("HashLock", timeout_long=40, timeout_short=20, liquidity=100)
    w.chain("B").state.balances[br.counterparty] = 100

    def wealth(accounts):
        return sum(w.chain(c).balance(a) for c in ("A", "B") for a in accounts)

    before = (wealth(INITIATOR), wealth((br.counterparty,)))
    tid = br.submit_transfer(TransferRequest(TransferKind.VALUE, "acct-0", "acct-1", 5), schedule)
    w.run(HTLC_HORIZON - 1)
    swap = br.swaps[tid]
    after = (wealth(INITIATOR), wealth((br.counterparty,)))
    return before, after, (swap.src_outcome, swap.dst_outcome)


def htlc_schedules():
    """Every single-deviator schedule within the horizon, plus the all-conforming one."""
    offsets = [None, *range(HTLC_HORIZON)]
    yield "none", SwapSchedule()
    for reveal_at, refunds in itertools.product(offsets, (True, False)):
        yield "initiator", SwapSchedule(initiator_conforms=False, reveal_at=reveal_at,
                                        initiator_refunds=refunds)
    for lock_at, redeem_at, refunds in itertools.product(offsets, offsets, (True, False)):
        yield "counterparty", SwapSchedule(counterparty_conforms=False, lock_at=lock_at,
                                           redeem_at=redeem_at, counterparty_refunds=refunds)


@criterion(3, "HTLC atomicity")
def test_htlc_atomicity(detail):
    counterexamples, count, outcomes = [], 0, Counter()
    for deviator, schedule in htlc_schedules():
        count += 1
        before, after, (src, dst) = swap_once(schedule)
        outcomes[(src, dst)] += 1
        if deviator != "initiator":
            # the conforming initiator must never have paid (source redeemed) without receiving
            if (src, dst) == ("Redeem", "Refund") or after[0] < before[0]:
                counterexamples.append((deviator, schedule, src, dst, before, after))
        if deviator != "counterparty":
            if (src, dst) == ("Refund", "Redeem") or after[1] < before[1]:
                counterexamples.append((deviator, schedule, src, dst, before, after))
    summary = ", ".join(f"{k[0]}/{k[1]}={v}" for k, v in sorted(outcomes.items(), key=str))
    detail(f"{count} schedules over a {HTLC_HORIZON}-tick horizon, "
           f"{len(counterexamples)} counterexamples ({summary})")
    assert not counterexamples, counterexamples[:3]


# 4 ---------------------------------------------------------------------------

@criterion(4, "Notary threshold")
def test_notary_threshold(detail):
    rows = []
    for count in range(5):
        log = sybil_run(0, count)
        forged = {r["transfer"] for r in log.of_type("forged_mint")}
        honest_minted = sum(r["amount"] for r in log.of_type("tx")
                            if r["ok"] and r["kind"] == "Mint" and r["transfer"] not in forged)
        forged_minted = sum(r["amount"] for r in log.of_type("tx")
                            if r["ok"] and r["kind"] == "Mint" and r["transfer"] in forged)
        wrapped = next(r for r in log.of_type("final_state") if r["chain"] == "B")["wrapped_supply"].get("A", 0)
        entered = wrapped == honest_minted + forged_minted and forged_minted > 0
        m1_fails = by_rule(verify_run(log))["M1-conservation"].verdict == FAIL
        rows.append((count, entered, m1_fails, wrapped - honest_minted))
    detail("count:forged_in_supply:M1 " + " ".join(f"{c}:{int(e)}:{'Fail' if f else 'Pass'}"
                                                  for c, e, f, _ in rows))
    for count, entered, m1_fails, extra in rows:
        assert entered is (count >= 3)
        assert m1_fails is (count >= 3)
        assert extra == (1000 if count >= 3 else 0)


# 5 ---------------------------------------------------------------------------

def brute_force_latency(submit, ia, da, ib, db, delay, limit=10_000):
    """Tick-by-tick replay of one notary transfer on otherwise idle chains."""
    lock_height = observed = mint_submit = mint_height = None
    for t in range(limit):
        if t % ia == 0:
            h = t // ia
            if lock_height is None and submit < t:
                lock_height = h
            if lock_height is not None and observed is None and h - lock_height >= da:
                observed = t
        if observed is not None and mint_submit is None and t >= observed + delay:
            mint_submit = t
        if t % ib == 0:
            h = t // ib
            if mint_height is None and mint_submit is not None and mint_submit < t:
                mint_height = h
            if mint_height is not None and h - mint_height >= db:
                return t - submit
    raise AssertionError("transfer did not settle")


LATENCY_COMBOS = [(2, 2, 2, 2, 1), (3, 1, 5, 2, 0), (1, 0, 1, 0, 0), (4, 3, 3, 1, 2), (5, 2, 2, 4, 3)]


def phase_plan(ia, da, ib, db, delay):
    chains = (ChainConfig("A", ia, da, 64, funded(8)), ChainConfig("B", ib, db, 64, funded(8)))
    bridges = (BridgeSpec("br", "Notary", "A", "B", {"n": 4, "k": 3, "observe_delay": delay}),)
    # one transfer at every tick offset 0..ia-1 within the first block interval
    spec = WorkloadSpec("CTP", ia, "open", 1.0, account_pool=8)
    return RunPlan(spec, RuntimeSpec(chains, bridges, 0), horizon=400, warmup=0)


@criterion(5, "Latency lower bound")
def test_latency_lower_bound(detail):
    results = []
    for combo in LATENCY_COMBOS:
        series = derive_metrics(execute(phase_plan(*combo)), 0, 10)
        observed = {r.submitted_at: r.settle_latency for r in series.transfers}
        assert sorted(observed) == list(range(combo[0]))
        oracle = {s: brute_force_latency(s, *combo) for s in range(combo[0])}
        results.append((combo, min(observed.values()), min(oracle.values()), observed == oracle))
    detail("; ".join(f"{c}: sim {s} oracle {o}" for c, s, o, _ in results))
    for combo, sim, oracle, _ in results:
        assert sim == oracle, combo


# 6 ---------------------------------------------------------------------------

@criterion(6, "Throughput saturation")
def test_throughput_saturation(detail):
    interval, capacity = 2, 1
    ceiling = capacity / interval
    goodput = []
    for c in (1, 2, 4, 8, 16):
        plan = make_plan(total=2000, arrival="closed", concurrency=c, horizon=400, warmup=40,
                         seed=11, interval=interval, capacity=capacity)
        goodput.append(summarize(derive_metrics(execute(plan), 40, 20))["goodput_per_tick"])
    detail(f"ceiling {ceiling}/tick, goodput " + " ".join(f"c={c}:{g:.4f}"
                                                          for c, g in zip((1, 2, 4, 8, 16), goodput)))
    assert all(a <= b for a, b in zip(goodput, goodput[1:]))
    assert all(g <= ceiling for g in goodput)


# 7 ---------------------------------------------------------------------------

def dos_plan(intensity):
    attack = None if intensity is None else AttackSpec("DosFlood", intensity, start_at=40, target="br")
    return make_plan(total=300, rate=1.0, horizon=300, warmup=30, seed=5, capacity=10, attack=attack)


@criterion(7, "DoS degradation")
def test_dos_degradation(detail):
    base = execute(dos_plan(None))
    goodput, spam = [], []
    for intensity in (0, 1, 2, 4, 8):
        log = execute(dos_plan(intensity))
        goodput.append(summarize(derive_metrics(log, 30, 20))["goodput_per_tick"])
        spam.append(attack_outcomes(log)["spam_submitted"])
        if intensity == 0:
            strip = lambda recs: [{k: v for k, v in r.items() if k != "run_id"} for r in recs]
            identical = strip(log.records) == strip(base.records)
    detail(f"goodput {' '.join(f'{g:.4f}' for g in goodput)}; spam {spam}; "
           f"intensity 0 identical to no attack: {identical}")
    assert identical
    assert all(a >= b for a, b in zip(goodput, goodput[1:]))


# 8 ---------------------------------------------------------------------------

def violation_corpus():
    for i in range(13):
        yield "M1-conservation", sybil_run(100 + i, 3 + i % 2)
    for i in range(13):
        yield "M2-atomicity", lazy_counterparty_run(200 + i)
    for i in range(12):
        yield "M3-state-machine", tamper_state_record(
            execute(make_plan(strategy=("Notary", "RelayPeg", "HashLock")[i % 3], total=15, seed=300 + i)))
    for i in range(12):
        yield "M4-no-double-release", duplicate_release(clean_htlc_run(400 + i))


def clean_corpus():
    for i in range(50):
        strategy = ("Notary", "RelayPeg", "HashLock")[i % 3]
        program = "RWE" if strategy != "HashLock" and i % 4 == 0 else "CTP"
        yield execute(make_plan(strategy=strategy, program=program, total=20 + i, rate=1 + i % 3,
                                horizon=100 + 2 * i, seed=500 + i))


@criterion(8, "Verifier completeness")
def test_verifier_completeness(detail):
    missed, injected = [], Counter()
    for rule_id, log in violation_corpus():
        injected[rule_id] += 1
        verdicts = verify_run(log)
        if by_rule(verdicts)[rule_id].verdict != FAIL or verdicts.mandatory_pass:
            missed.append(rule_id)
    false_pos = [i for i, log in enumerate(clean_corpus()) if not verify_run(log).mandatory_pass]
    n = sum(injected.values())
    detail(f"{n - len(missed)}/{n} violations detected "
           f"({', '.join(f'{k}={v}' for k, v in sorted(injected.items()))}); "
           f"{len(false_pos)}/50 false positives")
    assert n == 50 and len(injected) == 4
    assert not missed and not false_pos


# 9 ---------------------------------------------------------------------------

@criterion(9, "Percentile oracle")
def test_percentile_oracle(detail):
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(200):
        n = int(rng.integers(1, 1001))
        samples = [int(x) for x in rng.integers(-10_000, 10_000, n)]
        ordered = sorted(samples)
        for q in (1, 50, 95, 99, 100, int(rng.integers(1, 101))):
            assert nearest_rank(samples, q) == ordered[-(-q * n // 100) - 1]
            checked += 1
    detail(f"200 vectors, {checked} percentile checks")


# 10 --------------------------------------------------------------------------

PUBLISHED_MATRIX = {
    "Virtual Machine": ("No", "Yes", "Yes"),
    "Consensus": ("LFT", "PoW + DPoS + PoI", "PoS"),
    "DApps": ("Yes", "Yes", "Yes"),
    "Bridging Protocol": ("No", "Yes", "No"),
    "Transfer of Value": ("Yes", "Yes", "Yes"),
    "Transfer of Logic": ("No", "Yes", "No"),
    "Interchain DApps": ("No", "Yes", "No"),
}


@criterion(10, "Capability matrix")
def test_capability_matrix(detail):
    buf = io.StringIO()
    with redirect_stdout(buf):
        assert cli_main(["compare", "--published-only"]) == 0
    lines = [l for l in buf.getvalue().splitlines() if l.startswith("| ")]
    header = [c.strip() for c in lines[0].strip("|").split("|")]
    assert header[2:] == ["ICON", "AION", "Wanchain"]
    parsed = {}
    for line in lines[1:]:
        cells = [c.strip() for c in line.strip("|").split("|")]
        parsed[cells[1]] = tuple(cells[2:])
    matches = sum(parsed.get(k) == v for k, v in PUBLISHED_MATRIX.items())
    detail(f"{matches}/7 attribute rows match across 3 platforms")
    assert parsed == PUBLISHED_MATRIX


# 11 --------------------------------------------------------------------------

def histogram_from_csv(rows):
    lat = [int(r["settle_latency"]) for r in rows if r["settle_latency"] and r["origin"] == "workload"]
    if not lat:
        return []
    lo, hi = min(lat), max(lat)
    width = max(1, math.ceil((hi - lo + 1) / 20))
    counts = Counter((v - lo) // width for v in lat)
    return [(f"{lo + b * width}-{lo + (b + 1) * width - 1}", counts.get(b, 0))
            for b in range((hi - lo) // width + 1)]


@criterion(11, "Report round-trip")
def test_report_round_trip(detail):
    checked = 0
    for name, seed in DETERMINISM_PAIRS:
        res = run_config(pair_config(name, seed))
        text = serialize(res.report)
        assert serialize(parse(text)) == text
        charts = render_charts(parse(text))
        windows = list(csv.DictReader(io.StringIO(res.series.windows_csv())))
        transfers = list(csv.DictReader(io.StringIO(res.series.transfers_csv())))
        assert parse_chart(charts["goodput.svg"]) == [(w["window_start"], int(w["settled"])) for w in windows]
        assert parse_chart(charts["latency_histogram.svg"]) == histogram_from_csv(transfers)
        states = Counter(r["terminal_state"] or "InFlight" for r in transfers if r["origin"] == "workload")
        expected = sorted(states.items())
        assert parse_chart(charts["state_bar.svg"]) == expected
        assert parse_chart(charts["state_pie.svg"]) == expected
        assert [tuple(x) for x in chart_data(res.report)["goodput"]] == parse_chart(charts["goodput.svg"])
        checked += 1
    detail(f"{checked} reports byte-identical after serialize/parse/serialize; charts equal CSV series")


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-q"]))
