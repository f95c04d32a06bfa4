"""Client workload executor: builds a run, releases the request stream into
the IFP interface layer and records everything in the event log."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Any

from .adversary import AttackSpec, inject
from .engine import Engine, EventLog
from .errors import ConfigMismatch
from .ifp.base import CrossChainTransfer, IfpDescriptor, Interop, Strategy, TransferState
from .ifp.htlc import counterparty_account
from .ledger import ChainConfig, Ledger
from .workload import Release, Route, WorkloadSpec, generate

TIMED_OUT = "TimedOutAtHorizon"


@dataclass(frozen=True)
class BridgeSpec:
    bridge_id: str
    strategy: str
    source: str
    dest: str
    params: dict[str, Any] = field(default_factory=dict)
    name: str = ""

    def descriptor(self) -> IfpDescriptor:
        return IfpDescriptor(self.name or self.bridge_id, self.strategy, dict(self.params))


@dataclass(frozen=True)
class RuntimeSpec:
    chains: tuple[ChainConfig, ...]
    bridges: tuple[BridgeSpec, ...]
    seed: int = 0


@dataclass(frozen=True)
class RunPlan:
    workload: WorkloadSpec
    runtime: RuntimeSpec
    horizon: int
    warmup: int | None = None
    attack: AttackSpec | None = None
    workload_bridges: tuple[str, ...] | None = None
    run_id: str = ""

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.warmup is None:
            object.__setattr__(self, "warmup", self.horizon // 10)
        if not 0 <= self.warmup < self.horizon:
            raise ValueError("need 0 <= warmup < horizon")
        if not self.run_id:
            blob = json.dumps(_plan_dict(self), sort_keys=True, default=str)
            object.__setattr__(self, "run_id", hashlib.sha256(blob.encode()).hexdigest()[:16])


def _plan_dict(plan: RunPlan) -> dict:
    return {"workload": asdict(plan.workload),
            "chains": [asdict(c) for c in plan.runtime.chains],
            "bridges": [asdict(b) for b in plan.runtime.bridges],
            "seed": plan.runtime.seed, "horizon": plan.horizon, "warmup": plan.warmup,
            "attack": asdict(plan.attack) if plan.attack else None,
            "workload_bridges": plan.workload_bridges}


class Simulation:
    """One fully wired run: engine, chains, bridges, workload and attack."""

    def __init__(self, plan: RunPlan):
        self.plan = plan
        self.engine = Engine(plan.runtime.seed)
        self.log = EventLog()
        self.log.append(0, "run_start", "executor", run_id=plan.run_id, seed=plan.runtime.seed,
                        horizon=plan.horizon, warmup=plan.warmup, time_model="logical-ticks",
                        program=plan.workload.program)
        self.ledger = Ledger(self.engine, self.log)
        for cfg in self._funded_chains():
            self.ledger.add_chain(cfg)
        self.interop = Interop(self.ledger)
        for b in plan.runtime.bridges:
            self.interop.connect(b.descriptor(), b.source, b.dest, bridge_id=b.bridge_id)
        self.injector = inject(plan.attack, self) if plan.attack else None

        topology = self._topology()
        rng = self.engine.rng(f"workload:{plan.workload.seed_offset}")
        self.stream: list[Release] = generate(plan.workload, topology, rng)
        self._check_kinds()
        self._next = 0
        self._legit: dict[str, CrossChainTransfer] = {}
        self._open = 0
        self.interop.subscribe(self._on_state)

    def _funded_chains(self) -> list[ChainConfig]:
        extra: dict[str, dict[str, int]] = {}
        for b in self.plan.runtime.bridges:
            if Strategy(b.strategy) is Strategy.HASHLOCK:
                liquidity = b.descriptor().params.liquidity
                extra.setdefault(b.dest, {})[counterparty_account(b.bridge_id)] = liquidity
        out = []
        for cfg in self.plan.runtime.chains:
            if cfg.chain_id in extra:
                balances = dict(cfg.initial_balances)
                for acct, amt in extra[cfg.chain_id].items():
                    balances.setdefault(acct, amt)
                cfg = replace(cfg, initial_balances=balances)
            out.append(cfg)
        return out

    def _topology(self) -> list[Route]:
        names = self.plan.workload_bridges or tuple(self.interop.bridges)
        routes = []
        for name in names:
            bridge = self.interop.bridges.get(name)
            if bridge is None:
                raise ConfigMismatch(f"workload references unknown bridge {name!r}")
            routes.append(Route(name, bridge.source.id, bridge.dest.id))
        return routes

    def _check_kinds(self) -> None:
        for rel in self.stream:
            bridge = self.interop.bridges[rel.bridge]
            if rel.request.kind not in bridge.supported_kinds:
                raise ConfigMismatch(f"bridge {rel.bridge!r} ({bridge.strategy.value}) cannot carry "
                                     f"{rel.request.kind.value} requests")

    # release ---------------------------------------------------------------

    def _submit(self, rel: Release) -> None:
        tid = self.interop.submit_transfer(rel.bridge, rel.request)
        self._legit[tid] = self.interop.transfers[tid]
        self._open += 1

    def _release_open(self, rel: Release) -> None:
        self._submit(rel)
        self._next = max(self._next, rel.index + 1)

    def _release_closed(self, _payload: Any = None) -> None:
        cap = self.plan.workload.concurrency
        while (self._open < cap and self._next < len(self.stream)
               and self.engine.now < self.plan.horizon):
            rel = self.stream[self._next]
            self._next += 1
            self._submit(rel)

    def _on_state(self, t: CrossChainTransfer, state: TransferState) -> None:
        if t.transfer_id not in self._legit or not t.terminal:
            return
        self._open -= 1
        if self.plan.workload.arrival == "closed":
            self._release_closed()
        if self._open == 0 and self._next >= len(self.stream):
            self.engine.stop()

    # run -------------------------------------------------------------------

    def run(self) -> EventLog:
        plan = self.plan
        if plan.workload.arrival == "open":
            for rel in self.stream:
                if rel.release_at < plan.horizon:
                    self.engine.schedule(rel.release_at, "workload", self._release_open, rel)
        else:
            self.engine.schedule(0, "workload", self._release_closed)
        end = self.engine.run_until(plan.horizon - 1)
        self._finish(end)
        return self.log

    def _finish(self, end: int) -> None:
        log = self.log
        for tid, t in self.interop.transfers.items():
            if not t.terminal:
                log.append(end, "timed_out", "executor", transfer=tid, state=t.state.value,
                           annotation=TIMED_OUT)
        missing = [rel.index for rel in self.stream[self._next:]]
        log.append(end, "not_submitted", "executor", count=len(missing), indices=missing)
        for cid, chain in self.ledger.chains.items():
            snap = chain.state.snapshot()
            log.append(end, "final_state", f"chain:{cid}", chain=cid, height=chain.height,
                       balances=snap["balances"], locks=snap["locks"], released=snap["released"],
                       wrapped=snap["wrapped"], wrapped_supply=snap["wrapped_supply"],
                       burned=snap["burned"], minted=snap["minted"], kv_keys=len(snap["kv"]),
                       digest=chain.state_digest())
        log.append(end, "run_end", "executor", end_tick=end, horizon=self.plan.horizon,
                   stopped_early=end < self.plan.horizon - 1, fired=self.engine.fired)


def execute(plan: RunPlan) -> EventLog:
    return Simulation(plan).run()
