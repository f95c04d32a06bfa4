"""Security-tier attack injectors: DoS flood, Sybil notaries, Byzantine relay."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Any

from .engine import EventLog
from .errors import InvalidSpec, KindMismatch, UnknownTarget
from .ifp.base import TransferKind, TransferRequest
from .ifp.notary import NotaryBridge
from .ifp.relay import RelayPegBridge
from .ledger import Tx, TxKind

if TYPE_CHECKING:
    from .executor import Simulation

ATTACK_KINDS = ("DosFlood", "SybilNotary", "ByzantineRelay")
SPAMMER = "spammer"
MALLORY = "mallory"


@dataclass(frozen=True)
class AttackSpec:
    """``intensity`` is spam per tick, adversarial notary count, or invalid
    headers per relay batch depending on ``kind``; 0 disables the attack."""

    kind: str
    intensity: float = 0
    start_at: int = 0
    stop_at: int = 1_000_000
    target: str = ""
    forge_amount: int = 1000

    def validate(self) -> None:
        if self.kind not in ATTACK_KINDS:
            raise InvalidSpec(f"attack kind must be one of {ATTACK_KINDS}, got {self.kind!r}")
        if not self.start_at < self.stop_at:
            raise InvalidSpec("attack window needs start_at < stop_at")
        if self.intensity < 0:
            raise InvalidSpec("attack intensity must be >= 0")
        if self.kind != "DosFlood" and self.intensity != int(self.intensity):
            raise InvalidSpec(f"{self.kind} intensity must be an integer")


class Injector:
    def __init__(self, attack: AttackSpec, sim: "Simulation"):
        self.attack = attack
        self.sim = sim
        self.engine = sim.engine
        self.component = f"adversary:{attack.kind}"

    def arm(self) -> None:
        raise NotImplementedError


class DosFlood(Injector):
    """Floods the target bridge (or chain) with well-formed Noop traffic."""

    def arm(self) -> None:
        a = self.attack
        self._rate = Fraction(a.intensity).limit_denominator(10**6)
        target = a.target
        if target in self.sim.interop.bridges:
            self._bridge = self.sim.interop.bridges[target]
            self._chain = None
        elif target in self.sim.ledger.chains:
            self._bridge = None
            self._chain = self.sim.ledger.chains[target]
        else:
            raise UnknownTarget(f"DosFlood target {target!r} is neither a bridge nor a chain")
        if self._rate > 0:
            self.engine.schedule(a.start_at, self.component, self._tick)

    def _tick(self, _payload: Any) -> None:
        a = self.attack
        now = self.engine.now
        if now >= a.stop_at or now >= self.sim.plan.horizon:
            return
        k = now - a.start_at
        count = math.floor((k + 1) * self._rate) - math.floor(k * self._rate)
        for _ in range(count):
            if self._bridge is not None:
                self._bridge.submit_transfer(
                    TransferRequest(TransferKind.NOOP, SPAMMER, SPAMMER, origin="spam"))
            else:
                self._chain.submit(Tx(TxKind.NOOP, SPAMMER, SPAMMER))
        self.engine.after(1, self.component, self._tick)


class SybilNotary(Injector):
    """Turns ``intensity`` notaries adversarial: they withhold signatures
    from honest transfers and co-sign a forged Mint."""

    def arm(self) -> None:
        a = self.attack
        bridge = self.sim.interop.bridges.get(a.target)
        if bridge is None:
            raise UnknownTarget(f"SybilNotary target {a.target!r} is not a bridge")
        if not isinstance(bridge, NotaryBridge):
            raise KindMismatch(f"SybilNotary needs a Notary bridge, {a.target!r} is {bridge.strategy.value}")
        if a.intensity > bridge.params.n:
            raise InvalidSpec(f"intensity {a.intensity} exceeds committee size {bridge.params.n}")
        self.bridge = bridge
        if a.intensity > 0:
            self.engine.schedule(a.start_at, self.component, self._start)
            self.engine.schedule(a.stop_at, self.component, self._stop)

    def _start(self, _payload: Any) -> None:
        self.bridge.set_adversarial(int(self.attack.intensity))
        self.bridge.forge(self.attack.forge_amount, MALLORY)

    def _stop(self, _payload: Any) -> None:
        self.bridge.set_adversarial(0)


class ByzantineRelay(Injector):
    """Injects ``intensity`` headers with a wrong parent digest per relay batch."""

    def arm(self) -> None:
        a = self.attack
        bridge = self.sim.interop.bridges.get(a.target)
        if bridge is None:
            raise UnknownTarget(f"ByzantineRelay target {a.target!r} is not a bridge")
        if not isinstance(bridge, RelayPegBridge):
            raise KindMismatch(f"ByzantineRelay needs a RelayPeg bridge, {a.target!r} is {bridge.strategy.value}")
        self.bridge = bridge
        if a.intensity > 0:
            self.engine.schedule(a.start_at, self.component, self._start)
            self.engine.schedule(a.stop_at, self.component, self._stop)

    def _start(self, _payload: Any) -> None:
        self.bridge.invalid_per_batch = int(self.attack.intensity)

    def _stop(self, _payload: Any) -> None:
        self.bridge.invalid_per_batch = 0


INJECTORS = {"DosFlood": DosFlood, "SybilNotary": SybilNotary, "ByzantineRelay": ByzantineRelay}


def inject(attack: AttackSpec, sim: "Simulation") -> Injector:
    attack.validate()
    injector = INJECTORS[attack.kind](attack, sim)
    injector.arm()
    return injector


def attack_outcomes(log: EventLog) -> dict[str, int]:
    """Attack-related counts recovered from a run log."""
    spam = {r["transfer"] for r in log.of_type("transfer_submitted") if r["origin"] == "spam"}
    forged = {r["transfer"] for r in log.of_type("forged_mint")}
    out = {"spam_submitted": len(spam), "spam_settled": 0, "forged_mints_attempted": len(forged),
           "forged_mints_accepted": 0, "forged_value_accepted": 0, "headers_rejected": 0}
    for r in log:
        typ = r["type"]
        if typ == "transfer_state" and r["state"] == "Settled" and r["transfer"] in spam:
            out["spam_settled"] += 1
        elif typ == "tx" and r["kind"] == "Mint" and r["transfer"] in forged and r["ok"]:
            out["forged_mints_accepted"] += 1
            out["forged_value_accepted"] += r["amount"]
        elif typ == "header_rejected":
            out["headers_rejected"] += 1
    return out
