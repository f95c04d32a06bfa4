"""Hash-time-locked two-party swap bridge.

A value transfer from ``sender@source`` to ``recipient@dest`` is executed as
a swap against the bridge's liquidity counterparty:

1. the initiator locks ``amount`` on the source under hashlock ``H`` with
   deadline ``submit + timeout_long``;
2. once that lock is final the counterparty locks ``amount`` on the
   destination under ``H`` with deadline ``submit + timeout_short``;
3. once that lock is final the initiator redeems it, revealing the preimage;
4. the counterparty redeems the source lock with the revealed preimage.

Expired locks are refunded to their owners.  Each party's behaviour can be
replaced by a deviating :class:`SwapSchedule` for adversarial runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ledger import SimChain, Tx, TxKind, hash_preimage
from .base import (Bridge, CrossChainTransfer, Strategy, TransferKind, TransferRequest,
                   TransferState, register_strategy)


@dataclass(frozen=True)
class SwapSchedule:
    """Party behaviour for one swap.

    A conforming party follows the protocol.  A deviating party acts only at
    the given offsets (ticks after submission); ``None`` means never.
    """

    initiator_conforms: bool = True
    reveal_at: int | None = None
    initiator_refunds: bool = True
    counterparty_conforms: bool = True
    lock_at: int | None = None
    redeem_at: int | None = None
    counterparty_refunds: bool = True


CONFORMING = SwapSchedule()


@dataclass
class Swap:
    preimage: str
    hashlock: str
    src_deadline: int
    dst_deadline: int
    src_lock: str
    dst_lock: str
    schedule: SwapSchedule
    revealed: str | None = None
    src_outcome: str | None = None
    dst_outcome: str | None = None
    dst_placed: bool = False
    reveal_sent: bool = False
    cp_lock_sent: bool = False
    cp_redeem_sent: bool = False
    src_refund_sent: bool = False
    dst_refund_sent: bool = False


def counterparty_account(bridge_id: str) -> str:
    return f"lp:{bridge_id}"


def _next_block_tick(chain: SimChain) -> int:
    return chain.tip.produced_at + chain.config.block_interval


class HashLockBridge(Bridge):
    strategy = Strategy.HASHLOCK
    supported_kinds = frozenset({TransferKind.VALUE, TransferKind.NOOP})

    def __init__(self, interop, bridge_id, descriptor, source, dest):
        super().__init__(interop, bridge_id, descriptor, source, dest)
        self.counterparty = counterparty_account(bridge_id)
        self.swaps: dict[str, Swap] = {}
        self.default_schedule = CONFORMING
        self._rng = self.engine.rng(f"ifp:{bridge_id}")

    def submit_transfer(self, request: TransferRequest, schedule: SwapSchedule | None = None) -> str:
        self.validate(request)
        t = self._new_transfer(request, self.source.id, self.dest.id)
        if t.kind is TransferKind.NOOP:
            self._submit_leg(t, "origin", self.source, self._origin_tx(t))
            return t.transfer_id
        sched = schedule or self.default_schedule
        now = self.engine.now
        secret = self._rng.bytes(32).hex()
        swap = Swap(secret, hash_preimage(secret), now + self.params.timeout_long,
                    now + self.params.timeout_short, f"{t.transfer_id}/src",
                    f"{t.transfer_id}/dst", sched)
        self.swaps[t.transfer_id] = swap
        self._submit_leg(t, "src_lock", self.source, Tx(
            TxKind.LOCK, t.sender, self.counterparty, t.amount,
            {"lock_id": swap.src_lock, "hashlock": swap.hashlock, "timeout": swap.src_deadline,
             "beneficiary": self.counterparty, "bridge": self.id}))
        comp = self.component
        if sched.initiator_refunds:
            self.engine.schedule(swap.src_deadline, comp, self._initiator_refund, t)
        if sched.counterparty_refunds:
            self.engine.schedule(swap.dst_deadline, comp, self._counterparty_refund, t)
        if not sched.initiator_conforms and sched.reveal_at is not None:
            self.engine.schedule(now + sched.reveal_at, comp, self._reveal, t)
        if not sched.counterparty_conforms:
            if sched.lock_at is not None:
                self.engine.schedule(now + sched.lock_at, comp, self._cp_lock, t)
            if sched.redeem_at is not None:
                self.engine.schedule(now + sched.redeem_at, comp, self._cp_redeem, t)
        return t.transfer_id

    # Noop transfers ride the generic pipeline with no approval step
    def _on_origin_final(self, t: CrossChainTransfer) -> None:
        self._approve(t)

    # leg events --------------------------------------------------------------

    def _on_included(self, t: CrossChainTransfer, role: str, tx: Tx) -> None:
        if role in ("origin", "target"):
            super()._on_included(t, role, tx)
            return
        swap = self.swaps[t.transfer_id]
        if role == "src_lock":
            if not tx.ok:
                self._terminate(t, TransferState.FAILED, reason=f"source lock failed: {tx.reason}")
            else:
                self._fact(t, "origin_ok")
            return
        if not tx.ok:
            return
        if role == "dst_lock":
            swap.dst_placed = True
            self._fact(t, "approved")
            if self.engine.now >= swap.dst_deadline and swap.schedule.counterparty_refunds:
                self._counterparty_refund(t)
        elif role == "dst_redeem":
            swap.dst_outcome = "Redeem"
            swap.revealed = tx.payload["preimage"]
            self._fact(t, "target_ok")
            if swap.schedule.counterparty_conforms:
                self._cp_redeem(t)
        elif role == "src_redeem":
            swap.src_outcome = "Redeem"
        elif role == "src_refund":
            swap.src_outcome = "Refund"
        elif role == "dst_refund":
            swap.dst_outcome = "Refund"
        self._settle_if_resolved(t)

    def _on_final(self, t: CrossChainTransfer, role: str, tx: Tx) -> None:
        if role in ("origin", "target"):
            super()._on_final(t, role, tx)
            return
        if t.terminal:
            return
        swap = self.swaps[t.transfer_id]
        if role == "src_lock":
            self._fact(t, "origin_final")
            if swap.schedule.counterparty_conforms:
                self._cp_lock(t)
        elif role == "dst_lock":
            if swap.schedule.initiator_conforms:
                self._reveal(t)
        elif role == "src_redeem" and swap.dst_outcome == "Redeem":
            self._fact(t, "target_final")

    def _settle_if_resolved(self, t: CrossChainTransfer) -> None:
        if t.terminal:
            return
        swap = self.swaps[t.transfer_id]
        outcomes = {swap.src_outcome, swap.dst_outcome}
        if outcomes == {"Redeem", "Refund"}:
            self._terminate(t, TransferState.FAILED, reason="one leg redeemed, one refunded")
        elif swap.src_outcome == "Refund" and (swap.dst_outcome == "Refund" or not swap.dst_placed):
            self._terminate(t, TransferState.REFUNDED)

    # party actions -----------------------------------------------------------

    def _cp_lock(self, t: CrossChainTransfer) -> None:
        swap = self.swaps[t.transfer_id]
        if swap.cp_lock_sent:
            return
        if swap.schedule.counterparty_conforms:
            lock = self.source.state.locks.get(swap.src_lock)
            if (lock is None or lock.amount != t.amount or lock.hashlock != swap.hashlock
                    or lock.beneficiary != self.counterparty or lock.timeout != swap.src_deadline):
                return
            if _next_block_tick(self.dest) >= swap.dst_deadline:
                return  # too late to lock safely
        swap.cp_lock_sent = True
        self._submit_leg(t, "dst_lock", self.dest, Tx(
            TxKind.LOCK, self.counterparty, t.recipient, t.amount,
            {"lock_id": swap.dst_lock, "hashlock": swap.hashlock, "timeout": swap.dst_deadline,
             "beneficiary": t.recipient, "bridge": self.id}))

    def _reveal(self, t: CrossChainTransfer) -> None:
        swap = self.swaps[t.transfer_id]
        if swap.reveal_sent:
            return
        if swap.schedule.initiator_conforms:
            lock = self.dest.state.locks.get(swap.dst_lock)
            if (lock is None or lock.amount != t.amount or lock.hashlock != swap.hashlock
                    or lock.beneficiary != t.recipient or lock.timeout != swap.dst_deadline):
                return
            if _next_block_tick(self.dest) >= swap.dst_deadline:
                return  # the redeem could land after the deadline
        swap.reveal_sent = True
        self._submit_leg(t, "dst_redeem", self.dest, Tx(
            TxKind.REDEEM, t.recipient, t.recipient, 0,
            {"lock_id": swap.dst_lock, "preimage": swap.preimage}))

    def _cp_redeem(self, t: CrossChainTransfer) -> None:
        swap = self.swaps[t.transfer_id]
        if swap.cp_redeem_sent or swap.revealed is None:
            return
        swap.cp_redeem_sent = True
        self._submit_leg(t, "src_redeem", self.source, Tx(
            TxKind.REDEEM, self.counterparty, self.counterparty, 0,
            {"lock_id": swap.src_lock, "preimage": swap.revealed}))

    def _initiator_refund(self, t: CrossChainTransfer) -> None:
        swap = self.swaps[t.transfer_id]
        if swap.src_refund_sent or swap.src_lock not in self.source.state.locks:
            return
        swap.src_refund_sent = True
        self._submit_leg(t, "src_refund", self.source, Tx(
            TxKind.REFUND, t.sender, t.sender, 0, {"lock_id": swap.src_lock}))

    def _counterparty_refund(self, t: CrossChainTransfer) -> None:
        swap = self.swaps[t.transfer_id]
        if swap.dst_refund_sent or swap.dst_lock not in self.dest.state.locks:
            return
        swap.dst_refund_sent = True
        self._submit_leg(t, "dst_refund", self.dest, Tx(
            TxKind.REFUND, self.counterparty, self.counterparty, 0, {"lock_id": swap.dst_lock}))


register_strategy(Strategy.HASHLOCK, HashLockBridge)
