"""IFP interface layer: transfer lifecycle, bridge base class and registry."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Callable

from ..engine import Engine, EventLog
from ..errors import DuplicateBridge, MalformedRequest, UnknownTransfer
from ..ledger import Block, Ledger, SimChain, Tx, TxKind


class Strategy(str, Enum):
    NOTARY = "Notary"
    HASHLOCK = "HashLock"
    RELAYPEG = "RelayPeg"


class TransferKind(str, Enum):
    VALUE = "ValueTransfer"
    KV_WRITE = "KvWrite"
    KV_READ = "KvRead"
    NOOP = "Noop"


class TransferState(str, Enum):
    SUBMITTED = "Submitted"
    SOURCE_INCLUDED = "SourceIncluded"
    SOURCE_FINAL = "SourceFinal"
    BRIDGE_APPROVED = "BridgeApproved"
    DEST_INCLUDED = "DestIncluded"
    SETTLED = "Settled"
    REFUNDED = "Refunded"
    FAILED = "Failed"


MAIN_PATH = (
    TransferState.SUBMITTED,
    TransferState.SOURCE_INCLUDED,
    TransferState.SOURCE_FINAL,
    TransferState.BRIDGE_APPROVED,
    TransferState.DEST_INCLUDED,
    TransferState.SETTLED,
)
TERMINAL = frozenset({TransferState.SETTLED, TransferState.REFUNDED, TransferState.FAILED})


def is_legal_sequence(states: list[str]) -> bool:
    """True iff ``states`` walks a prefix of the main path, optionally ending
    in Refunded or Failed, and nothing follows a terminal state."""
    path = [s.value for s in MAIN_PATH]
    if not states:
        return True
    body = states
    if states[-1] in (TransferState.REFUNDED.value, TransferState.FAILED.value):
        body = states[:-1]
    if not body:
        return False  # every transfer starts at Submitted
    return body == path[: len(body)]


@dataclass
class IfpAttributes:
    virtual_machine: bool
    consensus: str
    dapps: bool
    bridging_protocol: bool
    transfer_of_value: bool
    transfer_of_logic: bool
    interchain_dapps: bool


@dataclass
class NotaryParams:
    n: int = 4
    k: int = 3
    observe_delay: int = 1

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"notary quorum needs 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.observe_delay < 0:
            raise ValueError("observe_delay must be >= 0")


@dataclass
class HtlcParams:
    timeout_long: int = 60
    timeout_short: int = 30
    liquidity: int = 100_000  # counterparty float credited on the destination chain

    def __post_init__(self):
        if not 0 < self.timeout_short < self.timeout_long:
            raise ValueError("need 0 < timeout_short < timeout_long")
        if self.liquidity < 0:
            raise ValueError("liquidity must be >= 0")


@dataclass
class RelayPegParams:
    confirmation_depth: int = 2
    header_batch: int = 1

    def __post_init__(self):
        if self.confirmation_depth < 0:
            raise ValueError("confirmation_depth must be >= 0")
        if self.header_batch < 1:
            raise ValueError("header_batch must be >= 1")


PARAMS_BY_STRATEGY = {
    Strategy.NOTARY: NotaryParams,
    Strategy.HASHLOCK: HtlcParams,
    Strategy.RELAYPEG: RelayPegParams,
}


@dataclass
class IfpDescriptor:
    name: str
    strategy: Strategy
    params: Any = None
    attributes: IfpAttributes | None = None

    def __post_init__(self):
        self.strategy = Strategy(self.strategy)
        cls = PARAMS_BY_STRATEGY[self.strategy]
        if self.params is None:
            self.params = cls()
        elif isinstance(self.params, dict):
            self.params = cls(**self.params)
        if self.attributes is None:
            from .matrix import REFERENCE_ATTRIBUTES
            self.attributes = REFERENCE_ATTRIBUTES[self.strategy]


@dataclass
class TransferRequest:
    kind: TransferKind
    sender: str
    recipient: str
    amount: int = 0
    key: str | None = None
    value: str | None = None
    origin: str = "workload"  # "workload" or "spam"


@dataclass
class CrossChainTransfer:
    transfer_id: str
    bridge: str
    source_chain: str
    dest_chain: str
    sender: str
    recipient: str
    amount: int
    kind: TransferKind
    origin: str = "workload"
    key: str | None = None
    value: str | None = None
    state: TransferState = TransferState.SUBMITTED
    timestamps: dict[str, int] = field(default_factory=dict)
    history: list[str] = field(default_factory=list)
    facts: set[str] = field(default_factory=set)
    result: Any = None
    lock_ref: str | None = None
    legs: dict[str, str] = field(default_factory=dict)  # role -> tx_id

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL


# facts that unlock each successive main-path state
PROGRESS_FACTS = ("origin_ok", "origin_final", "approved", "target_ok", "target_final")

StateListener = Callable[[CrossChainTransfer, TransferState], None]


class Bridge:
    """Base for IFP implementations.

    Transfers move through a two-leg pipeline: an origin tx on the source
    chain, a strategy-specific approval, then a target tx on the destination
    chain.  Subclasses implement :meth:`_on_origin_final` (and call
    :meth:`_approve` when satisfied) plus any extra validation they install
    on the chains.
    """

    strategy: Strategy
    supported_kinds = frozenset(TransferKind)

    def __init__(self, interop: "Interop", bridge_id: str, descriptor: IfpDescriptor,
                 source: SimChain, dest: SimChain):
        self.interop = interop
        self.id = bridge_id
        self.descriptor = descriptor
        self.params = descriptor.params
        self.source = source
        self.dest = dest
        self.engine: Engine = interop.engine
        self.log: EventLog = interop.log
        self.transfers: dict[str, CrossChainTransfer] = {}
        self._legs: dict[str, tuple[CrossChainTransfer, str]] = {}
        self._counter = 0
        source.subscribe(self.on_block_event)
        if dest is not source:
            dest.subscribe(self.on_block_event)

    @property
    def component(self) -> str:
        return f"ifp:{self.id}"

    def chain(self, chain_id: str) -> SimChain:
        return self.source if chain_id == self.source.id else self.dest

    # entry points ------------------------------------------------------------

    def validate(self, request: TransferRequest) -> None:
        try:
            kind = TransferKind(request.kind)
        except ValueError:
            raise MalformedRequest(f"unknown transfer kind {request.kind!r}") from None
        if kind not in self.supported_kinds:
            raise MalformedRequest(f"{self.strategy.value} bridge does not carry {kind.value}")
        if not request.sender or not request.recipient:
            raise MalformedRequest("sender and recipient are required")
        amount = request.amount
        if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
            raise MalformedRequest(f"amount must be a non-negative integer, got {amount!r}")
        if kind is TransferKind.VALUE and amount == 0:
            raise MalformedRequest("ValueTransfer needs amount >= 1; amount 0 is reserved for Noop/KvRead")
        if kind is not TransferKind.VALUE and amount != 0:
            raise MalformedRequest(f"{kind.value} must carry amount 0")
        if kind in (TransferKind.KV_READ, TransferKind.KV_WRITE) and not request.key:
            raise MalformedRequest(f"{kind.value} needs a key")

    def submit_transfer(self, request: TransferRequest) -> str:
        self.validate(request)
        t = self._new_transfer(request, self.source.id, self.dest.id)
        self._submit_leg(t, "origin", self.source, self._origin_tx(t))
        return t.transfer_id

    def poll_status(self, transfer_id: str) -> tuple[TransferState, dict[str, int]]:
        try:
            t = self.transfers[transfer_id]
        except KeyError:
            raise UnknownTransfer(transfer_id) from None
        return t.state, dict(t.timestamps)

    def on_block_event(self, chain: SimChain, block: Block, newly_final: list[Block]) -> None:
        for tx in block.txs:
            leg = self._legs.get(tx.tx_id)
            if leg:
                self._on_included(leg[0], leg[1], tx)
        for fb in newly_final:
            for tx in fb.txs:
                leg = self._legs.get(tx.tx_id)
                if leg and tx.ok:
                    self._on_final(leg[0], leg[1], tx)
        self._after_block(chain, block)

    # pipeline ----------------------------------------------------------------

    def _new_transfer(self, request: TransferRequest, source_id: str, dest_id: str,
                      tag: str = "") -> CrossChainTransfer:
        tid = f"{self.id}#{tag}{self._counter}"
        self._counter += 1
        t = CrossChainTransfer(tid, self.id, source_id, dest_id, request.sender, request.recipient,
                               request.amount, TransferKind(request.kind), request.origin,
                               request.key, request.value)
        self.transfers[tid] = t
        self.interop.transfers[tid] = t
        now = self.engine.now
        self.log.append(now, "transfer_submitted", self.component, transfer=tid, bridge=self.id,
                        kind=t.kind.value, origin=t.origin, source=source_id, dest=dest_id,
                        sender=t.sender, recipient=t.recipient, amount=t.amount)
        t.timestamps[TransferState.SUBMITTED.value] = now
        t.history.append(TransferState.SUBMITTED.value)
        self.log.append(now, "transfer_state", self.component, transfer=tid,
                        state=TransferState.SUBMITTED.value)
        self.interop._notify(t, TransferState.SUBMITTED)
        return t

    def _submit_leg(self, t: CrossChainTransfer, role: str, chain: SimChain, tx: Tx) -> Tx:
        tx.transfer_id = tx.transfer_id or t.transfer_id
        chain.submit(tx)
        self._legs[tx.tx_id] = (t, role)
        t.legs[role] = tx.tx_id
        return tx

    def _origin_tx(self, t: CrossChainTransfer) -> Tx:
        if t.kind is TransferKind.VALUE:
            return Tx(TxKind.LOCK, t.sender, t.recipient, t.amount,
                      {"lock_id": t.transfer_id, "bridge": self.id, "beneficiary": t.recipient})
        if t.kind is TransferKind.KV_READ:
            return Tx(TxKind.KV_GET, t.sender, t.recipient, 0, {"key": t.key})
        if t.kind is TransferKind.KV_WRITE:
            return Tx(TxKind.NOOP, t.sender, t.recipient, 0, {"key": t.key})
        return Tx(TxKind.NOOP, t.sender, t.recipient, 0)

    def _target_tx(self, t: CrossChainTransfer, auth: dict[str, Any]) -> Tx:
        if t.kind is TransferKind.VALUE:
            payload = {"asset": t.source_chain, "bridge": self.id}
            payload.update(auth)
            return Tx(TxKind.MINT, self.id, t.recipient, t.amount, payload)
        if t.kind is TransferKind.KV_WRITE:
            return Tx(TxKind.KV_PUT, t.sender, t.recipient, 0, {"key": t.key, "value": t.value})
        if t.kind is TransferKind.KV_READ:
            return Tx(TxKind.KV_GET, t.sender, t.recipient, 0, {"key": t.key, "answer": t.result})
        return Tx(TxKind.NOOP, t.sender, t.recipient, 0)

    def _on_included(self, t: CrossChainTransfer, role: str, tx: Tx) -> None:
        if t.terminal:
            return
        if not tx.ok:
            self._terminate(t, TransferState.FAILED, reason=f"{role} tx failed: {tx.reason}")
            return
        self._fact(t, "origin_ok" if role == "origin" else "target_ok")

    def _on_final(self, t: CrossChainTransfer, role: str, tx: Tx) -> None:
        if t.terminal:
            return
        if role == "origin":
            self._fact(t, "origin_final")
            self._on_origin_final(t)
        else:
            self._fact(t, "target_final")

    def _on_origin_final(self, t: CrossChainTransfer) -> None:
        raise NotImplementedError

    def _after_block(self, chain: SimChain, block: Block) -> None:
        pass

    def _approve(self, t: CrossChainTransfer, auth: dict[str, Any] | None = None) -> None:
        if t.terminal or "approved" in t.facts:
            return
        origin = self.chain(t.source_chain)
        if t.kind is TransferKind.KV_READ:
            # reads are pinned to the origin chain's finalized height at approval
            t.result = origin.kv_at(t.key, origin.finalized_height())
        self._fact(t, "approved")
        target = self.chain(t.dest_chain)
        self._submit_leg(t, "target", target, self._target_tx(t, auth or {}))

    def _fact(self, t: CrossChainTransfer, name: str) -> None:
        t.facts.add(name)
        self._progress(t)

    def _progress(self, t: CrossChainTransfer) -> None:
        if t.terminal:
            return
        reached = 0
        for f in PROGRESS_FACTS:
            if f not in t.facts:
                break
            reached += 1
        current = MAIN_PATH.index(t.state)
        for state in MAIN_PATH[current + 1: reached + 1]:
            self._enter(t, state)

    def _enter(self, t: CrossChainTransfer, state: TransferState, **extra: Any) -> None:
        now = self.engine.now
        t.state = state
        t.timestamps[state.value] = now
        t.history.append(state.value)
        self.log.append(now, "transfer_state", self.component, transfer=t.transfer_id,
                        state=state.value, **extra)
        self.interop._notify(t, state)

    def _terminate(self, t: CrossChainTransfer, state: TransferState, reason: str = "") -> None:
        if t.terminal:
            return
        if reason:
            self._enter(t, state, reason=reason)
        else:
            self._enter(t, state)


STRATEGIES: dict[Strategy, type[Bridge]] = {}


def register_strategy(strategy: Strategy, cls: type[Bridge]) -> None:
    """Plug a bridge implementation in for ``strategy``."""
    STRATEGIES[Strategy(strategy)] = cls


class Interop:
    """The IFP interface layer: one per run, owns every bridge and transfer."""

    def __init__(self, ledger: Ledger):
        self.ledger = ledger
        self.engine = ledger.engine
        self.log = ledger.log
        self.bridges: dict[str, Bridge] = {}
        self.transfers: dict[str, CrossChainTransfer] = {}
        self._triples: set[tuple[str, str, str]] = set()
        self._listeners: list[StateListener] = []

    def connect(self, descriptor: IfpDescriptor, source: str, dest: str,
                bridge_id: str | None = None) -> Bridge:
        src = self.ledger.chain(source)
        dst = self.ledger.chain(dest)
        triple = (descriptor.name, source, dest)
        if triple in self._triples:
            raise DuplicateBridge(f"{descriptor.name} already connects {source}->{dest}")
        bridge_id = bridge_id or f"{descriptor.name}:{source}->{dest}"
        if bridge_id in self.bridges:
            raise DuplicateBridge(f"bridge id {bridge_id!r} already in use")
        cls = STRATEGIES[descriptor.strategy]
        bridge = cls(self, bridge_id, descriptor, src, dst)
        self._triples.add(triple)
        self.bridges[bridge_id] = bridge
        self.log.append(self.engine.now, "bridge", bridge.component, bridge=bridge_id,
                        name=descriptor.name, strategy=descriptor.strategy.value,
                        source=source, dest=dest, params=asdict(descriptor.params))
        return bridge

    def bridge(self, handle: Bridge | str) -> Bridge:
        if isinstance(handle, Bridge):
            return handle
        try:
            return self.bridges[handle]
        except KeyError:
            raise MalformedRequest(f"unknown bridge {handle!r}") from None

    def submit_transfer(self, handle: Bridge | str, request: TransferRequest) -> str:
        return self.bridge(handle).submit_transfer(request)

    def poll_status(self, transfer_id: str) -> tuple[TransferState, dict[str, int]]:
        try:
            t = self.transfers[transfer_id]
        except KeyError:
            raise UnknownTransfer(transfer_id) from None
        return t.state, dict(t.timestamps)

    def subscribe(self, listener: StateListener) -> None:
        self._listeners.append(listener)

    def _notify(self, t: CrossChainTransfer, state: TransferState) -> None:
        for listener in self._listeners:
            listener(t, state)
