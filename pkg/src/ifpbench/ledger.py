"""Simulated fork-free blockchains.

Each :class:`SimChain` produces a block every ``block_interval`` ticks,
draining its FIFO mempool up to ``block_capacity``.  A transaction becomes
eligible for inclusion in the first block produced strictly after the tick it
was submitted at.  Transactions that fail validation are still included
(they consume capacity) but leave state untouched.

The chain's native asset is named after its ``chain_id``.  Foreign assets
exist only as wrapped tokens minted by a bridge.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping

from .engine import Engine, EventLog
from .errors import HeightOutOfRange, MalformedTx, UnknownChain

GENESIS_PARENT = "0" * 64


class TxKind(str, Enum):
    NOOP = "Noop"
    LOCAL_TRANSFER = "LocalTransfer"
    LOCK = "Lock"
    UNLOCK = "Unlock"
    MINT = "Mint"
    BURN = "Burn"
    REDEEM = "Redeem"
    REFUND = "Refund"
    KV_PUT = "KvPut"
    KV_GET = "KvGet"


# kinds that can never change state
INERT_KINDS = frozenset({TxKind.NOOP, TxKind.KV_GET})
RELEASE_KINDS = frozenset({TxKind.UNLOCK, TxKind.REDEEM, TxKind.REFUND})


@dataclass
class ChainConfig:
    chain_id: str
    block_interval: int = 2
    finality_depth: int = 2
    block_capacity: int = 10
    initial_balances: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.chain_id:
            raise ValueError("chain_id must be non-empty")
        if self.block_interval < 1:
            raise ValueError("block_interval must be >= 1")
        if self.block_capacity < 1:
            raise ValueError("block_capacity must be >= 1")
        if self.finality_depth < 0:
            raise ValueError("finality_depth must be >= 0")
        if any(v < 0 for v in self.initial_balances.values()):
            raise ValueError("initial balances must be non-negative")


@dataclass
class Tx:
    kind: TxKind
    sender: str = ""
    to: str = ""
    amount: int = 0
    payload: dict[str, Any] = field(default_factory=dict)
    transfer_id: str | None = None
    tx_id: str = ""
    submitted_at: int | None = None
    included_at: int | None = None
    finalized_at: int | None = None
    height: int | None = None
    ok: bool | None = None
    reason: str = ""
    result: Any = None

    def leaf(self) -> str:
        """Commitment string used for the block's transaction root."""
        return "|".join((self.tx_id, str(int(bool(self.ok))), self.kind.value, str(self.amount),
                         str(self.transfer_id), self.to, str(self.payload.get("lock_id", ""))))


@dataclass
class Block:
    height: int
    parent_digest: str
    txs: list[Tx]
    produced_at: int
    tx_root: str = ""
    digest: str = ""


@dataclass
class Lock:
    owner: str
    amount: int
    beneficiary: str
    hashlock: str | None = None
    timeout: int | None = None
    bridge: str | None = None
    transfer_id: str | None = None


def tx_root(leaves: list[str]) -> str:
    return hashlib.sha256("\n".join(leaves).encode()).hexdigest()


def block_digest(height: int, parent: str, root: str, produced_at: int) -> str:
    return hashlib.sha256(f"{height}|{parent}|{root}|{produced_at}".encode()).hexdigest()


def hash_preimage(preimage: str) -> str:
    return hashlib.sha256(bytes.fromhex(preimage)).hexdigest()


@dataclass
class ChainState:
    balances: dict[str, int] = field(default_factory=dict)
    locks: dict[str, Lock] = field(default_factory=dict)
    released: dict[str, str] = field(default_factory=dict)  # lock_id -> releasing kind
    kv: dict[str, Any] = field(default_factory=dict)
    wrapped: dict[str, dict[str, int]] = field(default_factory=dict)  # asset -> account -> units
    wrapped_supply: dict[str, int] = field(default_factory=dict)
    burned: dict[str, int] = field(default_factory=dict)
    minted: set[str] = field(default_factory=set)  # transfer ids already minted

    def snapshot(self) -> dict[str, Any]:
        return {
            "balances": {a: v for a, v in sorted(self.balances.items()) if v},
            "locks": {k: asdict(l) for k, l in sorted(self.locks.items())},
            "released": dict(sorted(self.released.items())),
            "kv": dict(sorted(self.kv.items())),
            "wrapped": {a: {k: v for k, v in sorted(m.items()) if v}
                        for a, m in sorted(self.wrapped.items())},
            "wrapped_supply": {a: v for a, v in sorted(self.wrapped_supply.items()) if v},
            "burned": {a: v for a, v in sorted(self.burned.items()) if v},
            "minted": sorted(self.minted),
        }

    def store_size(self) -> int:
        """Entry count across all stores; the memory proxy reported by the monitor."""
        return (len(self.balances) + len(self.locks) + len(self.released) + len(self.kv)
                + sum(len(m) for m in self.wrapped.values()) + len(self.minted))


def digest_state(snapshot: Mapping[str, Any]) -> str:
    blob = json.dumps(snapshot, sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(blob.encode(), digest_size=32).hexdigest()


# (chain, tx) -> None when valid, else a rejection reason
Validator = Callable[["SimChain", Tx], "str | None"]
BlockListener = Callable[["SimChain", Block, list[Block]], None]


class SimChain:
    def __init__(self, config: ChainConfig, engine: Engine, log: EventLog):
        self.config = config
        self.id = config.chain_id
        self.engine = engine
        self.log = log
        self.state = ChainState(balances=dict(config.initial_balances))
        self.pending: deque[Tx] = deque()
        self.txs: dict[str, Tx] = {}
        self.kv_history: dict[str, list[tuple[int, Any]]] = {}
        self.mint_validators: dict[str, Validator] = {}
        self.unlock_validators: dict[str, Validator] = {}
        self._listeners: list[BlockListener] = []
        self._counter = 0
        root = tx_root([])
        genesis = Block(0, GENESIS_PARENT, [], 0, root, block_digest(0, GENESIS_PARENT, root, 0))
        self.blocks: list[Block] = [genesis]
        self._digests: list[str] = [digest_state(self.state.snapshot())]
        self._final = 0
        log.append(engine.now, "genesis", f"chain:{self.id}", chain=self.id,
                   block_interval=config.block_interval, finality_depth=config.finality_depth,
                   block_capacity=config.block_capacity,
                   balances=dict(sorted(config.initial_balances.items())),
                   digest=genesis.digest)
        engine.schedule(engine.now + config.block_interval, f"chain:{self.id}", self._on_timer)

    # queries ---------------------------------------------------------------

    @property
    def tip(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return len(self.blocks) - 1

    def finalized_height(self) -> int:
        return max(0, self.height - self.config.finality_depth)

    def state_digest(self, at_height: int | None = None) -> str:
        if at_height is None:
            at_height = self.height
        if not 0 <= at_height <= self.height:
            raise HeightOutOfRange(f"{self.id}: height {at_height} not in [0, {self.height}]")
        return self._digests[at_height]

    def kv_at(self, key: str, height: int) -> Any:
        """Value of ``key`` as of the end of block ``height``."""
        value = None
        for h, v in self.kv_history.get(key, ()):
            if h > height:
                break
            value = v
        return value

    def balance(self, account: str) -> int:
        return self.state.balances.get(account, 0)

    def wrapped_balance(self, asset: str, account: str) -> int:
        return self.state.wrapped.get(asset, {}).get(account, 0)

    def subscribe(self, listener: BlockListener) -> None:
        self._listeners.append(listener)

    # mutation --------------------------------------------------------------

    def submit(self, tx: Tx) -> bool:
        if not isinstance(tx.kind, TxKind):
            raise MalformedTx(f"unknown tx kind {tx.kind!r}")
        if not isinstance(tx.amount, int) or isinstance(tx.amount, bool) or tx.amount < 0:
            raise MalformedTx(f"amount must be a non-negative integer, got {tx.amount!r}")
        if tx.kind in INERT_KINDS and tx.amount != 0:
            raise MalformedTx(f"{tx.kind.value} must carry amount 0")
        if tx.kind in RELEASE_KINDS and "lock_id" not in tx.payload:
            raise MalformedTx(f"{tx.kind.value} requires a lock_id")
        tx.tx_id = f"{self.id}:{self._counter}"
        self._counter += 1
        tx.submitted_at = self.engine.now
        self.txs[tx.tx_id] = tx
        self.pending.append(tx)
        return True

    def _on_timer(self, _payload) -> None:
        self.produce_block()
        self.engine.after(self.config.block_interval, f"chain:{self.id}", self._on_timer)

    def produce_block(self) -> Block:
        now = self.engine.now
        taken: list[Tx] = []
        while (self.pending and len(taken) < self.config.block_capacity
               and self.pending[0].submitted_at < now):
            taken.append(self.pending.popleft())
        height = self.height + 1
        changed = False
        for tx in taken:
            tx.included_at = now
            tx.height = height
            reason = self._apply(tx, height)
            tx.ok = reason is None
            tx.reason = reason or ""
            changed = changed or (tx.ok and tx.kind not in INERT_KINDS)
        root = tx_root([tx.leaf() for tx in taken])
        parent = self.tip.digest
        block = Block(height, parent, taken, now, root, block_digest(height, parent, root, now))
        self.blocks.append(block)
        self._digests.append(digest_state(self.state.snapshot()) if changed else self._digests[-1])

        newly_final = []
        final = self.finalized_height()
        for h in range(self._final + 1, final + 1):
            for tx in self.blocks[h].txs:
                tx.finalized_at = now
            newly_final.append(self.blocks[h])
        self._final = final

        src = f"chain:{self.id}"
        for tx in taken:
            self.log.append(now, "tx", src, **self._tx_record(tx))
        self.log.append(now, "block", src, chain=self.id, height=height, n_txs=len(taken),
                        queue=len(self.pending), final=final, digest=block.digest,
                        store=self.state.store_size())
        for listener in list(self._listeners):
            listener(self, block, newly_final)
        return block

    def _tx_record(self, tx: Tx) -> dict[str, Any]:
        p = tx.payload
        rec = {"chain": self.id, "tx_id": tx.tx_id, "kind": tx.kind.value, "ok": tx.ok,
               "height": tx.height, "submitted_at": tx.submitted_at, "sender": tx.sender,
               "to": tx.to, "amount": tx.amount, "transfer": tx.transfer_id}
        for key in ("lock_id", "asset", "beneficiary", "bridge", "key"):
            if key in p:
                rec[key] = p[key]
        if tx.kind is TxKind.KV_PUT:
            rec["value"] = p.get("value")
        if tx.kind is TxKind.KV_GET:
            rec["result"] = tx.result
        if tx.reason:
            rec["reason"] = tx.reason
        return rec

    def _apply(self, tx: Tx, height: int) -> str | None:
        st = self.state
        p = tx.payload
        kind = tx.kind
        if kind is TxKind.NOOP:
            return None
        if kind is TxKind.KV_GET:
            tx.result = st.kv.get(p.get("key"))
            return None
        if kind is TxKind.KV_PUT:
            key = p.get("key")
            if key is None:
                return "missing key"
            st.kv[key] = p.get("value")
            self.kv_history.setdefault(key, []).append((height, p.get("value")))
            return None
        if kind is TxKind.LOCAL_TRANSFER:
            if st.balances.get(tx.sender, 0) < tx.amount:
                return "insufficient funds"
            st.balances[tx.sender] -= tx.amount
            st.balances[tx.to] = st.balances.get(tx.to, 0) + tx.amount
            return None
        if kind is TxKind.LOCK:
            lock_id = p.get("lock_id")
            if not lock_id or lock_id in st.locks or lock_id in st.released:
                return "duplicate lock id"
            if tx.amount <= 0:
                return "lock amount must be positive"
            if st.balances.get(tx.sender, 0) < tx.amount:
                return "insufficient funds"
            st.balances[tx.sender] -= tx.amount
            beneficiary = p.get("beneficiary") or tx.to or tx.sender
            p["beneficiary"] = beneficiary
            st.locks[lock_id] = Lock(tx.sender, tx.amount, beneficiary, p.get("hashlock"),
                                     p.get("timeout"), p.get("bridge"), tx.transfer_id)
            return None
        if kind in RELEASE_KINDS:
            lock_id = p["lock_id"]
            lock = st.locks.get(lock_id)
            if lock is None:
                return "already released" if lock_id in st.released else "unknown lock"
            now = tx.included_at
            if kind is TxKind.UNLOCK:
                if lock.bridge is not None:
                    validator = self.unlock_validators.get(lock.bridge)
                    reason = validator(self, tx) if validator else "no unlock authority"
                    if reason:
                        return reason
                elif tx.sender != lock.owner:
                    return "not lock owner"
                target = tx.to or lock.owner
            elif kind is TxKind.REDEEM:
                if lock.hashlock is None:
                    return "lock has no hashlock"
                preimage = p.get("preimage")
                if preimage is None or hash_preimage(preimage) != lock.hashlock:
                    return "bad preimage"
                if lock.timeout is not None and now >= lock.timeout:
                    return "redeem after timeout"
                target = lock.beneficiary
            else:
                if lock.timeout is None:
                    return "lock has no timeout"
                if now < lock.timeout:
                    return "refund before timeout"
                target = lock.owner
            del st.locks[lock_id]
            st.released[lock_id] = kind.value
            st.balances[target] = st.balances.get(target, 0) + lock.amount
            return None
        if kind is TxKind.MINT:
            bridge = p.get("bridge")
            asset = p.get("asset")
            validator = self.mint_validators.get(bridge)
            if validator is None:
                return "no mint authority"
            reason = validator(self, tx)
            if reason:
                return reason
            if tx.transfer_id in st.minted:
                return "replayed mint"
            if tx.amount > 0:
                bucket = st.wrapped.setdefault(asset, {})
                bucket[tx.to] = bucket.get(tx.to, 0) + tx.amount
                st.wrapped_supply[asset] = st.wrapped_supply.get(asset, 0) + tx.amount
            st.minted.add(tx.transfer_id)
            return None
        if kind is TxKind.BURN:
            asset = p.get("asset")
            bucket = st.wrapped.get(asset, {})
            if bucket.get(tx.sender, 0) < tx.amount or tx.amount <= 0:
                return "insufficient wrapped balance"
            bucket[tx.sender] -= tx.amount
            st.wrapped_supply[asset] -= tx.amount
            st.burned[asset] = st.burned.get(asset, 0) + tx.amount
            return None
        raise MalformedTx(f"unhandled kind {kind}")  # pragma: no cover


class Ledger:
    """Registry of the chains taking part in one run."""

    def __init__(self, engine: Engine, log: EventLog):
        self.engine = engine
        self.log = log
        self.chains: dict[str, SimChain] = {}

    def add_chain(self, config: ChainConfig) -> SimChain:
        if config.chain_id in self.chains:
            raise ValueError(f"duplicate chain_id {config.chain_id!r}")
        chain = SimChain(config, self.engine, self.log)
        self.chains[config.chain_id] = chain
        return chain

    def chain(self, chain_id: str) -> SimChain:
        try:
            return self.chains[chain_id]
        except KeyError:
            raise UnknownChain(chain_id) from None

    def submit_tx(self, chain_id: str, tx: Tx) -> bool:
        return self.chain(chain_id).submit(tx)

    def produce_block(self, chain_id: str) -> Block:
        return self.chain(chain_id).produce_block()

    def finalized_height(self, chain_id: str) -> int:
        return self.chain(chain_id).finalized_height()

    def state_digest(self, chain_id: str, at_height: int | None = None) -> str:
        return self.chain(chain_id).state_digest(at_height)

    def final_states(self) -> dict[str, dict[str, Any]]:
        return {cid: c.state.snapshot() for cid, c in self.chains.items()}
