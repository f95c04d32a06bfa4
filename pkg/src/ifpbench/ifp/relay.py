"""Two-way peg backed by header relays and inclusion proofs.

Each chain hosts a light client of the other.  On every block event the
relayer pushes up to ``header_batch`` new headers across.  A Mint (forward)
or Unlock (burn direction) is accepted only with an inclusion proof against a
relayed header that has ``confirmation_depth`` headers on top of it.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidHeader, MalformedRequest
from ..ledger import Block, SimChain, Tx, TxKind, block_digest, tx_root
from .base import Bridge, CrossChainTransfer, Strategy, TransferKind, TransferRequest, register_strategy


@dataclass(frozen=True)
class LightHeader:
    height: int
    parent: str
    tx_root: str
    produced_at: int
    digest: str

    @classmethod
    def of(cls, block: Block) -> "LightHeader":
        return cls(block.height, block.parent_digest, block.tx_root, block.produced_at, block.digest)


class LightClient:
    """Header chain of a remote ledger, anchored at its genesis."""

    def __init__(self, genesis: Block):
        self.headers: list[LightHeader] = [LightHeader.of(genesis)]

    @property
    def tip(self) -> LightHeader:
        return self.headers[-1]

    def at(self, height: int) -> LightHeader | None:
        if 0 <= height < len(self.headers):
            return self.headers[height]
        return None

    def submit(self, header: LightHeader) -> None:
        tip = self.tip
        if header.height != tip.height + 1:
            raise InvalidHeader(f"height {header.height} does not extend tip {tip.height}")
        if header.parent != tip.digest:
            raise InvalidHeader(f"parent digest mismatch at height {header.height}")
        if block_digest(header.height, header.parent, header.tx_root, header.produced_at) != header.digest:
            raise InvalidHeader(f"digest mismatch at height {header.height}")
        self.headers.append(header)


def _parse_leaf(leaf: str) -> dict:
    tx_id, ok, kind, amount, transfer, to, lock_id = leaf.split("|")
    return {"tx_id": tx_id, "ok": ok == "1", "kind": kind, "amount": int(amount),
            "transfer": transfer, "to": to, "lock_id": lock_id}


class RelayPegBridge(Bridge):
    strategy = Strategy.RELAYPEG

    def __init__(self, interop, bridge_id, descriptor, source, dest):
        if descriptor.params.confirmation_depth < source.config.finality_depth:
            raise ValueError("confirmation_depth must be >= the source chain's finality_depth")
        super().__init__(interop, bridge_id, descriptor, source, dest)
        # keyed by the chain hosting the client
        self.clients = {dest.id: LightClient(source.blocks[0]), source.id: LightClient(dest.blocks[0])}
        self.invalid_per_batch = 0
        self._awaiting: list[CrossChainTransfer] = []
        self._rng = self.engine.rng(f"ifp:{bridge_id}")
        dest.mint_validators[bridge_id] = self._validate_mint
        source.unlock_validators[bridge_id] = self._validate_unlock

    def other(self, chain_id: str) -> SimChain:
        return self.dest if chain_id == self.source.id else self.source

    # burn direction ----------------------------------------------------------

    def submit_burn(self, holder: str, recipient: str, lock_id: str) -> str:
        """Burn the wrapped units backing ``lock_id`` and release that lock to ``recipient``."""
        lock = self.source.state.locks.get(lock_id)
        if lock is None or lock.bridge != self.id:
            raise MalformedRequest(f"no active {self.id} lock {lock_id!r}")
        req = TransferRequest(TransferKind.VALUE, holder, recipient, lock.amount)
        self.validate(req)
        t = self._new_transfer(req, self.dest.id, self.source.id, tag="burn-")
        t.lock_ref = lock_id
        tx = Tx(TxKind.BURN, holder, recipient, lock.amount,
                {"asset": self.source.id, "lock_id": lock_id})
        self._submit_leg(t, "origin", self.dest, tx)
        return t.transfer_id

    def _target_tx(self, t: CrossChainTransfer, auth: dict) -> Tx:
        if t.lock_ref is not None:
            payload = {"lock_id": t.lock_ref, "bridge": self.id}
            payload.update(auth)
            return Tx(TxKind.UNLOCK, self.id, t.recipient, 0, payload)
        return super()._target_tx(t, auth)

    # relay -------------------------------------------------------------------

    def _on_origin_final(self, t: CrossChainTransfer) -> None:
        self._awaiting.append(t)
        self._check_confirmations()

    def _after_block(self, chain: SimChain, block: Block) -> None:
        self._relay(chain)
        self._check_confirmations()

    def _relay(self, chain: SimChain) -> None:
        client = self.clients[self.other(chain.id).id]
        now = self.engine.now
        for _ in range(self.invalid_per_batch):
            tip = client.tip
            parent = self._rng.bytes(32).hex()
            root = self._rng.bytes(32).hex()
            bad = LightHeader(tip.height + 1, parent, root, now,
                              block_digest(tip.height + 1, parent, root, now))
            try:
                client.submit(bad)
            except InvalidHeader as exc:
                self.log.append(now, "header_rejected", self.component, bridge=self.id,
                                chain=chain.id, height=bad.height, reason=str(exc))
            else:  # pragma: no cover - parent is random, cannot link
                raise AssertionError("forged header accepted")
        relayed = 0
        while relayed < self.params.header_batch and client.tip.height < chain.height:
            header = LightHeader.of(chain.blocks[client.tip.height + 1])
            client.submit(header)
            relayed += 1
            self.log.append(now, "header_relayed", self.component, bridge=self.id,
                            chain=chain.id, height=header.height)

    def _check_confirmations(self) -> None:
        still = []
        for t in self._awaiting:
            if t.terminal:
                continue
            client = self.clients[t.dest_chain]
            origin = self._origin_of(t)
            if client.tip.height - origin.height >= self.params.confirmation_depth:
                block = self.chain(t.source_chain).blocks[origin.height]
                proof = {"height": origin.height, "leaves": [tx.leaf() for tx in block.txs]}
                self._approve(t, {"proof": proof})
            else:
                still.append(t)
        self._awaiting = still

    def _origin_of(self, t: CrossChainTransfer) -> Tx:
        return self.chain(t.source_chain).txs[t.legs["origin"]]

    # destination-side validation --------------------------------------------

    def _check_proof(self, chain: SimChain, tx: Tx, kind: str, amount: int,
                     lock_id: str) -> str | None:
        proof = tx.payload.get("proof")
        if not proof:
            return "missing inclusion proof"
        client = self.clients[chain.id]
        header = client.at(proof["height"])
        if header is None:
            return "proof references an unrelayed header"
        if client.tip.height - header.height < self.params.confirmation_depth:
            return "header not confirmed"
        if tx_root(proof["leaves"]) != header.tx_root:
            return "leaves do not match header root"
        for leaf in map(_parse_leaf, proof["leaves"]):
            if (leaf["ok"] and leaf["kind"] == kind and leaf["transfer"] == tx.transfer_id
                    and leaf["amount"] == amount and leaf["to"] == tx.to
                    and leaf["lock_id"] == lock_id):
                return None
        return "no matching transaction in proof"

    def _validate_mint(self, chain: SimChain, tx: Tx) -> str | None:
        return self._check_proof(chain, tx, TxKind.LOCK.value, tx.amount, tx.transfer_id)

    def _validate_unlock(self, chain: SimChain, tx: Tx) -> str | None:
        lock_id = tx.payload["lock_id"]
        lock = chain.state.locks[lock_id]
        return self._check_proof(chain, tx, TxKind.BURN.value, lock.amount, lock_id)


register_strategy(Strategy.RELAYPEG, RelayPegBridge)
