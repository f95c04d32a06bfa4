"""k-of-n notary committee bridge."""

from __future__ import annotations

import hashlib
import hmac

from ..ledger import SimChain, Tx, TxKind
from .base import Bridge, CrossChainTransfer, Strategy, register_strategy


class NotaryBridge(Bridge):
    """Notaries watch the source chain and co-sign destination effects.

    ``observe_delay`` ticks after a lock becomes final, every honest notary
    signs; with at least ``k`` signatures the Mint is queued.  The
    destination chain accepts a Mint only when it carries ``k`` valid
    signatures from distinct committee members.
    """

    strategy = Strategy.NOTARY

    def __init__(self, interop, bridge_id, descriptor, source, dest):
        super().__init__(interop, bridge_id, descriptor, source, dest)
        rng = self.engine.rng(f"ifp:{bridge_id}")
        self.notaries = [f"notary-{i}" for i in range(self.params.n)]
        self._keys = {nid: rng.bytes(32) for nid in self.notaries}
        self.adversarial: set[str] = set()
        self._forged = 0
        dest.mint_validators[bridge_id] = self._validate_mint

    def set_adversarial(self, count: int) -> list[str]:
        """Mark the last ``count`` notaries adversarial (0 clears)."""
        count = max(0, min(count, len(self.notaries)))
        chosen = self.notaries[len(self.notaries) - count:] if count else []
        self.adversarial = set(chosen)
        return chosen

    def _message(self, transfer_id: str, asset: str, to: str, amount: int) -> bytes:
        return f"{self.id}|{transfer_id}|{asset}|{to}|{amount}".encode()

    def _sign(self, notary: str, message: bytes) -> str:
        return hmac.new(self._keys[notary], message, hashlib.sha256).hexdigest()

    def _on_origin_final(self, t: CrossChainTransfer) -> None:
        self.engine.after(self.params.observe_delay, self.component, self._collect, t)

    def _collect(self, t: CrossChainTransfer) -> None:
        if t.terminal:
            return
        msg = self._message(t.transfer_id, t.source_chain, t.recipient, t.amount)
        # adversarial notaries withhold signatures from honest transfers
        sigs = {n: self._sign(n, msg) for n in self.notaries if n not in self.adversarial}
        self.log.append(self.engine.now, "notary_round", self.component,
                        transfer=t.transfer_id, signatures=len(sigs), quorum=self.params.k)
        if len(sigs) >= self.params.k:
            self._approve(t, {"signatures": sigs})

    def _validate_mint(self, chain: SimChain, tx: Tx) -> str | None:
        sigs = tx.payload.get("signatures") or {}
        msg = self._message(tx.transfer_id, tx.payload.get("asset"), tx.to, tx.amount)
        valid = sum(1 for n, s in sigs.items()
                    if n in self._keys and hmac.compare_digest(s, self._sign(n, msg)))
        if valid < self.params.k:
            return f"{valid} valid notary signatures, quorum {self.params.k}"
        return None

    def forge(self, amount: int, recipient: str) -> str:
        """Adversarial notaries sign a Mint with no backing lock."""
        fid = f"{self.id}#forged-{self._forged}"
        self._forged += 1
        msg = self._message(fid, self.source.id, recipient, amount)
        sigs = {n: self._sign(n, msg) for n in sorted(self.adversarial)}
        tx = Tx(TxKind.MINT, "adversary", recipient, amount,
                {"asset": self.source.id, "bridge": self.id, "signatures": sigs},
                transfer_id=fid)
        self.dest.submit(tx)
        self.log.append(self.engine.now, "forged_mint", "adversary", bridge=self.id,
                        transfer=fid, tx_id=tx.tx_id, signers=len(sigs), amount=amount)
        return fid


register_strategy(Strategy.NOTARY, NotaryBridge)
