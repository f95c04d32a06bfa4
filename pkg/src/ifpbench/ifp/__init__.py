"""IFP interface layer and the three reference bridges.

Plug-in contract: a bridge class subclasses :class:`Bridge`, is registered
with :func:`register_strategy`, and exposes ``connect`` (via
:meth:`Interop.connect`), ``submit_transfer``, ``poll_status`` and
``on_block_event``.
"""

from .base import (MAIN_PATH, STRATEGIES, TERMINAL, Bridge, CrossChainTransfer, HtlcParams,
                   IfpAttributes, IfpDescriptor, Interop, NotaryParams, RelayPegParams, Strategy,
                   TransferKind, TransferRequest, TransferState, is_legal_sequence,
                   register_strategy)
from .htlc import HashLockBridge, SwapSchedule, counterparty_account
from .matrix import capability_matrix, format_matrix
from .notary import NotaryBridge
from .relay import LightClient, LightHeader, RelayPegBridge

__all__ = [
    "MAIN_PATH", "STRATEGIES", "TERMINAL", "Bridge", "CrossChainTransfer", "HashLockBridge",
    "HtlcParams", "IfpAttributes", "IfpDescriptor", "Interop", "LightClient", "LightHeader",
    "NotaryBridge", "NotaryParams", "RelayPegBridge", "RelayPegParams", "Strategy",
    "SwapSchedule", "TransferKind", "TransferRequest", "TransferState", "capability_matrix",
    "counterparty_account", "format_matrix", "is_legal_sequence", "register_strategy",
]
