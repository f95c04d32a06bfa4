"""Client workload generator for the three core programs.

* ``NoAction``: Noop transfers that return to the caller with no state effect.
* ``CTP``: unit-value transfers between randomly paired pool accounts.
* ``RWE``: cross-chain KV reads and writes over a uniform key space.

Requests are spread over the bridge topology round-robin.  Open-loop
requests are released at ``floor(i / rate)``; closed-loop streams carry
``release_at = 0`` and leave pacing to the executor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import EmptyTopology, InvalidSpec
from .ifp.base import TransferKind, TransferRequest

PROGRAMS = ("NoAction", "CTP", "RWE")

PROGRAM_HELP = {
    "NoAction": "Noop cross-chain calls; measures consensus/settlement latency with no state effect. "
                "Parameters: total_requests, arrival.",
    "CTP": "Unit-value transfers between randomly paired accounts of the pool. "
           "Parameters: total_requests, arrival, account_pool.",
    "RWE": "Random cross-chain KV reads and writes; reads are exactly round(rw_ratio * N). "
           "Parameters: total_requests, arrival, rw_ratio, key_space, payload_size, account_pool.",
}


@dataclass(frozen=True)
class WorkloadSpec:
    program: str = "CTP"
    total_requests: int = 100
    arrival: str = "open"       # "open" or "closed"
    rate: float = 1.0           # open-loop requests per tick
    concurrency: int = 4        # closed-loop in-flight cap
    rw_ratio: float = 0.5
    payload_size: int = 32
    account_pool: int = 8
    key_space: int = 64
    seed_offset: int = 0

    def validate(self) -> None:
        if self.program not in PROGRAMS:
            raise InvalidSpec(f"program must be one of {PROGRAMS}, got {self.program!r}")
        if self.total_requests < 1:
            raise InvalidSpec("total_requests must be >= 1")
        if self.arrival not in ("open", "closed"):
            raise InvalidSpec("arrival must be 'open' or 'closed'")
        if self.arrival == "open" and not self.rate > 0:
            raise InvalidSpec("open-loop rate must be > 0")
        if self.arrival == "closed" and self.concurrency < 1:
            raise InvalidSpec("closed-loop concurrency must be >= 1")
        if not 0 <= self.rw_ratio <= 1:
            raise InvalidSpec("rw_ratio must lie in [0, 1]")
        if self.account_pool < 1 or self.key_space < 1 or self.payload_size < 0:
            raise InvalidSpec("account_pool and key_space must be >= 1, payload_size >= 0")


@dataclass(frozen=True)
class Route:
    bridge: str
    source: str
    dest: str


@dataclass(frozen=True)
class Release:
    release_at: int
    index: int
    bridge: str
    request: TransferRequest


def account(i: int) -> str:
    return f"acct-{i}"


def read_count(rw_ratio: float, total: int) -> int:
    """round(rw_ratio * total), halves rounded up."""
    return math.floor(Fraction(rw_ratio).limit_denominator(10**9) * total + Fraction(1, 2))


def release_tick(index: int, rate: float) -> int:
    return math.floor(index / Fraction(rate).limit_denominator(10**9))


def generate(spec: WorkloadSpec, topology: Sequence[Route], rng: np.random.Generator) -> list[Release]:
    """Deterministic request stream for ``spec`` over ``topology``."""
    spec.validate()
    if not topology:
        raise EmptyTopology("workload needs at least one bridge")
    n = spec.total_requests
    reads: set[int] = set()
    if spec.program == "RWE":
        perm = rng.permutation(n)
        reads = {int(i) for i in perm[: read_count(spec.rw_ratio, n)]}
    out = []
    for i in range(n):
        route = topology[i % len(topology)]
        sender = account(int(rng.integers(spec.account_pool)))
        recipient = account(int(rng.integers(spec.account_pool)))
        if spec.program == "NoAction":
            req = TransferRequest(TransferKind.NOOP, sender, recipient)
        elif spec.program == "CTP":
            req = TransferRequest(TransferKind.VALUE, sender, recipient, 1)
        else:
            key = f"k{int(rng.integers(spec.key_space))}"
            if i in reads:
                req = TransferRequest(TransferKind.KV_READ, sender, recipient, key=key)
            else:
                req = TransferRequest(TransferKind.KV_WRITE, sender, recipient, key=key,
                                      value=rng.bytes(spec.payload_size).hex())
        at = release_tick(i, spec.rate) if spec.arrival == "open" else 0
        out.append(Release(at, i, route.bridge, req))
    return out
