from __future__ import annotations

import pytest

from ifpbench.engine import Engine, EventLog
from ifpbench.executor import BridgeSpec, RunPlan, RuntimeSpec
from ifpbench.ifp import IfpDescriptor, Interop
from ifpbench.ledger import ChainConfig, Ledger
from ifpbench.workload import WorkloadSpec


def funded(n: int = 8, amount: int = 1000) -> dict[str, int]:
    return {f"acct-{i}": amount for i in range(n)}


class World:
    """A hand-wired engine, ledger and interop layer for unit tests."""

    def __init__(self, *chains: ChainConfig, seed: int = 0):
        self.engine = Engine(seed)
        self.log = EventLog()
        self.ledger = Ledger(self.engine, self.log)
        for cfg in chains:
            self.ledger.add_chain(cfg)
        self.interop = Interop(self.ledger)

    def chain(self, cid):
        return self.ledger.chain(cid)

    def connect(self, strategy: str, source="A", dest="B", name=None, **params):
        desc = IfpDescriptor(name or strategy.lower(), strategy, params or None)
        return self.interop.connect(desc, source, dest)

    def run(self, until: int) -> int:
        return self.engine.run_until(until)


@pytest.fixture
def world():
    def make(*chains, seed=0):
        if not chains:
            chains = (ChainConfig("A", initial_balances=funded()), ChainConfig("B", initial_balances=funded()))
        return World(*chains, seed=seed)
    return make


def make_plan(strategy="Notary", program="CTP", total=20, rate=1.0, horizon=200, warmup=0,
              seed=0, params=None, attack=None, arrival="open", concurrency=4,
              interval=2, depth=2, capacity=10, pool=8, funding=1000, **workload) -> RunPlan:
    chains = tuple(ChainConfig(c, interval, depth, capacity, funded(pool, funding)) for c in ("A", "B"))
    bridges = (BridgeSpec("br", strategy, "A", "B", params or {}),)
    spec = WorkloadSpec(program, total, arrival, rate, concurrency, account_pool=pool, **workload)
    return RunPlan(spec, RuntimeSpec(chains, bridges, seed), horizon, warmup, attack)


# acceptance reporting -------------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None and rep.when == "call":
        number, title = mark.args
        detail = getattr(item, "criterion_detail", "")
        ACCEPTANCE[number] = ("PASS" if rep.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{status} {number:>2}. {title}" + (f": {detail}" if detail else ""))


@pytest.fixture
def detail(request):
    """Attach a one-line summary to the running acceptance criterion."""
    def note(text: str) -> None:
        request.node.criterion_detail = text
        print(text)
    return note
