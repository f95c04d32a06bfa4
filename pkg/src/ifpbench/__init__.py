"""ifpbench: deterministic multi-chain simulator and benchmark harness for
interoperability-facilitating platforms (IFPs)."""

__version__ = "0.1.0"
