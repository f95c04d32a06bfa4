"""Run configuration: JSON documents, defaults, validation and overrides.

A config has two property groups, ``workload`` and ``runtime``, plus the
run-level ``seed``, an optional ``attack`` and a ``schema_version``::

    {
      "schema_version": 1,
      "seed": 0,
      "workload": {"program": "CTP", "total_requests": 200, ...},
      "runtime": {"horizon": 400, "warmup": 40, "window": 20,
                  "account_funding": 1000,
                  "chains": [{"chain_id": "A", ...}, ...],
                  "bridges": [{"bridge_id": "notary", "strategy": "Notary",
                               "source": "A", "dest": "B", "params": {...}}]},
      "attack": null
    }

Missing fields are filled from :data:`DEFAULT_CONFIG` and the per-entry
defaults below; unknown fields are rejected.  Every validation error names
the offending field as a dotted path (``runtime.bridges[0].source``).
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import asdict, fields
from importlib import resources
from pathlib import Path
from typing import Any

from .adversary import ATTACK_KINDS, AttackSpec
from .errors import ConfigInvalid, IoError, UnknownParameter
from .executor import BridgeSpec, RunPlan, RuntimeSpec
from .ifp.base import PARAMS_BY_STRATEGY, Strategy
from .ledger import ChainConfig
from .workload import WorkloadSpec, account

SCHEMA_VERSION = 1

CHAIN_DEFAULTS = {"block_interval": 2, "finality_depth": 2, "block_capacity": 10,
                  "initial_balances": None}
BRIDGE_FIELDS = ("bridge_id", "name", "strategy", "source", "dest", "params")
ATTACK_DEFAULTS = {f.name: f.default for f in fields(AttackSpec)}
WORKLOAD_DEFAULTS = {**{f.name: f.default for f in fields(WorkloadSpec)}, "bridges": None}

DEFAULT_CONFIG: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "workload": {**WORKLOAD_DEFAULTS, "program": "CTP", "total_requests": 200, "rate": 1.0},
    "runtime": {
        "horizon": 400,
        "warmup": 40,
        "window": 20,
        "account_funding": 1000,
        "chains": [
            {"chain_id": "A", **CHAIN_DEFAULTS},
            {"chain_id": "B", **CHAIN_DEFAULTS},
        ],
        "bridges": [
            {"bridge_id": "notary", "name": "notary", "strategy": "Notary", "source": "A",
             "dest": "B", "params": asdict(PARAMS_BY_STRATEGY[Strategy.NOTARY]())},
        ],
    },
    "attack": None,
}

BUNDLED = ("notary_ctp", "relay_ctp", "htlc_ctp", "notary_rwe", "notary_noaction",
           "notary_dos", "notary_sybil", "relay_byzantine", "multi_ifp")


# loading ---------------------------------------------------------------------

def bundled_path(name: str) -> Path:
    return Path(str(resources.files("ifpbench") / "configs" / f"{name}.json"))


def load_config(path: str | Path) -> dict[str, Any]:
    """Read a config file; a bare bundled name such as ``notary_ctp`` also works."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        p = bundled_path(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("<document>", f"not valid JSON: {exc}") from exc
    return normalize(raw)


# normalization and validation ---------------------------------------------

def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigInvalid(path, message)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _merge(section: Any, defaults: dict, path: str) -> dict:
    _expect(isinstance(section, dict), path, "must be an object")
    unknown = sorted(set(section) - set(defaults))
    _expect(not unknown, f"{path}.{unknown[0]}" if unknown else path, "unknown field")
    out = copy.deepcopy(defaults)
    out.update(copy.deepcopy(section))
    return out


def _ints(section: dict, path: str, names: tuple[str, ...], minimum: int) -> None:
    for name in names:
        v = section[name]
        _expect(_is_int(v), f"{path}.{name}", f"must be an integer, got {v!r}")
        _expect(v >= minimum, f"{path}.{name}", f"must be >= {minimum}")


def normalize(raw: Any) -> dict[str, Any]:
    """Fill defaults and validate; returns a new, fully populated config."""
    _expect(isinstance(raw, dict), "<document>", "config must be a JSON object")
    _expect("schema_version" in raw, "schema_version", "required")
    _expect(raw["schema_version"] == SCHEMA_VERSION, "schema_version",
            f"unsupported version {raw['schema_version']!r}, expected {SCHEMA_VERSION}")
    cfg = _merge(raw, DEFAULT_CONFIG, "config")
    _expect(_is_int(cfg["seed"]), "seed", "must be an integer")

    rt = _merge(cfg["runtime"], DEFAULT_CONFIG["runtime"], "runtime")
    _ints(rt, "runtime", ("horizon",), 1)
    _ints(rt, "runtime", ("window", ), 1)
    _ints(rt, "runtime", ("account_funding",), 0)
    if rt["warmup"] is not None:
        _ints(rt, "runtime", ("warmup",), 0)
        _expect(rt["warmup"] < rt["horizon"], "runtime.warmup", "must be < runtime.horizon")

    _expect(isinstance(rt["chains"], list) and rt["chains"], "runtime.chains", "must be a non-empty list")
    chain_ids: list[str] = []
    chains = []
    for i, ch in enumerate(rt["chains"]):
        p = f"runtime.chains[{i}]"
        ch = _merge(ch, {"chain_id": None, **CHAIN_DEFAULTS}, p)
        _expect(isinstance(ch["chain_id"], str) and ch["chain_id"], f"{p}.chain_id",
                "must be a non-empty string")
        _expect(ch["chain_id"] not in chain_ids, f"{p}.chain_id", f"duplicate chain {ch['chain_id']!r}")
        _ints(ch, p, ("block_interval", "block_capacity"), 1)
        _ints(ch, p, ("finality_depth",), 0)
        bal = ch["initial_balances"]
        if bal is not None:
            _expect(isinstance(bal, dict), f"{p}.initial_balances", "must be an object or null")
            for acct, amt in bal.items():
                _expect(_is_int(amt) and amt >= 0, f"{p}.initial_balances.{acct}",
                        "must be a non-negative integer")
        chain_ids.append(ch["chain_id"])
        chains.append(ch)
    rt["chains"] = chains

    _expect(isinstance(rt["bridges"], list) and rt["bridges"], "runtime.bridges", "must be a non-empty list")
    bridge_ids: list[str] = []
    bridges = []
    for i, br in enumerate(rt["bridges"]):
        p = f"runtime.bridges[{i}]"
        br = _merge(br, dict.fromkeys(BRIDGE_FIELDS), p)
        _expect(br["strategy"] in [s.value for s in Strategy], f"{p}.strategy",
                f"must be one of {[s.value for s in Strategy]}, got {br['strategy']!r}")
        for end in ("source", "dest"):
            _expect(br[end] in chain_ids, f"{p}.{end}", f"unknown chain {br[end]!r}")
        _expect(br["source"] != br["dest"], f"{p}.dest", "must differ from source")
        if br["bridge_id"] is None:
            br["bridge_id"] = f"{br['strategy'].lower()}-{br['source']}-{br['dest']}"
        _expect(isinstance(br["bridge_id"], str) and br["bridge_id"], f"{p}.bridge_id",
                "must be a non-empty string")
        _expect(br["bridge_id"] not in bridge_ids, f"{p}.bridge_id", f"duplicate bridge {br['bridge_id']!r}")
        if br["name"] is None:
            br["name"] = br["bridge_id"]
        cls = PARAMS_BY_STRATEGY[Strategy(br["strategy"])]
        params = _merge(br["params"] or {}, asdict(cls()), f"{p}.params")
        try:
            cls(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"{p}.params", str(exc)) from None
        br["params"] = params
        if br["strategy"] == Strategy.RELAYPEG.value:
            src = chains[chain_ids.index(br["source"])]
            _expect(params["confirmation_depth"] >= src["finality_depth"],
                    f"{p}.params.confirmation_depth", "must be >= the source chain's finality_depth")
        bridge_ids.append(br["bridge_id"])
        bridges.append(br)
    rt["bridges"] = bridges
    cfg["runtime"] = rt

    wl = _merge(cfg["workload"], DEFAULT_CONFIG["workload"], "workload")
    if wl["bridges"] is not None:
        _expect(isinstance(wl["bridges"], list) and wl["bridges"], "workload.bridges",
                "must be a non-empty list or null")
        for j, b in enumerate(wl["bridges"]):
            _expect(b in bridge_ids, f"workload.bridges[{j}]", f"unknown bridge {b!r}")
    spec_fields = {k: v for k, v in wl.items() if k != "bridges"}
    try:
        spec = WorkloadSpec(**spec_fields)
        spec.validate()
    except Exception as exc:  # InvalidSpec / TypeError
        raise ConfigInvalid("workload", str(exc)) from None
    for name in ("total_requests", "concurrency", "payload_size", "account_pool", "key_space", "seed_offset"):
        _expect(_is_int(wl[name]), f"workload.{name}", "must be an integer")
    for name in ("rate", "rw_ratio"):
        _expect(_is_num(wl[name]), f"workload.{name}", "must be a number")
    used = wl["bridges"] or bridge_ids
    if wl["program"] == "RWE":
        for b in used:
            br = bridges[bridge_ids.index(b)]
            _expect(br["strategy"] != Strategy.HASHLOCK.value, "workload.program",
                    f"RWE requests cannot ride HashLock bridge {b!r}")
    cfg["workload"] = wl

    if cfg["attack"] is not None:
        at = _merge(cfg["attack"], ATTACK_DEFAULTS, "attack")
        _expect(at["kind"] in ATTACK_KINDS, "attack.kind", f"must be one of {list(ATTACK_KINDS)}")
        _expect(at["target"] in bridge_ids or (at["kind"] == "DosFlood" and at["target"] in chain_ids),
                "attack.target", f"unknown target {at['target']!r}")
        try:
            AttackSpec(**at).validate()
        except Exception as exc:
            raise ConfigInvalid("attack", str(exc)) from None
        strategy = bridges[bridge_ids.index(at["target"])]["strategy"] if at["target"] in bridge_ids else None
        if at["kind"] == "SybilNotary":
            _expect(strategy == Strategy.NOTARY.value, "attack.target", "SybilNotary needs a Notary bridge")
            _expect(at["intensity"] <= bridges[bridge_ids.index(at["target"])]["params"]["n"],
                    "attack.intensity", "exceeds the notary committee size")
        if at["kind"] == "ByzantineRelay":
            _expect(strategy == Strategy.RELAYPEG.value, "attack.target", "ByzantineRelay needs a RelayPeg bridge")
        cfg["attack"] = at
    return cfg


# overrides and diffs --------------------------------------------------------

_TOKEN = re.compile(r"([^.\[\]]+)|\[(\d+)\]")


def _split(path: str) -> list[str | int]:
    parts: list[str | int] = []
    for name, index in _TOKEN.findall(path):
        parts.append(int(index) if index else name)
    if not parts or "".join(f"[{p}]" if isinstance(p, int) else p for p in parts) != path.replace(".", ""):
        raise UnknownParameter(f"cannot parse parameter path {path!r}")
    return parts


def get_path(cfg: dict, path: str) -> Any:
    node: Any = cfg
    for part in _split(path):
        try:
            node = node[part]
        except (KeyError, IndexError, TypeError):
            raise UnknownParameter(f"{path!r} does not name a config field") from None
    return node


def set_path(cfg: dict, path: str, value: Any) -> None:
    """Set ``path`` in place; null intermediate objects (e.g. ``attack``) are created."""
    parts = _split(path)
    node: Any = cfg
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            if not (isinstance(part, int) and part < len(node)):
                raise UnknownParameter(f"{path!r}: index out of range")
            nxt = node[part]
        elif isinstance(part, int):
            raise UnknownParameter(f"{path!r} does not name a config field")
        else:
            nxt = node.get(part)
        if nxt is None and not isinstance(parts[i + 1], int):
            nxt = {}
            node[part] = nxt
        if not isinstance(nxt, (dict, list)):
            raise UnknownParameter(f"{path!r} does not name a config field")
        node = nxt
    last = parts[-1]
    if isinstance(node, list) and not (isinstance(last, int) and last < len(node)):
        raise UnknownParameter(f"{path!r}: index out of range")
    if isinstance(node, dict) and isinstance(last, int):
        raise UnknownParameter(f"{path!r} does not name a config field")
    node[last] = value


def parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    """Apply ``KEY=VALUE`` overrides (values parsed as JSON, else string) and re-validate."""
    out = copy.deepcopy(cfg)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigInvalid(item, "override must look like KEY=VALUE")
        try:
            set_path(out, key.strip(), parse_value(value.strip()))
        except UnknownParameter as exc:
            raise ConfigInvalid(key, str(exc)) from None
    return normalize(out)


def flatten(node: Any, prefix: str = "") -> dict[str, Any]:
    if isinstance(node, dict) and node:
        out = {}
        for k in sorted(node):
            out.update(flatten(node[k], f"{prefix}.{k}" if prefix else k))
        return out
    if isinstance(node, list) and node:
        out = {}
        for i, v in enumerate(node):
            out.update(flatten(v, f"{prefix}[{i}]"))
        return out
    return {prefix: node}


def non_default_settings(cfg: dict) -> list[dict[str, Any]]:
    """Every flattened key whose value differs from the documented defaults."""
    ours = flatten(cfg)
    base = flatten(normalize(copy.deepcopy(DEFAULT_CONFIG)))
    def expanded(key: str, other: dict) -> bool:
        # a null section on one side that the other side fills in
        return any(k.startswith((key + ".", key + "[")) for k in other)

    diff = []
    for key in sorted(set(ours) | set(base)):
        if key not in ours and expanded(key, ours) or key not in base and expanded(key, base):
            continue
        if ours.get(key, "<absent>") != base.get(key, "<absent>"):
            diff.append({"key": key, "value": ours.get(key), "default": base.get(key)})
    return diff


# conversion --------------------------------------------------------------------

def to_plan(cfg: dict) -> RunPlan:
    rt = cfg["runtime"]
    wl = cfg["workload"]
    pool = {account(i): rt["account_funding"] for i in range(wl["account_pool"])}
    chains = tuple(
        ChainConfig(ch["chain_id"], ch["block_interval"], ch["finality_depth"], ch["block_capacity"],
                    dict(ch["initial_balances"]) if ch["initial_balances"] is not None else dict(pool))
        for ch in rt["chains"])
    bridges = tuple(BridgeSpec(b["bridge_id"], b["strategy"], b["source"], b["dest"],
                               dict(b["params"]), b["name"]) for b in rt["bridges"])
    spec = WorkloadSpec(**{k: v for k, v in wl.items() if k != "bridges"})
    attack = AttackSpec(**cfg["attack"]) if cfg["attack"] else None
    return RunPlan(spec, RuntimeSpec(chains, bridges, cfg["seed"]), rt["horizon"], rt["warmup"],
                   attack, tuple(wl["bridges"]) if wl["bridges"] else None)
