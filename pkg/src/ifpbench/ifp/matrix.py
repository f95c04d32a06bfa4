"""Static capability matrix of published IFPs and the reference bridges."""

from __future__ import annotations

from .base import IfpAttributes, Strategy

# (group, row label, attribute field)
ROWS = (
    ("Platform Design", "Virtual Machine", "virtual_machine"),
    ("Platform Design", "Consensus", "consensus"),
    ("Platform Design", "DApps", "dapps"),
    ("Interoperability", "Bridging Protocol", "bridging_protocol"),
    ("Interoperability", "Transfer of Value", "transfer_of_value"),
    ("Interoperability", "Transfer of Logic", "transfer_of_logic"),
    ("Interoperability", "Interchain DApps", "interchain_dapps"),
)

LEGEND = ("LFT - Loop Fault Tolerance, PoW - Proof of Work, DPoS - Delegated Proof of Stake, "
          "PoI - Proof of Identity, PoS - Proof of Stake, DApps - Decentralized Applications")

PUBLISHED = {
    "ICON": IfpAttributes(False, "LFT", True, False, True, False, False),
    "AION": IfpAttributes(True, "PoW + DPoS + PoI", True, True, True, True, True),
    "Wanchain": IfpAttributes(True, "PoS", True, False, True, False, False),
}

REFERENCE_ATTRIBUTES = {
    Strategy.NOTARY: IfpAttributes(False, "k-of-n notary quorum", False, True, True, False, False),
    Strategy.HASHLOCK: IfpAttributes(False, "none (per-chain)", False, False, True, False, False),
    Strategy.RELAYPEG: IfpAttributes(False, "header relay / SPV", False, True, True, False, False),
}

REFERENCE_NAMES = {
    Strategy.NOTARY: "Notary (ref)",
    Strategy.HASHLOCK: "HashLock (ref)",
    Strategy.RELAYPEG: "RelayPeg (ref)",
}


def _cell(value: bool | str) -> str:
    if isinstance(value, bool):
        return "Yes" if value else "No"
    return value


def capability_matrix(include_reference: bool = True) -> dict:
    """Return ``{"columns": [...], "rows": [{"group", "attribute", <column>: cell}]}``."""
    platforms = dict(PUBLISHED)
    if include_reference:
        for strategy, name in REFERENCE_NAMES.items():
            platforms[name] = REFERENCE_ATTRIBUTES[strategy]
    rows = []
    for group, label, fieldname in ROWS:
        row = {"group": group, "attribute": label}
        for name, attrs in platforms.items():
            row[name] = _cell(getattr(attrs, fieldname))
        rows.append(row)
    return {"columns": list(platforms), "rows": rows}


def format_matrix(matrix: dict, attributes: list[str] | None = None) -> str:
    cols = ["General Attributes", "Specific Attributes"] + matrix["columns"]
    rows = [r for r in matrix["rows"] if not attributes or r["attribute"] in attributes]
    table = [[r["group"], r["attribute"]] + [r[c] for c in matrix["columns"]] for r in rows]
    widths = [max(len(str(x)) for x in col) for col in zip(cols, *table)]

    def line(cells):
        return "| " + " | ".join(str(c).ljust(w) for c, w in zip(cells, widths)) + " |"

    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    out = [line(cols), sep] + [line(r) for r in table]
    return "\n".join(out) + "\n\n" + LEGEND + "\n"
