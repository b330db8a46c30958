"""Shared name normalization and alias resolution."""

from __future__ import annotations

import re

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Case-fold, trim, and collapse internal whitespace."""
    return _WS.sub(" ", name.strip()).casefold()


def resolve_alias(name: str, aliases: dict[str, str] | None) -> str:
    """Map a normalized name through the alias table to its canonical form.

    Chains (a -> b, b -> c) are followed to a fixpoint; a cycle stops at the
    last distinct name seen.
    """
    key = normalize_name(name)
    if not aliases:
        return key
    table = {normalize_name(k): normalize_name(v) for k, v in aliases.items()}
    seen = {key}
    while key in table:
        nxt = table[key]
        if nxt in seen:
            break
        seen.add(nxt)
        key = nxt
    return key


def canonical_key(name: str, aliases: dict[str, str] | None = None) -> str:
    return resolve_alias(name, aliases)
