"""Size guards for the exhaustive routines.

Every enumeration in this package is exponential somewhere, so each one checks
its size against a guard before starting. Defaults can be raised per call
(``limit=...``) or process-wide through environment variables.
"""

from __future__ import annotations

import os


class SizeLimitError(RuntimeError):
    """Raised when a requested enumeration exceeds its guard."""


# guard name -> (environment variable, default)
_GUARDS = {
    "profiles": ("SEQALLOC_MAX_PROFILES", 26_000_000),
    "policies": ("SEQALLOC_MAX_POLICIES", 2**24),
    "ak_depth": ("SEQALLOC_MAX_AK_DEPTH", 24),
    "tree_depth": ("SEQALLOC_MAX_TREE_DEPTH", 16),
    "spne_items": ("SEQALLOC_MAX_SPNE_ITEMS", 15),
    "strategic_items": ("SEQALLOC_MAX_STRATEGIC_ITEMS", 5),
}


def guard(name: str, override: int | None = None) -> int:
    if override is not None:
        return override
    env, default = _GUARDS[name]
    raw = os.environ.get(env)
    if raw is None:
        return default
    try:
        return int(float(raw))
    except ValueError:
        raise ValueError(f"{env} must be an integer, got {raw!r}") from None


def check(name: str, size: int, override: int | None = None, what: str = "") -> None:
    limit = guard(name, override)
    if size > limit:
        env, _ = _GUARDS[name]
        label = what or name
        raise SizeLimitError(
            f"{label} needs {size:,} > limit {limit:,}; "
            f"pass limit=... or set {env} to raise it"
        )
