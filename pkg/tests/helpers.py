"""Shared test helpers: goldens, acceptance bookkeeping, set conversions."""

from __future__ import annotations

import os
from pathlib import Path

import pytest

GOLDEN = Path(__file__).parent / "golden"
UPDATE_GOLDENS = os.environ.get("UPDATE_GOLDENS") == "1"

# Lines collected by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def golden(name: str, text: str) -> str:
    """Return the stored golden text, writing it first when UPDATE_GOLDENS=1."""
    path = GOLDEN / name
    if UPDATE_GOLDENS:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    elif not path.exists():
        pytest.fail(f"missing golden {name}; rerun with UPDATE_GOLDENS=1")
    return path.read_text(encoding="utf-8")


def as_set(statement) -> frozenset:
    return frozenset(statement.members)
