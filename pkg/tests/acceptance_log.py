"""Shared registry the acceptance tests report into.

Each criterion logs exactly one line; conftest prints them in the
terminal summary so a full run ends with a pass/fail scoreboard.
"""

from __future__ import annotations

LINES: list[str] = []


def record(num: int, ok: bool, detail: str) -> bool:
    status = "PASS" if ok else "FAIL"
    LINES.append(f"ACCEPTANCE: [{num}] {status} {detail}")
    return ok
