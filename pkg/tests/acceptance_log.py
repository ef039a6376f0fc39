"""Collects one pass/fail line per acceptance criterion for the terminal summary."""

from __future__ import annotations

import time
from contextlib import contextmanager

RESULTS: dict[int, tuple[bool, str]] = {}


@contextmanager
def criterion(number, title, budget_s):
    """Record whether the enclosed block passed and stayed within ``budget_s`` seconds.

    The block reports its measured quantities through the yielded list.
    """
    notes: list[str] = []
    start = time.perf_counter()
    try:
        yield notes
    except BaseException:
        RESULTS[number] = (False, f"{title}: " + "; ".join(notes))
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget_s
    notes.append(f"{elapsed:.1f} s of {budget_s:g} s budget")
    RESULTS[number] = (ok, f"{title}: " + "; ".join(notes))
    assert ok, f"criterion {number} exceeded its runtime budget"


def lines():
    for number in sorted(RESULTS):
        ok, text = RESULTS[number]
        yield f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}"
