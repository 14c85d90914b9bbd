"""End-to-end acceptance gate.

Each criterion is one reproduction check from the registry; the test prints a
single pass/fail line per criterion (straight to the terminal, bypassing
capture) and fails the matching test item when the check does not pass.
"""

import pytest

from singlebirth import reproduce

CHECKS = {key: (desc, fn) for key, desc, fn in reproduce.CHECKS}


@pytest.mark.parametrize("key", list(CHECKS), ids=list(CHECKS))
def test_acceptance(key, capsys):
    desc, fn = CHECKS[key]
    try:
        ok, detail = fn()
    except Exception as exc:  # noqa: BLE001 - reported, then failed
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    with capsys.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] {key}: {desc} -- {detail}")
    assert ok, f"{key}: {detail}"
