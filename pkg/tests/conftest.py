from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from reebmod import manifest as mf  # noqa: E402
from reebmod.oracle import SampleSpec  # noqa: E402

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def gallery() -> dict[str, mf.Manifest]:
    return {p.stem: mf.load(p) for p in mf.bundled()}


@pytest.fixture
def spec() -> SampleSpec:
    return SampleSpec()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
