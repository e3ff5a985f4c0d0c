import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pptp.ledger import Ledger  # noqa: E402
from pptp.signing import Identity  # noqa: E402


@pytest.fixture
def ids():
    return {n: Identity.derive(n) for n in ("C", "R1", "R2", "R3", "R4", "P", "X")}


@pytest.fixture
def ledger(ids):
    led = Ledger()
    for n, ident in ids.items():
        if n != "X":
            led.register(n, ident.pubkey, 1000, 50)
    return led

from hypothesis import settings  # noqa: E402

settings.register_profile("pptp", deadline=None)
settings.load_profile("pptp")


def pytest_terminal_summary(terminalreporter):
    from netutil import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(ACCEPTANCE):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {title}: {detail}")
