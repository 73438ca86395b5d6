import numpy as np
import pytest

from badcodes.erasure import make_stream


@pytest.fixture
def rng():
    return make_stream(20240601)


def brute_force_codewords(h: np.ndarray) -> np.ndarray:
    """All codewords of a small binary code given by its parity matrix."""
    n = h.shape[1]
    words = ((np.arange(1 << n)[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    ok = ~((words @ h.T.astype(np.int64)) & 1).any(axis=1)
    return words[ok]


# one line per acceptance criterion, replayed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def report(key: str, ok: bool, detail: str) -> str:
    line = f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}"
    ACCEPTANCE_LINES[key] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    order = lambda k: (int(k.split("(")[0]), k)
    for key in sorted(ACCEPTANCE_LINES, key=order):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
