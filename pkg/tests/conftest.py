from __future__ import annotations

import pytest

from bvlab.primes import build_prime_store


@pytest.fixture(scope="session")
def store_1e5():
    return build_prime_store(10**5 + 200)


@pytest.fixture(scope="session")
def store_1e6():
    return build_prime_store(10**6)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
