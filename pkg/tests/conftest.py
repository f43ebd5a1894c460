import pytest

from ebsc import rand


@pytest.fixture
def gen():
    return rand.rng(1234)


def random_hermitian(gen, d):
    g = rand.ginibre(gen, d, d)
    return (g + g.conj().T) / 2


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[number])
