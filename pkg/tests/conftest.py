import numpy as np
import pytest

from wdment.measure import CountRecord, coincidence_probability, tomo_settings_16


def born_records(rho, total, rng=None):
    """Counts with mean ``total * Tr(rho P)`` per setting; noiseless when rng is None."""
    out = []
    for s in tomo_settings_16():
        mu = total * coincidence_probability(rho, s)
        out.append(CountRecord(s, mu if rng is None else int(rng.poisson(mu)), mu, 100.0))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20081215)


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
