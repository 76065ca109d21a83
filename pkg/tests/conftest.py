"""Shared test helpers.

The acceptance tests (test_acceptance.py) register one summary line per
criterion; the hook below prints them after the run so the pass/fail
record survives pytest's output capture.
"""

import numpy as np
import pytest

from mimosim import MonteCarloConfig, RngStream


def stream(seed=12345, substream=0):
    return RngStream(seed=seed, substream=substream)


def mc(trials, seed=12345, substream=0, rel_se_target=None):
    return MonteCarloConfig(
        trials=trials, rng=stream(seed, substream), rel_se_target=rel_se_target
    )


def random_psd(n, rng, complex_offdiag=True):
    """A random well-conditioned Hermitian PSD matrix with unit-scale trace."""
    m = rng.standard_normal((n, n))
    if complex_offdiag:
        m = m + 1j * rng.standard_normal((n, n))
    r = m @ m.conj().T / n + 0.1 * np.eye(n)
    return r * (n / np.trace(r).real)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_report(request):
    """Append a line to the end-of-run acceptance summary (also returned)."""

    def _record(line):
        request.config._acceptance_lines.append(line)
        return line

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
