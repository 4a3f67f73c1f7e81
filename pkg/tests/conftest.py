import numpy as np
import pytest

from qedvolterra import SpectralDensity

# acceptance pass/fail lines collected by tests/test_acceptance.py
ACCEPTANCE_LOG: list[str] = []


def record_criterion(num: int, name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    line = f"acceptance {num:2d} [{name}] {status}" \
        + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LOG.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in ACCEPTANCE_LOG:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def synthetic_density() -> SpectralDensity:
    """rho(p) = p exp(-p): everything about it is known in closed form."""
    return SpectralDensity(
        fn=lambda p: p * np.exp(-p),
        label="p_exp",
        scale=1.0,
        peak=1.0,
        decay_rate=1.0,
        analytic_extension=lambda z: z * np.exp(-z),
    )
