import pytest

from covertid.channels import bern, validate_channel_pair
from covertid.codebook import generate
from covertid.params import derive_params

_ACCEPTANCE_LOG: list[str] = []


@pytest.fixture(scope="session")
def cp():
    """The reference channel pair used throughout: P0=Bern(0.1), P1=Bern(0.9),
    Q0=Bern(0.2), Q1=Bern(0.8)."""
    return validate_channel_pair(bern(0.1), bern(0.9), bern(0.2), bern(0.8))


@pytest.fixture(scope="session")
def params6(cp):
    """Tiny exhaustively-enumerable geometry: n=6, l=2, w=3, s=0."""
    return derive_params(cp, n=6, delta=1.2, eta=0.4, eps=0.1, mu_slack=0.1)


@pytest.fixture(scope="session")
def cb6(params6):
    return generate(params6, m_size=3, n_seq=3, master_seed=11)


@pytest.fixture(scope="session")
def params_desk(cp):
    """The n=2500 ledger (l=11, w=227, s=3)."""
    return derive_params(cp, n=2500, delta=0.1, eta=0.2, eps=0.05, mu_slack=0.01)


@pytest.fixture(scope="session")
def cb_heavy(params6):
    """Two-message weighted codebook where message 0 carries a full-weight
    atom with 10% mass: exercises the weight-cap truncation."""
    import numpy as np

    from covertid.codebook import Codebook

    base = generate(params6, 2, 4, master_seed=3)
    atoms0 = list(base.atoms[0][:3]) + [np.arange(6)]
    return Codebook(
        n=6, l=2, w=3, s=0, m_size=2, n_seq=4,
        threshold=params6.threshold, master_seed=3,
        atoms=[atoms0, list(base.atoms[1])],
        weights=[np.array([0.3, 0.3, 0.3, 0.1]), None],
    )


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LOG


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
