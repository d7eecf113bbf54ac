import numpy as np
import pytest

from riseig.channel_model import ChannelSet, gen_kronecker_rank, gen_rayleigh


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_channels(rng, r, n_bs, n_ris, rank=None, reflect_gain=1.0):
    """Unit-scale single-RIS ChannelSet; ``rank`` limits rank(H_s)."""
    h_d = gen_rayleigh(rng, r, n_bs)
    h_re = gen_rayleigh(rng, r, n_ris, reflect_gain)
    if rank is None:
        h_s = gen_rayleigh(rng, n_ris, n_bs)
    else:
        h_s = gen_kronecker_rank(rng, n_ris, n_bs, rank)
    return ChannelSet(h_d, [h_re], [h_s])


def unimodular(rng, n):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, n))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
