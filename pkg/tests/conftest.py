import numpy as np
import pytest
from hypothesis import strategies as st

from photon_router import ChannelParams, RouterConfig

rates = st.floats(min_value=0.05, max_value=5.0, allow_nan=False)
freqs = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
channels = st.builds(ChannelParams, freqs, rates, rates)


def configs(min_n=1, max_n=8):
    return st.lists(channels, min_size=min_n, max_size=max_n).map(lambda chs: RouterConfig(tuple(chs)))


def random_config(rng, n, omega=(-3.0, 3.0), gamma=(0.1, 4.0)):
    return RouterConfig.from_arrays(rng.uniform(*omega, n), rng.uniform(*gamma, n), rng.uniform(*gamma, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=[True, False], ids=["numba", "numpy"])
def use_numba(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
