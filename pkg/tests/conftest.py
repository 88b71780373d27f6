import numpy as np
import pytest

from adact.activations import ActivationBank, fit_ranges
from adact.network import MlpNetwork, forward, hidden_nets, mse


def random_net(rng, N=None, N_h=None, M=None, N_v=None, H=None):
    """Small network with a random PLA bank and random output weights, plus data."""
    N = N or int(rng.integers(1, 5))
    N_h = N_h or int(rng.integers(1, 5))
    M = M or int(rng.integers(1, 5))
    N_v = N_v or int(rng.integers(5, 21))
    H = H or int(rng.integers(3, 9))
    X = rng.standard_normal((N_v, N))
    T = rng.standard_normal((N_v, M))
    net = MlpNetwork(rng.standard_normal((N_h, N + 1)), rng.standard_normal((M, N_h)),
                     rng.standard_normal((M, N + 1)))
    ranges = fit_ranges(hidden_nets(net, X), margin=0.05)
    net.bank = ActivationBank.from_reference("sigmoid", ranges, H)
    net.bank.A[...] += 0.3 * rng.standard_normal(net.bank.A.shape)
    return net, X, T


def hinge_distance(net, X):
    """Distance from each pattern's nets to the nearest hinge, minimised over units."""
    nets = hidden_nets(net, X)
    d = np.abs(nets[:, :, None] - net.bank.ns[None, :, :]).min(axis=2)
    return d.min(axis=1)


def energy(net, X, T):
    return mse(forward(net, X).Y, T)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []  # criterion lines filled in by test_acceptance.py


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
