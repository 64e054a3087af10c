import numpy as np
import pytest

from gamow.friedrichs import FriedrichsModel, find_pole
from gamow.spectral import RawState, expand_in_gamow
from gamow import liouville as lv


@pytest.fixture(scope="session")
def model01():
    return FriedrichsModel.single(lam=0.1)


@pytest.fixture(scope="session")
def model03():
    return FriedrichsModel.single(lam=0.3)


@pytest.fixture(scope="session")
def pole01(model01):
    return find_pole(model01)


@pytest.fixture(scope="session")
def pole03(model03):
    return find_pole(model03)


@pytest.fixture(scope="session")
def state03(pole03):
    return expand_in_gamow(RawState.make(1.0), pole03)


@pytest.fixture(scope="session")
def state01(pole01):
    return expand_in_gamow(RawState.make(1.0), pole01)


@pytest.fixture(scope="session")
def rho03(state03):
    return lv.from_pure(state03)


@pytest.fixture(scope="session")
def three_label_state():
    """Stable level plus two resonances, with mixed and ghost-pair terms."""
    labs = [lv.Label(1.0 + 0j, False), lv.Label(1.2 - 0.05j, True), lv.Label(2.0 - 0.15j, True)]
    w1, w2 = 0.1 + 0.05j, 0.07
    co = {(0, 0): 0.6, (1, 0): w1, (0, 1): np.conj(w1), (2, 0): w2, (0, 2): np.conj(w2),
          (1, 1): 0.3, (2, 2): 0.1, (1, 2): 0.02j, (2, 1): -0.02j}
    return lv.pole_state(labs, co)


@pytest.fixture(scope="session")
def criterion1_oracle(pole01):
    """Oracle survival at lam = 0.1 over [5/gamma, 15/gamma], inside T_rec / 4."""
    from gamow import oracle as orc

    H = orc.discretize(FriedrichsModel.single(lam=0.1, omega_max=10.5), 6400)
    g = pole01.gamma
    ts = np.linspace(5 / g, 15 / g, 200)
    return H, ts, orc.survival(H, H.state(), ts)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per criterion, then assert every check."""
    def record(n, checks):
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name} {'ok' if good else 'FAILED'} ({val})" for name, good, val in checks)
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        request.config.stash.setdefault(ACCEPTANCE, {})[n] = line
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
