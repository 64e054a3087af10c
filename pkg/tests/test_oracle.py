import numpy as np
import pytest

from gamow import oracle as orc
from gamow.friedrichs import FriedrichsModel, find_pole


@pytest.fixture(scope="module")
def small():
    return orc.discretize(FriedrichsModel.single(lam=0.3), 512, True)


def test_uncoupled_spectrum_is_exact():
    m = FriedrichsModel.single(lam=0.0)
    H = orc.discretize(m, 512)
    ref = np.sort(np.concatenate([[1.0], H.nodes]))
    assert np.array_equal(H.evals, ref)


def test_level_repulsion(model01):
    H = orc.discretize(model01, 1000)
    assert np.min(np.abs(H.evals - 1.0)) > 0


def test_rejects_tiny_grid(model01):
    with pytest.raises(ValueError):
        orc.discretize(model01, 100)


def test_eigen_residual(small):
    assert small.residuals().max() < 1e-10
    assert np.allclose(small.matrix(), small.matrix().T)


def test_arrowhead_eigenvectors_match_dense(model03):
    Hv = orc.discretize(model03, 1024, True)
    Hn = orc.discretize(model03, 1024, False)
    assert np.allclose(Hn.level_weights(), Hv.level_weights(), atol=1e-12)
    psi = np.random.default_rng(0).normal(size=Hv.dim)
    assert np.allclose(np.abs(Hn.project(psi)), np.abs(Hv.project(psi)), atol=1e-10)


def test_n_doubling(model03, pole03):
    ts = np.linspace(0, 10 / pole03.gamma, 200)
    p = [orc.survival(H, H.state(), ts) for H in (orc.discretize(model03, N) for N in (2000, 4000))]
    assert np.max(np.abs(p[0] - p[1])) < 1e-4


def test_decay_rate_matches_pole(criterion1_oracle, pole01):
    H, ts, p = criterion1_oracle
    assert ts[-1] < H.recurrence_time / 4
    rate = orc.DecayFit().fit(ts, p).rate_
    assert abs(rate / pole01.gamma - 1) < 0.01


def test_strong_coupling_rate_to_1e10_literal(model03, pole03):
    g = pole03.gamma
    H = orc.discretize(model03, 4000)
    ts = np.linspace(5 / g, 15 / g, 200)
    rate = orc.fit_rate(ts, orc.survival(H, H.state(), ts))
    print(f"|gamma - fitted| = {abs(rate - g):.3e}")
    assert abs(rate - g) < 1e-10


def test_strong_coupling_rate_to_one_percent(model03, pole03):
    g = pole03.gamma
    H = orc.discretize(model03, 4000)
    ts = np.linspace(5 / g, 15 / g, 200)
    assert abs(orc.fit_rate(ts, orc.survival(H, H.state(), ts)) / g - 1) < 0.01


def test_evolve_at_zero_is_identity(small):
    psi = np.random.default_rng(1).normal(size=small.dim)
    assert np.allclose(orc.exact_evolve(small, psi, [0.0])[0], psi, atol=1e-13)


def test_norm_preserved(small):
    psi = small.state()
    ps = orc.exact_evolve(small, psi, np.linspace(0, 200, 30))
    assert np.max(np.abs(np.linalg.norm(ps, axis=1) - 1)) < 1e-12


def test_forward_backward_identity(small):
    psi = np.random.default_rng(2).normal(size=small.dim) + 0j
    psi /= np.linalg.norm(psi)
    for t in (1.0, 37.0, 150.0):
        fwd = orc.exact_evolve(small, psi, [t])[0]
        back = orc.exact_evolve(small, fwd, [-t])[0]
        assert np.max(np.abs(back - psi)) < 1e-12


def test_stationary_state(small):
    V = small.evecs
    w = np.random.default_rng(3).random(small.dim)
    rho0 = (V * (w / w.sum())) @ V.T
    for r in orc.exact_density_evolve(small, rho0, [0.0, 10.0, 100.0]):
        assert np.max(np.abs(r - rho0)) < 1e-12


def test_density_trace_conserved(small):
    psi = small.state()
    rho0 = np.outer(psi, psi) + 0j
    rhos, ex = orc.exact_density_evolve(small, rho0, np.linspace(0, 50, 6), observables=[np.eye(small.dim)])
    assert np.max(np.abs([np.trace(r) - 1 for r in rhos])) < 1e-12
    assert np.max(np.abs(ex - 1)) < 1e-12


def test_coherence_decay_rate():
    m = FriedrichsModel((1.0, 1.5), 0.3)
    G = sum(find_pole(m, level=n).gamma for n in range(2)) / 2
    H = orc.discretize(m, 2000, True)
    rho = np.zeros((H.dim, H.dim), complex)
    rho[0, 1] = rho[1, 0] = 0.5
    R = np.zeros_like(rho)
    R[1, 0] = 1
    ts = np.linspace(3 / G, 10 / G, 150)
    assert ts[-1] < H.recurrence_time / 4
    rate = orc.DecayFit().fit(ts, np.abs(orc.expectation_curve(H, rho, R, ts))).rate_
    assert abs(rate / G - 1) < 0.01


def test_moments_of_bare_level(small, model03):
    m1, var = orc.moments(small, small.state())
    assert m1 == pytest.approx(1.0, abs=1e-12)
    # <H^2> - <H>^2 = lam^2 int f^2 on the grid
    assert var == pytest.approx(np.sum(small.couplings**2), rel=1e-10)


def test_decay_fit_estimator():
    ts = np.linspace(0, 10, 50)
    est = orc.DecayFit(window=(1.0, 9.0)).fit(ts, 2.0 * np.exp(-0.3 * ts))
    assert est.rate_ == pytest.approx(0.3, rel=1e-12)
    assert np.allclose(est.predict(ts), 2.0 * np.exp(-0.3 * ts), rtol=1e-12)
    assert est.get_params() == {"window": (1.0, 9.0)}
    assert est.set_params(window=(None, None)).window == (None, None)
    with pytest.raises(ValueError):
        orc.DecayFit(window=(20, 30)).fit(ts, np.exp(-ts))
