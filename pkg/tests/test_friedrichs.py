import numpy as np
import pytest
from scipy.special import roots_legendre

from gamow.errors import CutError, ModelViolationError, PoleSearchError, ContourError
from gamow.friedrichs import (FormFactor, FriedrichsModel, ResonanceData, background_contour, eta_first_sheet,
                              eta_second_sheet, find_pole)

GOLDEN = 2 * np.pi * 0.01 * 0.25


def test_form_factor_threshold_and_sign():
    f = FormFactor()
    w = np.linspace(0, 50, 1001)
    assert f(0.0) == 0
    assert np.all(f(w) >= 0)
    assert np.isclose(f(1.0), 0.25)


def test_form_factor_continuation_matches_axis():
    f = FormFactor()
    for w in (0.3, 1.0, 4.0):
        assert abs(f.continued(w - 1e-9j) - f(w)) < 1e-8


def test_form_factor_lists_singularity():
    assert np.any(np.isclose(FormFactor().singularities, -1j))


def test_form_factor_rejects_bad_family():
    with pytest.raises(ValueError):
        FormFactor("gaussian", (1.0,))


def test_model_invariants():
    with pytest.raises(ValueError):
        FriedrichsModel((1.0, 1.0), 0.1)
    with pytest.raises(ValueError):
        FriedrichsModel((1.0,), 0.1, omega_max=5.0)
    assert FriedrichsModel.single().omega_max == 20.0


def test_eta_uncoupled():
    m = FriedrichsModel.single(lam=0.0)
    assert eta_first_sheet(m, 2 + 1j) == 1 + 1j


def test_eta_matches_fixed_gauss_rule(model01):
    z = 1 + 0.5j
    # composite Gauss rule on the mapped half line w = u / (1 - u)
    x, wt = roots_legendre(50)
    edges = np.linspace(0, 1, 20001)
    a, b = edges[:-1, None], edges[1:, None]
    u = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    wu = (0.5 * (b - a) * wt).ravel()
    w = u / (1 - u)
    jac = 1 / (1 - u) ** 2
    J = np.sum(wu * jac * model01.form(w) / (z - w))
    ref = z - 1 - 0.01 * J
    assert abs(eta_first_sheet(model01, z) - ref) < 1e-8


def test_eta_plemelj_sign(model01):
    assert eta_first_sheet(model01, 1 + 1e-6j).imag > 0


def test_eta_cut_error(model01):
    with pytest.raises(CutError):
        eta_first_sheet(model01, 1.0 + 0j)


def test_schwarz_reflection(model01):
    rng = np.random.default_rng(1)
    for _ in range(50):
        z = complex(rng.uniform(-1, 5), rng.uniform(0.05, 2))
        assert abs(eta_first_sheet(model01, z.conjugate()) - eta_first_sheet(model01, z).conjugate()) < 1e-9


def test_second_sheet_uncoupled():
    m = FriedrichsModel.single(lam=0.0)
    assert eta_second_sheet(m, 1 - 0.3j) == 1 - 0.3j - 1


def test_second_sheet_matching_across_cut_literal(model01):
    # continuation across the cut at omega = 1 with eps = 1e-6
    d = abs(eta_second_sheet(model01, 1 - 1e-6j) - eta_first_sheet(model01, 1 + 1e-6j))
    print(f"gap {d:.3e}")
    assert d < 1e-8


def test_second_sheet_matching_is_first_order(model01):
    # the gap is 2 eps |eta'|: it shrinks linearly with eps
    gaps = [abs(eta_second_sheet(model01, 1 - e * 1j) - eta_first_sheet(model01, 1 + e * 1j)) for e in (1e-4, 1e-5, 1e-6)]
    assert gaps[0] / gaps[1] == pytest.approx(10, rel=1e-3)
    assert gaps[1] / gaps[2] == pytest.approx(10, rel=1e-3)
    assert gaps[2] < 2.1e-6


def test_sheet_consistency_random_literal(model01):
    rng = np.random.default_rng(2)
    ws = rng.uniform(0.01, model01.omega_max, 100)
    worst = max(abs(eta_second_sheet(model01, w - 1e-6j) - eta_first_sheet(model01, w + 1e-6j)) for w in ws)
    print(f"worst gap {worst:.3e}")
    assert worst < 1e-6


def test_second_sheet_vanishes_at_pole(pole01, model01):
    assert abs(eta_second_sheet(model01, pole01.z0)) < 1e-10
    assert abs(model01.dispersion(pole01.z0, sheet=2)) < 1e-12


def test_pole_uncoupled():
    p = find_pole(FriedrichsModel.single(lam=0.0))
    assert p.z0 == 1.0 and p.gamma == 0.0 and p.N0 == 1.0


def test_pole_golden_rule(pole01):
    assert pole01.z0.imag < 0
    assert abs(pole01.gamma / GOLDEN - 1) < 0.05


def test_pole_residue_is_inverse_derivative(pole01, model01):
    h = 1e-5
    d = (model01.dispersion(pole01.z0 + h, 2) - model01.dispersion(pole01.z0 - h, 2)) / (2 * h)
    assert abs(pole01.N0 - 1 / d) < 1e-8


def test_perturbative_limit():
    lams = [0.02, 0.01, 0.005]
    r = [find_pole(FriedrichsModel.single(lam=l)).gamma / l**2 for l in lams]
    target = 2 * np.pi * 0.25
    errs = [abs(x - target) for x in r]
    assert errs[0] > errs[1] > errs[2]
    # Richardson with the O(lam^2) correction
    rich = (4 * r[2] - r[1]) / 3
    assert abs(rich / target - 1) < 0.005


def test_residue_continuity():
    ns = [abs(find_pole(FriedrichsModel.single(lam=l)).N0 - 1) for l in (0.1, 0.05, 0.01)]
    assert ns[0] > ns[1] > ns[2] and ns[2] < 1e-3


def test_pole_search_errors(model01):
    with pytest.raises(ValueError):
        find_pole(model01, seed=1 + 0.1j)
    with pytest.raises(PoleSearchError) as e:
        find_pole(model01, seed=5 - 3j, maxiter=2)
    assert len(e.value.trace) >= 1


def test_multilevel_poles():
    m = FriedrichsModel((1.0, 2.0), 0.05, omega_max=20.5)
    g = [find_pole(m, level=n).gamma for n in range(2)]
    gold = [2 * np.pi * 0.0025 * float(m.form(w)) for w in (1.0, 2.0)]
    assert np.allclose(g, gold, rtol=0.05)


def test_contour_uncoupled():
    m = FriedrichsModel.single(lam=0.0)
    c = background_contour(m, [find_pole(m)])
    assert c.waypoints == (0j, complex(m.omega_max))


def test_contour_depth_rule(model01, pole01):
    c = background_contour(model01, [pole01])
    assert c.depth == pytest.approx(1.5 * pole01.z0.imag)
    assert c.depth == pytest.approx(-0.0118, abs=1e-4)
    assert any(abs(w.real - 1.0025791) < 1e-6 for w in c.waypoints)


def test_contour_clipped_by_singularity():
    m = FriedrichsModel.single(lam=1.2)
    p = find_pole(m)
    assert 1.5 * p.z0.imag < -0.5
    c = background_contour(m, [p])
    assert c.depth == pytest.approx(-0.5)
    assert c.depth < p.z0.imag


NARROW = FormFactor("rational", (1e-4, 1, 1.0, 1.5, -0.1, 2))  # singularity at 1.5 - 0.1i


def test_contour_obstruction():
    m = FriedrichsModel.single(omega0=1.5, lam=0.05, form=NARROW)
    deep = ResonanceData(m, 1.5 - 0.08j, 1.0 + 0j)
    with pytest.raises(ContourError):
        background_contour(m, [deep])


def test_upper_half_plane_pole_is_reported():
    m = FriedrichsModel.single(omega0=1.5, lam=0.1, form=NARROW)
    with pytest.raises(ModelViolationError):
        find_pole(m)
