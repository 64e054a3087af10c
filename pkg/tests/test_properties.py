import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamow import entropy as ent
from gamow import liouville as lv
from gamow import wigner as wg
from gamow.friedrichs import FriedrichsModel, eta_first_sheet
from gamow.liouville import Label
from gamow.spectral import hardy_check

MODEL = FriedrichsModel.single(lam=0.1)
cplx = st.builds(complex, st.floats(-1, 1), st.floats(-1, 1))


@st.composite
def pole_states(draw, stable=True):
    """Random stable + resonance labels with Hermitian coefficient tables."""
    ns = draw(st.integers(1, 2)) if stable else 0
    ng = draw(st.integers(1, 3))
    labs = [Label(complex(draw(st.floats(0, 3))), False) for _ in range(ns)]
    labs += [Label(complex(draw(st.floats(0.1, 3)), -draw(st.floats(0.01, 0.5))), True) for _ in range(ng)]
    n = len(labs)
    co = {}
    for i in range(n):
        co[(i, i)] = draw(st.floats(0.05, 1)) if not labs[i].ghost else draw(st.floats(0, 1))
        for j in range(i + 1, n):
            c = draw(cplx)
            if c != 0:
                co[(i, j)], co[(j, i)] = c, np.conj(c)
    return lv.pole_state(labs, co)


@settings(max_examples=100, deadline=None)
@given(pole_states())
def test_ghost_product_laws(rho):
    _, one, _ = lv.equilibrium_parts(rho, 0.0)
    alg = one.algebra
    A = one.dyads()
    assert alg.trace(A) == 0
    assert alg.trace(alg.mul(A, A)) == 0
    assert alg.power(A, 3) == {}
    assert alg.power(A, 4) == {}


@settings(max_examples=50, deadline=None)
@given(pole_states(stable=False))
def test_pure_ghost_products_vanish(rho):
    A = rho.dyads()
    assert rho.algebra.mul(A, A) == {}


@settings(max_examples=50, deadline=None)
@given(pole_states(), st.floats(0, 50), st.floats(0, 50))
def test_semigroup_and_hermiticity(rho, t1, t2):
    a = lv.evolve(lv.evolve(rho, t1), t2)
    b = lv.evolve(rho, t1 + t2)
    assert max(abs(a.coeffs[k] - b.coeffs[k]) for k in b.coeffs) < 1e-10
    assert b.hermitian_residual() < 1e-12
    assert abs(lv.generalized_trace(b) - lv.generalized_trace(rho)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(pole_states())
def test_projector_preserves_trace_and_equilibrium(rho):
    P = ent.projector_for(rho)
    assert abs(ent.trace_of(P.apply(rho), rho.labels) - lv.generalized_trace(rho)) < 1e-12
    star, _, _ = lv.equilibrium_parts(rho)
    x = P.apply(star, rho.labels)
    assert all(abs(x[k] - c) < 1e-12 for k, c in star.dyads().items())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 5), st.floats(0.01, 3))
def test_schwarz_reflection(x, y):
    z = complex(x, y)
    assert abs(eta_first_sheet(MODEL, z.conjugate()) - np.conj(eta_first_sheet(MODEL, z))) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(2, 18), st.floats(0.05, 1))
def test_hardy_verdicts_mirror(x, y):
    E = np.linspace(0, 20, 512)
    a = hardy_check(1 / (E - complex(x, -y)), E)
    b = hardy_check(np.conj(1 / (E - complex(x, -y))), E)
    assert a.score == pytest.approx(b.mirror_score, rel=1e-9, abs=1e-15)
    mirror = {"phi-": "phi+", "phi+": "phi-", "neither": "neither"}
    assert b.verdict == mirror[a.verdict]


GRID = wg.PositionGrid.centered(32, 12.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_wigner_linearity_and_norm(seed, a, b):
    rng = np.random.default_rng(seed)
    M = [rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32)) for _ in range(2)]
    r1, r2 = (m @ m.conj().T for m in M)
    lhs = wg.wigner_transform(a * r1 + b * r2, GRID).values
    rhs = a * wg.wigner_transform(r1, GRID).values + b * wg.wigner_transform(r2, GRID).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * max(1.0, np.abs(lhs).max())
    assert wg.wigner_transform(r1, GRID).integral() == pytest.approx(np.trace(r1).real, rel=1e-8)
