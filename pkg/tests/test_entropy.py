import numpy as np
import pytest

from gamow import entropy as ent
from gamow import liouville as lv
from gamow.errors import ConsistencyError, ShapeError, SingularEquilibriumError
from gamow.liouville import Label


def random_state(rng, nghost=2):
    """Stable level plus nghost resonances with Hermitian pole coefficients."""
    labs = [Label(1.0 + 0j, False)] + [
        Label(complex(rng.uniform(0.5, 3), -rng.uniform(0.01, 0.2)), True) for _ in range(nghost)]
    r0 = rng.uniform(0.3, 1.0)
    co = {(0, 0): r0}
    for n in range(1, nghost + 1):
        c = complex(rng.normal(), rng.normal()) * 0.1
        co[(n, 0)], co[(0, n)] = c, np.conj(c)
        co[(n, n)] = rng.uniform(0, 0.2)
    return lv.pole_state(labs, co)


def window(rho):
    g = lv.slowest_rate(rho)
    return g, np.linspace(3 / g, 10 / g, 60)


def test_default_recipe_single_ghost():
    P = ent.build_projector([(1, 1)])
    assert np.array_equal(P.p, [[1]]) and np.array_equal(P.q, [[1]])


def test_rank1_is_idempotent():
    P = ent.build_projector([(1, 1), (2, 2)], "rank1", vector=[1.0, 2.0j])
    assert max(P.residuals().values()) < 1e-12


def test_non_idempotent_rejected_unless_flagged():
    p = np.array([[0.5, 0], [0, 1]])
    with pytest.raises(ConsistencyError) as e:
        ent.build_projector([(1, 1), (2, 2)], "custom", p=p, q=p)
    assert e.value.residual == pytest.approx(0.25)
    assert not ent.build_projector([(1, 1), (2, 2)], "custom", p=p, q=p, idempotent=False).idempotent


def test_zero_q_rejected():
    with pytest.raises(ConsistencyError):
        ent.build_projector([(1, 1)], "custom", p=np.eye(1), q=np.zeros((1, 1)))


def test_bad_recipes():
    with pytest.raises(ShapeError):
        ent.build_projector([], "identity")
    with pytest.raises(ShapeError):
        ent.build_projector([(1, 1)], "bogus")
    with pytest.raises(ShapeError):
        ent.build_projector([(1, 1)], "slowest")


def test_projector_must_commute_with_evolution(three_label_state):
    keys = ent.ghost_keys(three_label_state)
    v = np.zeros(len(keys))
    v[keys.index((0, 1))] = v[keys.index((1, 0))] = 1.0
    with pytest.raises(ConsistencyError):
        ent.projector_for(three_label_state, "rank1", vector=v)


def test_trace_preserved_on_random_states():
    rng = np.random.default_rng(7)
    for _ in range(20):
        rho = random_state(rng, rng.integers(1, 4))
        P = ent.projector_for(rho)
        x = P.apply(rho)
        assert abs(ent.trace_of(x, rho.labels) - lv.generalized_trace(rho)) < 1e-12


def test_equilibrium_fixed_point(three_label_state):
    star, _, _ = lv.equilibrium_parts(three_label_state)
    P = ent.projector_for(three_label_state)
    x = P.apply(star, three_label_state.labels)
    assert x.keys() == star.dyads().keys()
    assert max(abs(x[k] - c) for k, c in star.dyads().items()) < 1e-12


def test_non_trivial(three_label_state):
    P = ent.projector_for(three_label_state)
    S, _ = ent.conditional_entropy(three_label_state, P, [0.0])
    assert S[0] < 0


def test_equilibrium_entropy_vanishes():
    rho = lv.pole_state([Label(1.0 + 0j, False), Label(2.0 + 0j, False)], {(0, 0): 0.4, (1, 1): 0.6})
    S, B = ent.conditional_entropy(rho, None, [0.0, 5.0])
    assert np.all(S == 0) and np.all(B == 0)


def test_naive_entropy_is_zero(three_label_state):
    _, ts = window(three_label_state)
    S, _ = ent.conditional_entropy(three_label_state, None, ts)
    assert np.all(S == 0)


def test_single_ghost_closed_form():
    c, r0 = 0.1 + 0.05j, 0.6
    rho = lv.pole_state([Label(1.0 + 0j, False), Label(1.2 - 0.05j, True)],
                        {(0, 0): r0, (1, 0): c, (0, 1): np.conj(c)})
    g, ts = window(rho)
    S, _ = ent.conditional_entropy(rho, ent.projector_for(rho), ts)
    w = lv.pole_norm(rho)
    assert np.allclose(S, -0.5 * np.exp(-2 * g * ts) * w**2 / r0, rtol=1e-12)


@pytest.mark.parametrize("recipe", ["identity", "slowest"])
def test_near_equilibrium_monotone(three_label_state, recipe):
    g, ts = window(three_label_state)
    S, B = ent.conditional_entropy(three_label_state, ent.projector_for(three_label_state, recipe), ts)
    assert np.all(S <= 0)
    assert np.all(np.diff(S) >= 0)
    assert np.all(B <= np.abs(S))
    assert abs(ent.decay_exponent(ts, S) / (2 * g) - 1) < 0.02


def test_distinct_projectors_agree(three_label_state):
    g, ts = window(three_label_state)
    k = [ent.decay_exponent(ts, ent.conditional_entropy(three_label_state,
                                                        ent.projector_for(three_label_state, r), ts)[0])
         for r in ("identity", "slowest")]
    assert k[0] == pytest.approx(k[1], rel=0.02)


def test_entropy_tends_to_zero(three_label_state):
    S, _ = ent.conditional_entropy(three_label_state, ent.projector_for(three_label_state), [0.0, 500.0])
    assert abs(S[1]) < 1e-15 * max(1.0, abs(S[0]))


def test_singular_equilibrium():
    rho = lv.pole_state([Label(1.0 + 0j, False), Label(1.2 - 0.05j, True)], {(1, 0): 0.1, (0, 1): 0.1})
    with pytest.raises(SingularEquilibriumError):
        ent.conditional_entropy(rho, ent.projector_for(rho), [0.0])
