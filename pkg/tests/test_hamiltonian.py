import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkam import hamiltonian as hm
from wkam.errors import ProfileNotConvex

coords = st.floats(-3.0, 3.0, allow_nan=False)
moms = st.floats(-4.0, 4.0, allow_nan=False)


def fd(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2 * h)


@pytest.mark.parametrize("name", ["free", "pendulum", "forced", "H1", "H2"])
def test_derivatives_match_finite_differences(models, name):
    H = models[name]
    rng = np.random.default_rng(0)
    q, p, t = rng.uniform(0, 1, 20), rng.uniform(-2, 2, 20), rng.uniform(0, 1, 20)
    np.testing.assert_allclose(H.dH_dp(q, p, t), fd(lambda x: H.H(q, x, t), p), atol=1e-6)
    np.testing.assert_allclose(H.dH_dq(q, p, t), fd(lambda x: H.H(x, p, t), q), atol=1e-6)
    np.testing.assert_allclose(H.dH_dt(q, p, t), fd(lambda x: H.H(q, p, x), t), atol=1e-6)
    np.testing.assert_allclose(H.d2H_dp2(q, p, t), fd(lambda x: H.dH_dp(q, x, t), p), atol=1e-5)


@pytest.mark.parametrize("name", ["free", "pendulum", "forced", "H1", "H2"])
def test_closed_form_lagrangian_matches_numeric_legendre(models, name):
    H = models[name]
    q, t = np.linspace(0, 1, 7), np.linspace(0, 1, 7)[::-1]
    for v in (-2.5, -0.3, 0.0, 1.1, 2.9):
        num = hm.legendre(H, q, v, t)
        np.testing.assert_allclose(H.lagrangian(q, v, t), num.L, atol=1e-11)
        np.testing.assert_allclose(H.momentum(q, v, t), num.p, atol=1e-11)


@settings(max_examples=60, deadline=None)
@given(q=coords, p=moms, t=coords)
def test_fenchel_young(q, p, t):
    # L(q, v, t) + H(q, p, t) >= p v, equality at v = dH/dp
    H = hm.pair_d1().H2
    v = float(H.dH_dp(q, p, t))
    assert H.lagrangian(q, v, t) + H.H(q, p, t) == pytest.approx(p * v, abs=1e-8 * max(1.0, abs(p * v)))
    for w in (v - 0.5, v + 0.5):
        assert H.lagrangian(q, w, t) + H.H(q, p, t) >= p * w - 1e-9


@settings(max_examples=40, deadline=None)
@given(q=coords, p=moms, t=coords)
def test_periodicity(q, p, t):
    H = hm.forced_pendulum()
    assert H.H(q + 1, p, t) == pytest.approx(float(H.H(q, p, t)), abs=1e-12)
    assert H.H(q, p, t + 1) == pytest.approx(float(H.H(q, p, t)), abs=1e-12)


def test_pendulum_values():
    H = hm.pendulum(1.0)
    assert H.H(0.0, 0.0, 0.3) == pytest.approx(1.0)
    assert H.H(0.5, 2.0, 0.0) == pytest.approx(1.0)
    assert H.lagrangian(0.0, 1.0, 0.0) == pytest.approx(-0.5)


@pytest.mark.parametrize(
    "coeffs",
    [(0.0, 0.0, -1.0), (0.0, 1.0), (0.0, 0.0, 0.5, 1.0), (0.0, 0.0, -3.0, 0.0, 1.0)],
)
def test_nonconvex_profiles_rejected(coeffs):
    with pytest.raises(ProfileNotConvex):
        hm.ConvexProfile(coeffs)


@settings(max_examples=50, deadline=None)
@given(v=st.floats(-50, 50, allow_nan=False))
def test_quartic_dh_inv_roundtrip(v):
    h = hm.ConvexProfile((0.0, 0.0, 0.5, 0.0, 0.25))
    p = h.dh_inv(v)
    assert float(h.d1(p)) == pytest.approx(v, abs=1e-9 * max(1.0, abs(v)))


def test_mirrored_profile():
    h = hm.ConvexProfile((0.0, 0.3, 0.5, 0.1, 0.25))
    p = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(h.mirrored()(p), h(-p))


def test_mirrored_model_is_time_and_momentum_reversal(models):
    H = models["H1"]
    Hc = H.mirrored()
    rng = np.random.default_rng(1)
    q, p, t = rng.uniform(0, 1, 30), rng.uniform(-2, 2, 30), rng.uniform(0, 1, 30)
    np.testing.assert_allclose(Hc.H(q, p, t), H.H(q, -p, -t), atol=1e-13)


def test_pair_d1_bracket_vanishes(pair):
    assert hm.bracket_defect(pair.H1, pair.H2) <= 1e-10
    assert pair.analytic_alpha() == (0.0, 0.0)


def test_control_bracket_witness():
    # P_q F_p - P_p F_q + P_t - F_t at (0.25, 1, 0): P_q = -2 pi, F_q = -3 pi,
    # P_p = F_p = 1 and both time derivatives vanish there
    P, F = hm.control_pair()
    val = float(hm.bracket(P, F, 0.25, 1.0, 0.0))
    expected = -2 * np.pi - (-3 * np.pi)
    assert val == pytest.approx(expected, abs=1e-12)
    assert abs(val) == pytest.approx(np.pi)


def test_bracket_antisymmetric(models):
    q, p, t = 0.3, 0.7, 0.1
    a = hm.bracket(models["pendulum"], models["forced"], q, p, t)
    b = hm.bracket(models["forced"], models["pendulum"], q, p, t)
    assert a == pytest.approx(-b, abs=1e-14)


@pytest.mark.parametrize("name", ["free", "pendulum", "forced", "H1", "H2"])
def test_tonelli_checks(models, name):
    assert hm.check_tonelli(models[name])["ok"]


def test_forcing_must_be_q_independent():
    with pytest.raises(ValueError):
        hm.GeneratingField(g=hm.FourierTable(((1, 0, 1.0, 0, 0, 0),)))


@pytest.mark.parametrize(
    "spec, family",
    [
        ({"family": "pendulum", "params": {"A": 2.0}}, "pendulum"),
        ({"family": "free"}, "free"),
        ({"family": "pair_d1.H2"}, "conjugated"),
        ({"family": "forced_pendulum", "params": {"A": 1.0, "eps": 0.5}}, "forced_pendulum"),
    ],
)
def test_model_from_spec(spec, family):
    assert hm.model_from_spec(spec).family == family


def test_model_spec_roundtrip(pair):
    H = hm.model_from_spec(pair.H2.to_spec())
    assert H == pair.H2


def test_unknown_family():
    with pytest.raises(ValueError):
        hm.model_from_spec({"family": "nope"})


def test_fourier_rows_validated():
    with pytest.raises(ValueError):
        hm.FourierTable(((1.5, 0, 1, 0, 0, 0),))
    with pytest.raises(ValueError):
        hm.FourierTable(((1, 0, 1, 0),))
