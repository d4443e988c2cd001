import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkam import barriers as br
from wkam import weak_kam as wk
from wkam.errors import EmptyMask, WindowNotSettled
from wkam.grid import SpaceTimeFunction, TorusGrid

B_QUARTER = 0.372923  # analytic pendulum(1) barrier at q = 1/4


def brute_h(op, k1, k2, n_min, n_max):
    """Window minimum over individual kernels spanning ``(k2 - k1) mod n_t + n n_t`` steps."""
    nt = op.grid.n_t
    base = (k2 - k1) % nt
    out = None
    for n in range(n_min, n_max + 1):
        K = op.kernel(k1, k1 + base + n * nt).matrix
        out = K if out is None else np.minimum(out, K)
    return out


@pytest.fixture(scope="module")
def small(models, make_op):
    op = make_op(models["forced"], 16, 4, normalized=True)
    return op, br.peierls_barrier(op, 2, 5, strict=False)


@pytest.mark.parametrize("k1, k2", [(0, 0), (1, 3), (3, 1), (2, 2), (3, 0)])
def test_family_matches_individual_kernels(small, k1, k2):
    op, fam = small
    np.testing.assert_allclose(fam.h(k1, k2), brute_h(op, k1, k2, 2, 5), atol=1e-12)


def test_diagonal_is_kernel_diagonal(small):
    op, fam = small
    B = fam.diagonal()
    for k in range(op.grid.n_t):
        np.testing.assert_allclose(B.values[k], np.diag(fam.h(k, k)), atol=1e-12)


def test_second_barrier_matches_definition(small):
    op, fam = small
    B = fam.diagonal()
    mask = br.aubry_mask(B, eps=B.values.min() + 1e-3)
    b = br.second_barrier(fam, mask)
    nodes = mask.nodes()
    g = op.grid
    for k in range(g.n_t):
        for j in range(0, g.n_q, 5):
            ref = min(
                fam.h(k1, k)[j1, j] + fam.h(k, k2)[j, j2] - fam.h(k1, k2)[j1, j2]
                for k1, j1 in nodes
                for k2, j2 in nodes
            )
            assert b.values[k, j] == pytest.approx(ref, abs=1e-12)


def test_pseudometric_symmetric_and_zero_on_diagonal_masks(small):
    op, fam = small
    B = fam.diagonal()
    mask = br.aubry_mask(B, eps=B.values.min() + 1e-3)
    rho, nodes = br.pseudometric(fam, mask)
    np.testing.assert_allclose(rho, rho.T)
    np.testing.assert_allclose(np.diag(rho), [2 * B.values[k, j] for k, j in nodes], atol=1e-12)


def test_mane_potential_below_barrier(small):
    op, _ = small
    fam = br.peierls_barrier(op, 2, 5, strict=False)
    mp = br.mane_potential(op, 5)
    for k1, k2 in [(0, 0), (1, 3), (3, 1)]:
        assert np.all(mp.h(k1, k2) <= fam.h(k1, k2) + 1e-12)
    assert np.all(np.diag(mp.h(2, 2)) <= 0.0)


def test_window_not_settled(small):
    op, _ = small
    with pytest.raises(WindowNotSettled):
        br.peierls_barrier(op, 1, 2, tol=1e-300)
    with pytest.raises(ValueError):
        br.peierls_barrier(op, 5, 5)


def test_empty_mask():
    g = TorusGrid(8, 4)
    with pytest.raises(EmptyMask):
        br.aubry_mask(SpaceTimeFunction(g, np.ones((4, 8))))


@pytest.fixture(scope="module")
def pendulum(models, make_op):
    op = make_op(models["pendulum"], 64, 16, normalized=True)
    fam = br.peierls_barrier(op, strict=False)
    B = fam.diagonal()
    mask = br.aubry_mask(B)
    return op, fam, B, mask


def test_pendulum_barrier(pendulum):
    op, fam, B, mask = pendulum
    g = op.grid
    assert fam.settled
    assert abs(B.values[0, g.n_q // 4] - B_QUARTER) / B_QUARTER <= 0.05
    assert B.values.min() >= -1e-12
    np.testing.assert_array_equal(mask.columns(), [0])
    assert mask.count == g.n_t


def test_pendulum_second_barrier_and_quotient(pendulum):
    op, fam, B, mask = pendulum
    g = op.grid
    b = br.second_barrier(fam, mask)
    assert np.max(np.abs(b.values[mask.mask])) <= mask.eps
    assert abs(b.values[0, g.n_q // 4] - B_QUARTER) / B_QUARTER <= 0.05
    quo = br.quotient_aubry(fam, mask)
    assert quo.count == 1
    assert quo.diameters[0] <= 2 * quo.eps


def test_pendulum_lift(pendulum):
    op, fam, B, mask = pendulum
    H = op.H
    vel = br.loop_velocities(fam, mask)
    np.testing.assert_array_equal(vel[mask.mask], 0.0)
    assert np.all(np.isnan(vel[~mask.mask]))
    lift = br.extended_lift(mask, H, 1.0, vel, H2=H)
    assert len(lift) == mask.count
    np.testing.assert_allclose(lift.kappa + H.H(lift.q, lift.p, lift.t), 1.0, atol=1e-12)
    np.testing.assert_allclose(lift.h2_tilde, 1.0, atol=1e-12)
    np.testing.assert_allclose(lift.p, 0.0, atol=1e-12)


def test_barrier_field_and_backward_solution_agree_on_mask(pendulum):
    op, fam, B, mask = pendulum
    field, m = br.barrier_field(fam, mask)
    assert m is mask and field.settled
    sol = wk.backward_fixed_point(op)
    pair = wk.conjugate_pair(op, sol, mask.eps)
    assert np.max(np.abs(pair.gap()[mask.mask])) <= mask.eps


def test_mask_csv(pendulum, tmp_path):
    *_, mask = pendulum
    mask.to_csv(tmp_path / "m.csv")
    data = np.loadtxt(tmp_path / "m.csv", delimiter=",", skiprows=1, dtype=int)
    assert data.shape == (mask.grid.n_t * mask.grid.n_q, 3)
    assert data[:, 2].sum() == mask.count


def _mask(cols, g=TorusGrid(8, 4)):
    m = np.zeros((g.n_t, g.n_q), dtype=bool)
    m[:, cols] = True
    return br.AubryMask(m, 0.0, g)


@pytest.mark.parametrize(
    "a, b, expected",
    [([0], [0], True), ([0], [0, 1], True), ([0], [2], False), ([0, 1], [1, 2], True), ([0], [7], True), ([0], [4], False)],
)
def test_boundary_only(a, b, expected):
    assert br.boundary_only(_mask(a), _mask(b)) is expected


pts = st.lists(st.tuples(*[st.floats(0, 1, allow_nan=False)] * 4), min_size=1, max_size=6)


@settings(max_examples=40, deadline=None)
@given(X=pts, Y=pts)
def test_hausdorff_properties(X, Y):
    X, Y = np.array(X), np.array(Y)
    d = br.hausdorff(X, Y)
    assert d == pytest.approx(br.hausdorff(Y, X))
    assert br.hausdorff(X, X) == 0.0
    assert d >= 0


def test_hausdorff_uses_circle_distance():
    X = np.array([[0.01, 0.0, 0.99, 0.0]])
    Y = np.array([[0.99, 0.0, 0.01, 0.0]])
    assert br.hausdorff(X, Y) == pytest.approx(0.02)
    assert br.hausdorff(X, np.empty((0, 4))) == np.inf


def test_thresholds():
    g = TorusGrid(64, 16)
    assert br.default_eps(g) == pytest.approx(2 / 64**2)
    assert br.link_eps(g) == pytest.approx(5 * (1 / 64 + 1 / 16))
