import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wkam.critical_value import alpha_growth, alpha_karp, min_mean_cycle
from wkam.errors import NonFiniteKernel
from wkam.grid import BIG


def brute_min_cycle_mean(K):
    """Minimum mean over simple cycles, by enumeration (small n only)."""
    n = K.shape[0]
    best = np.inf
    for length in range(1, n + 1):
        for cyc in itertools.permutations(range(n), length):
            if cyc[0] != min(cyc):
                continue
            w = sum(K[cyc[i], cyc[(i + 1) % length]] for i in range(length))
            best = min(best, w / length)
    return best


@settings(max_examples=40, deadline=None)
@given(K=arrays(np.float64, (4, 4), elements=st.floats(-3, 3, allow_nan=False)))
def test_karp_matches_cycle_enumeration(K):
    lam, node, _ = min_mean_cycle(K)
    assert lam == pytest.approx(brute_min_cycle_mean(K), abs=1e-12)
    assert 0 <= node < 4


def test_known_cycle():
    K = np.array([[5.0, 1.0, 9.0], [9.0, 5.0, 1.0], [-1.0, 9.0, 5.0]])
    assert min_mean_cycle(K)[0] == pytest.approx(1 / 3)


def test_unreachable_kernel_rejected():
    K = np.zeros((3, 3))
    K[0, 1] = BIG
    with pytest.raises(NonFiniteKernel):
        min_mean_cycle(K)
    with pytest.raises(ValueError):
        min_mean_cycle(np.zeros((2, 3)))


def test_free_alpha_is_exactly_zero(models, make_op):
    # the zero-velocity self loop costs exactly 0 and every cycle costs >= 0
    op = make_op(models["free"], 32, 8)
    assert alpha_karp(op.period_kernel()).value == 0.0


@pytest.mark.parametrize("name, expected", [("pendulum", 1.0), ("H1", 0.0), ("H2", 0.0)])
def test_alpha_values_coarse(models, make_op, name, expected):
    op = make_op(models[name], 32, 8)
    assert alpha_karp(op.period_kernel()).value == pytest.approx(expected, abs=5e-3)


@pytest.mark.parametrize("name", ["pendulum", "forced", "H2"])
def test_karp_base_slice_invariance(models, make_op, name):
    op = make_op(models[name], 32, 8)
    base = alpha_karp(op.period_kernel(0).matrix).value
    for k in range(1, 8):
        assert alpha_karp(op.period_kernel(k).matrix).value == pytest.approx(base, abs=1e-12)


@pytest.mark.parametrize("name", ["pendulum", "forced"])
def test_growth_agrees_with_karp(models, make_op, name):
    op = make_op(models[name], 32, 8)
    k = alpha_karp(op.period_kernel()).value
    g = alpha_growth(op, 120, 40).value
    assert abs(k - g) <= 1e-3


def test_estimators_refuse_normalised_inputs(models, make_op):
    op = make_op(models["pendulum"], 32, 8, normalized=True)
    with pytest.raises(ValueError):
        alpha_karp(op.period_kernel())
    with pytest.raises(ValueError):
        alpha_growth(op)
    raw = make_op(models["pendulum"], 32, 8)
    with pytest.raises(ValueError):
        alpha_karp(raw.kernel(0, 3))
    with pytest.raises(ValueError):
        alpha_growth(raw, 10, 10)


def test_normalised_kernel_has_zero_eigenvalue(models, make_op):
    op = make_op(models["forced"], 32, 8, normalized=True)
    assert min_mean_cycle(op.period_kernel().matrix)[0] == pytest.approx(0.0, abs=1e-12)
