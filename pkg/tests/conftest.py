"""Shared fixtures: models and operators are expensive enough to build once per session."""

import os

import numpy as np
import pytest

from wkam import hamiltonian as hm
from wkam.critical_value import alpha_karp
from wkam.grid import TorusGrid
from wkam.lax_oleinik import LaxOleinik, OperatorConfig

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


@pytest.fixture(scope="session")
def pair():
    return hm.pair_d1()


@pytest.fixture(scope="session")
def small_grid():
    return TorusGrid(16, 4)


@pytest.fixture(scope="session")
def models(pair):
    return {
        "free": hm.free(),
        "pendulum": hm.pendulum(1.0),
        "forced": hm.forced_pendulum(1.0, 0.5),
        "H1": pair.H1,
        "H2": pair.H2,
    }


_OPS = {}


def operator(H, n_q, n_t, vmax=3.0, normalized=False):
    """Cached operator factory; normalised operators carry their Karp critical value."""
    key = (H, n_q, n_t, vmax, normalized)
    if key not in _OPS:
        op = LaxOleinik(H, TorusGrid(n_q, n_t), OperatorConfig(vmax=vmax))
        if normalized:
            op = op.normalized(alpha_karp(op.period_kernel()).value)
        _OPS[key] = op
    return _OPS[key]


@pytest.fixture(scope="session")
def make_op():
    return operator


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def config_path(name):
    return os.path.abspath(os.path.join(CONFIGS, name))


# acceptance criterion -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def record_criterion(number, title, checks):
    """Store and print one pass/fail line for an acceptance criterion.

    ``checks`` is a list of ``(name, passed, detail)``; the criterion passes when all do.
    """
    failed = [f"{name} ({detail})" for name, ok, detail in checks if not ok]
    ok = not failed
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}"
    if failed:
        line += ": " + "; ".join(failed)
    ACCEPTANCE[number] = line
    print(line)
    for name, passed, detail in checks:
        print(f"    {'ok ' if passed else 'BAD'} {name}: {detail}")
    return ok, failed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
