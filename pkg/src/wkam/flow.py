"""Extended Hamiltonian flow on ``T*(M x T)`` and its defect diagnostics.

The extended Hamiltonian is ``H~ = kappa + H(q, p, t)``.  Its flow moves
``(q, p)`` by Hamilton's equations with ``dt/ds = 1``, and ``kappa`` follows from
conservation of ``H~``: ``kappa(s) = kappa(0) + H(x(0)) - H(x(s))``.  We set
``kappa`` algebraically instead of integrating it, so ``H~`` is conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepRejected
from .grid import circle_distance


@dataclass(frozen=True)
class ExtendedState:
    q: float
    p: float
    t: float
    kappa: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", float(self.q) % 1.0)
        object.__setattr__(self, "t", float(self.t) % 1.0)
        if not math.isfinite(self.kappa):
            raise ValueError("kappa must be finite")

    def as_array(self):
        return np.array([self.q, self.p, self.t, self.kappa])


@dataclass(frozen=True)
class FlowConfig:
    step: float = 1e-3
    max_span: float = 4.0
    integrator: str = "rk4"

    def __post_init__(self):
        if not 0 < self.step <= 0.1:
            raise ValueError("step must lie in (0, 0.1]")
        if self.integrator != "rk4":
            raise ValueError(f"unsupported integrator {self.integrator!r}")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of one or many trajectories; arrays have shape ``(n_samples, n_points)``."""

    tau: np.ndarray
    q: np.ndarray
    p: np.ndarray
    t: np.ndarray
    kappa: np.ndarray

    def final(self):
        """Last sample as an ``(n_points, 4)`` array of wrapped ``(q, p, t, kappa)``."""
        return np.column_stack([self.q[-1] % 1.0, self.p[-1], self.t[-1] % 1.0, self.kappa[-1]])

    def to_csv(self, path, point=0):
        data = np.column_stack([self.tau, self.q[:, point] % 1.0, self.p[:, point], self.t[:, point] % 1.0, self.kappa[:, point]])
        np.savetxt(path, data, delimiter=",", header="tau,q,p,t,kappa", comments="", fmt="%.17g")


def _rhs(H, q, p, t):
    return H.dH_dp(q, p, t), -H.dH_dq(q, p, t)


def _rk4_step(H, q, p, t, h):
    k1q, k1p = _rhs(H, q, p, t)
    k2q, k2p = _rhs(H, q + 0.5 * h * k1q, p + 0.5 * h * k1p, t + 0.5 * h)
    k3q, k3p = _rhs(H, q + 0.5 * h * k2q, p + 0.5 * h * k2p, t + 0.5 * h)
    k4q, k4p = _rhs(H, q + h * k3q, p + h * k3p, t + h)
    dq = h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    dp = h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return q + dq, p + dp, t + h, dp


def flow_points(H, X, s, cfg=None, record=False):
    """Flow the rows ``(q, p, t, kappa)`` of ``X`` by ``phi^s`` of ``kappa + H``.

    Returns the final ``(n, 4)`` array, or a :class:`Trajectory` when ``record``.
    """
    cfg = cfg or FlowConfig()
    if abs(s) > cfg.max_span:
        raise ValueError(f"span {s} exceeds max_span {cfg.max_span}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    q, p, t, kappa0 = X[:, 0].copy(), X[:, 1].copy(), X[:, 2].copy(), X[:, 3].copy()
    energy0 = kappa0 + H.H(q, p, t)
    n = int(math.ceil(abs(s) / cfg.step - 1e-9)) if s else 0
    h = s / n if n else 0.0
    samples = [(0.0, q, p, t)] if record else None
    t0 = t
    for i in range(n):
        q, p, _, dp = _rk4_step(H, q, p, t, h)
        t = t0 + (i + 1) * h
        if np.any(np.abs(dp) > 1.0):
            raise StepRejected(f"momentum jumped by {np.abs(dp).max():.3g} in one step of size {h:g}")
        if record:
            samples.append(((i + 1) * h, q, p, t))
    if not record:
        return np.column_stack([q % 1.0, p, t % 1.0, energy0 - H.H(q, p, t)])
    tau = np.array([x[0] for x in samples])
    Q = np.array([x[1] for x in samples])
    P = np.array([x[2] for x in samples])
    T = np.array([x[3] for x in samples])
    K = energy0[None, :] - H.H(Q, P, T)
    return Trajectory(tau, Q, P, T, K)


def flow_extended(H, x0, s, cfg=None):
    """Trajectory of one :class:`ExtendedState` under the extended flow."""
    return flow_points(H, x0.as_array(), s, cfg, record=True)


def product_metric(X, Y):
    """Max of circle distances in ``q, t`` and absolute differences in ``p, kappa``, row-wise."""
    X, Y = np.atleast_2d(X), np.atleast_2d(Y)
    return np.max(
        np.column_stack(
            [
                circle_distance(X[:, 0], Y[:, 0]),
                np.abs(X[:, 1] - Y[:, 1]),
                circle_distance(X[:, 2], Y[:, 2]),
                np.abs(X[:, 3] - Y[:, 3]),
            ]
        ),
        axis=1,
    )


def commutation_defect(H1, H2, x0, s, r, cfg=None):
    """Distance between ``phi^s_1 phi^r_2 x0`` and ``phi^r_2 phi^s_1 x0`` (max over rows)."""
    X = x0.as_array() if isinstance(x0, ExtendedState) else np.asarray(x0, dtype=float)
    if s == 0 or r == 0:
        return 0.0
    a = flow_points(H1, flow_points(H2, X, r, cfg), s, cfg)
    b = flow_points(H2, flow_points(H1, X, s, cfg), r, cfg)
    return float(np.max(product_metric(a, b)))


def conservation_defect(H1, H2, x0, s, cfg=None):
    """``max |H~2(x(tau)) - H~2(x0)|`` along the ``H~1`` trajectory from ``x0``."""
    X = x0.as_array() if isinstance(x0, ExtendedState) else np.asarray(x0, dtype=float)
    tr = flow_points(H1, X, s, cfg, record=True)
    e2 = tr.kappa + H2.H(tr.q, tr.p, tr.t)
    return float(np.max(np.abs(e2 - e2[0][None, :])))


def aubry_invariance_check(H1, H2, lift, s, cfg=None):
    """Push the lift of ``H1`` by ``phi^s`` of ``H~2``; max distance to the nearest lift point."""
    pts = lift.points()
    if s == 0 or len(pts) == 0:
        return 0.0
    moved = flow_points(H2, pts, s, cfg)
    worst = 0.0
    for x in moved:
        worst = max(worst, float(np.min(product_metric(np.broadcast_to(x, pts.shape), pts))))
    return worst
