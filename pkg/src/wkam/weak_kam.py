"""Weak KAM solutions as fixed points of the normalised period map.

Time-periodic Lax-Oleinik iterates need not converge, so fixed points are
built from a liminf surrogate: the pointwise minimum over the last ``window``
period iterates (maximum for the forward direction), confirmed by one more
application of the period map.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, WrapMismatch
from .grid import GridFunction, SpaceTimeFunction, unreachable


@dataclass(frozen=True)
class FixedPointConfig:
    window: int = 10
    burn_in: int = 50
    max_iters: int = 2000
    tol: float = 1e-9
    anchor: int | None = 0


@dataclass(frozen=True, eq=False)
class WeakKamSolution:
    phi: SpaceTimeFunction
    alpha: float
    direction: str
    residual: float
    anchor: int | None
    iterations: int
    offset: float = 0.0
    wrap_residual: float = 0.0
    velocity: np.ndarray | None = None
    history: list = field(default_factory=list)

    @property
    def grid(self):
        return self.phi.grid

    def initial(self):
        """Slice 0 as a grid function."""
        return self.phi.slice(0)

    def raw(self):
        """Slice 0 before anchoring."""
        return self.phi.values[0] + self.offset

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "direction": self.direction,
            "residual": self.residual,
            "wrap_residual": self.wrap_residual,
            "anchor": self.anchor,
            "iterations": self.iterations,
        }


@dataclass(frozen=True, eq=False)
class ConjugatePair:
    minus: WeakKamSolution
    plus: WeakKamSolution
    equality: np.ndarray
    eps: float

    def gap(self):
        return self.minus.phi.values - self.plus.phi.values


def _liminf_fixed_point(period_map, u0, cfg, sign):
    """Window-min (sign=+1) or window-max (sign=-1) fixed point of ``period_map``."""
    u = np.asarray(u0, dtype=float)
    recent = deque(maxlen=cfg.window)
    history = []
    for n in range(1, cfg.max_iters + 1):
        u = period_map(u)
        recent.append(u)
        if n < max(cfg.burn_in, cfg.window):
            continue
        cand = sign * np.min(sign * np.array(recent), axis=0)
        r = float(np.max(np.abs(period_map(cand) - cand)))
        history.append(r)
        if r <= cfg.tol:
            return cand, r, n, history
    last = f"last residual {history[-1]:.3e}" if history else "window never filled"
    raise NoConvergence(f"no fixed point within {cfg.max_iters} periods ({last})", history)


def backward_fixed_point(op, u0=None, cfg=None):
    """Backward weak KAM solution of the normalised operator ``op``.

    ``op`` must carry the critical value as its ``alpha_shift``.  The result is
    extended over one period of slices and anchored so that ``phi(q_anchor, 0) = 0``.
    """
    cfg = cfg or FixedPointConfig()
    u0 = np.zeros(op.grid.n_q) if u0 is None else _vals(u0)
    u, r, n, hist = _liminf_fixed_point(op.period_map, u0, cfg, +1)
    offset = float(u[cfg.anchor]) if cfg.anchor is not None else 0.0
    sol = extend_in_time(op, GridFunction(op.grid, 0, u - offset), tol=max(cfg.tol, r))
    return WeakKamSolution(
        sol.phi, op.alpha_shift, "backward", r, cfg.anchor, n, offset, sol.wrap_residual, sol.velocity, hist
    )


def extend_in_time(op, u_star, tol=1e-9):
    """``phi(., t_k) = T-_{0,k} u*``; slice ``n_t`` must reproduce slice 0 within ``tol``.

    ``velocity[k, j]`` is the minimising velocity of the step arriving at ``(q_j, t_k)``.
    """
    g = op.grid
    vals = np.empty((g.n_t, g.n_q))
    vel = np.empty((g.n_t, g.n_q))
    u = _vals(u_star)
    vals[0] = u
    cur = GridFunction(g, 0, u)
    for k in range(g.n_t):
        res = op.step(cur, check_boundary=False)
        vel[(k + 1) % g.n_t] = res.velocity
        cur = res.value
        if k + 1 < g.n_t:
            vals[k + 1] = cur.values
    wrap = float(np.max(np.abs(cur.values - u)))
    if wrap > tol:
        raise WrapMismatch(f"slice n_t differs from slice 0 by {wrap:.3e} (tol {tol:.1e})")
    phi = SpaceTimeFunction(g, vals)
    return WeakKamSolution(phi, op.alpha_shift, "backward", wrap, None, 0, 0.0, wrap, vel)


def forward_fixed_point(op, u0=None, cfg=None):
    """Forward weak KAM solution: window-max fixed point of the ``T+`` period map."""
    cfg = cfg or FixedPointConfig()
    u0 = np.zeros(op.grid.n_q) if u0 is None else _vals(u0)
    u, r, n, hist = _liminf_fixed_point(op.forward_period_map, u0, cfg, -1)
    offset = float(u[cfg.anchor]) if cfg.anchor is not None else 0.0
    sol = extend_forward(op, u - offset, tol=max(cfg.tol, r))
    return WeakKamSolution(
        sol.phi, op.alpha_shift, "forward", r, cfg.anchor, n, offset, sol.wrap_residual, sol.velocity, hist
    )


def extend_forward(op, u_star, tol=1e-9):
    """``phi(., t_k) = T+_{k,n_t} u*``; ``velocity[k, j]`` leaves ``(q_j, t_k)``."""
    g = op.grid
    vals = np.empty((g.n_t, g.n_q))
    vel = np.empty((g.n_t, g.n_q))
    u = _vals(u_star)
    cur = GridFunction(g, 0, u)
    for k in range(g.n_t - 1, -1, -1):
        res = op.forward_step(cur)
        vel[k] = res.velocity
        cur = res.value
        if k > 0:
            vals[k] = cur.values
    vals[0] = u
    wrap = float(np.max(np.abs(cur.values - u)))
    if wrap > tol:
        raise WrapMismatch(f"forward slice 0 differs from its period image by {wrap:.3e} (tol {tol:.1e})")
    return WeakKamSolution(SpaceTimeFunction(g, vals), op.alpha_shift, "forward", wrap, None, 0, 0.0, wrap, vel)


def conjugate_pair(op, phi_minus, eps, cfg=None):
    """Forward solution grown from ``phi_minus`` and the set where the two agree.

    No anchoring is applied to the forward member, so ``phi_minus - phi_plus`` is
    meaningful; it is non-negative and vanishes on the Aubry set.
    """
    cfg = cfg or FixedPointConfig()
    u, r, n, hist = _liminf_fixed_point(op.forward_period_map, phi_minus.phi.values[0], cfg, -1)
    sol = extend_forward(op, u, tol=max(cfg.tol, r))
    plus = WeakKamSolution(sol.phi, op.alpha_shift, "forward", r, None, n, 0.0, sol.wrap_residual, sol.velocity, hist)
    equality = np.abs(phi_minus.phi.values - plus.phi.values) <= eps
    return ConjugatePair(phi_minus, plus, equality, eps)


@dataclass(frozen=True)
class CommonFixedPoint:
    u: np.ndarray
    residual_1: float
    residual_2: float
    iterations: int


def common_fixed_point(op1, op2, cfg=None):
    """Fixed point of ``op1``'s period map, then the liminf of ``op2``'s iterates from it.

    For commuting Hamiltonians the result is (up to discretisation) fixed by both.
    """
    cfg = cfg or FixedPointConfig()
    u1, _, n1, _ = _liminf_fixed_point(op1.period_map, np.zeros(op1.grid.n_q), cfg, +1)
    u, _, n2, _ = _liminf_fixed_point(op2.period_map, u1, cfg, +1)
    r1 = float(np.max(np.abs(op1.period_map(u) - u)))
    r2 = float(np.max(np.abs(op2.period_map(u) - u)))
    return CommonFixedPoint(u, r1, r2, n1 + n2)


def period_residual(op, u):
    """``sup |T u - u|`` for the one-period map of ``op``."""
    u = _vals(u)
    return float(np.max(np.abs(op.period_map(u) - u)))


def domination_residual(phi, op):
    """``max [phi(end) - phi(start) - K(start, end)]`` over node pairs and all
    slice pairs up to one period apart; ``<= 0`` means ``phi`` is dominated."""
    g = phi.grid
    worst = -np.inf
    n = g.n_q
    for k1 in range(g.n_t):
        K = np.full((n, n), 1e12)
        np.fill_diagonal(K, 0.0)
        start = phi.values[k1]
        for s in range(1, g.n_t + 1):
            K, _ = op.push(K, k1 + s - 1, k1 + s)
            end = phi.values[(k1 + s) % g.n_t]
            d = end[None, :] - start[:, None] - K
            d[unreachable(K)] = -np.inf
            worst = max(worst, float(np.max(d)))
    return worst


def _vals(u):
    return u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=float)
