"""Discrete Lax-Oleinik operators as min-plus linear maps on grid nodes.

One time step moves from node ``i`` at slice ``k`` to node ``i + m`` at slice
``k + 1`` with velocity ``v_m = m dq / dt``, ``|v_m| <= vmax``.  Its cost is the
trapezoid rule for the Lagrangian along the straight segment,

    c_k(i, m) = dt/2 [L(q_i, v_m, t_k) + L(q_i + m dq, v_m, t_{k+1})] + alpha_shift dt,

so every operator is a min-plus matrix product and the Markov property,
contraction, order preservation and constant equivariance hold exactly.
Departure points are always nodes; no interpolation enters the scheme.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import BoundaryArgmin, SliceMismatch
from .grid import BIG, GridFunction, TorusGrid, unreachable


@dataclass(frozen=True)
class OperatorConfig:
    """Velocity bound, critical-value shift and quadrature rule of the scheme."""

    vmax: float = 3.0
    alpha_shift: float = 0.0
    quadrature: str = "trapezoid"

    def __post_init__(self):
        if not self.vmax > 0:
            raise ValueError("vmax must be positive")
        if self.quadrature not in ("trapezoid", "rectangle"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")

    def half_width(self, grid):
        """Largest node displacement per step, ``M``; the lattice has ``2M + 1`` velocities."""
        M = int(np.floor(self.vmax * grid.n_q / grid.n_t + 1e-9))
        if M < 2:
            raise ValueError(
                f"vmax={self.vmax} gives fewer than 5 velocities on grid ({grid.n_q}, {grid.n_t}); "
                "raise vmax or refine n_q"
            )
        return M

    def n_v(self, grid):
        return 2 * self.half_width(grid) + 1

    def with_alpha(self, alpha):
        return replace(self, alpha_shift=float(alpha))


def velocity_lattice(grid, M):
    return np.arange(-M, M + 1) * grid.n_t / grid.n_q


def step_cost_table(H, grid, cfg):
    """Array ``(n_t, n_q, 2M+1)`` of one-step costs including the alpha shift."""
    M = cfg.half_width(grid)
    m = np.arange(-M, M + 1)
    v = velocity_lattice(grid, M)[None, None, :]
    k = np.arange(grid.n_t)[:, None, None]
    q0 = grid.q[None, :, None]
    t0 = k / grid.n_t
    dt = grid.dt
    if cfg.quadrature == "rectangle":
        cost = dt * H.lagrangian(q0, v, t0)
    else:
        q1 = q0 + m[None, None, :] * grid.dq
        t1 = (k + 1) / grid.n_t
        cost = 0.5 * dt * (H.lagrangian(q0, v, t0) + H.lagrangian(q1, v, t1))
    cost = np.broadcast_to(cost, (grid.n_t, grid.n_q, 2 * M + 1))
    return np.ascontiguousarray(cost + cfg.alpha_shift * dt)


@dataclass(frozen=True, eq=False)
class ActionKernel:
    """Minimal discrete actions ``K[i, j]`` from ``(q_i, t_k1)`` to ``(q_j, t_k1 + m dt)``."""

    grid: TorusGrid
    k1: int
    k2: int
    matrix: np.ndarray
    alpha_shift: float = 0.0

    @property
    def m(self):
        return self.k2 - self.k1

    @classmethod
    def identity(cls, grid, k=0, alpha_shift=0.0):
        K = np.full((grid.n_q, grid.n_q), BIG)
        np.fill_diagonal(K, 0.0)
        return cls(grid, k, k, K, alpha_shift)

    def apply(self, u):
        """Min-plus action on a grid function: ``out[j] = min_i u[i] + K[i, j]``."""
        if u.grid != self.grid or (u.k - self.k1) % self.grid.n_t:
            raise SliceMismatch("function does not sit on the kernel's start slice")
        return GridFunction(self.grid, self.k2 % self.grid.n_t, kernels.minplus_vecmat(u.values, self.matrix))

    def shifted(self, c):
        return ActionKernel(self.grid, self.k1, self.k2, self.matrix + c, self.alpha_shift)

    def to_csv(self, path, sidecar=None, cfg=None):
        n = self.grid.n_q
        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        data = np.column_stack([ii.ravel(), jj.ravel(), self.matrix.ravel()])
        np.savetxt(path, data, delimiter=",", header="i,j,value", comments="", fmt=["%d", "%d", "%.17g"])
        if sidecar is not None:
            meta = {
                "N_q": self.grid.n_q,
                "N_t": self.grid.n_t,
                "k1": self.k1,
                "k2": self.k2,
                "m": self.m,
                "alpha_shift": self.alpha_shift,
            }
            if cfg is not None:
                meta.update(Vmax=cfg.vmax, N_v=cfg.n_v(self.grid))
            with open(sidecar, "w") as fh:
                json.dump(meta, fh, indent=2, sort_keys=True)


@dataclass(frozen=True)
class StepResult:
    value: GridFunction
    velocity: np.ndarray


@dataclass(eq=False)
class LaxOleinik:
    """Discrete Lax-Oleinik operators of one Hamiltonian on one grid.

    Holds the precomputed one-step cost table; cheap to apply repeatedly.
    """

    H: object
    grid: TorusGrid
    cfg: OperatorConfig = field(default_factory=OperatorConfig)

    def __post_init__(self):
        self.M = self.cfg.half_width(self.grid)
        self.costs = step_cost_table(self.H, self.grid, self.cfg)
        self.velocities = velocity_lattice(self.grid, self.M)
        self._period = {}

    @property
    def alpha_shift(self):
        return self.cfg.alpha_shift

    def normalized(self, alpha):
        """Same operator with ``alpha`` added to the Lagrangian (reuses the cost table)."""
        op = object.__new__(LaxOleinik)
        op.H, op.grid, op.cfg = self.H, self.grid, self.cfg.with_alpha(alpha)
        op.M, op.velocities = self.M, self.velocities
        op.costs = self.costs + (alpha - self.cfg.alpha_shift) * self.grid.dt
        op._period = {}
        return op

    def cost(self, k):
        return self.costs[k % self.grid.n_t]

    # ---- backward (T-) direction

    def push(self, U, k1, k2):
        """Apply backward steps ``k1 -> k2`` to every row of ``U``."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        arg = None
        for k in range(k1, k2):
            U, arg = kernels.push_rows(U, self.cost(k), self.M)
        return U, arg

    def step(self, u, check_boundary=True):
        out, arg = kernels.push_rows(u.values[None, :], self.cost(u.k), self.M)
        vel = self.velocities[arg[0]]
        if check_boundary:
            live = ~unreachable(out[0])
            if np.any(np.abs(arg[0][live] - self.M) == self.M):
                warnings.warn(
                    f"minimising velocity reached the lattice bound vmax={self.cfg.vmax}", BoundaryArgmin, stacklevel=2
                )
        return StepResult(GridFunction(self.grid, (u.k + 1) % self.grid.n_t, out[0]), vel)

    def backward(self, u, k2, k1=None):
        k1 = u.k if k1 is None else k1
        if (k1 - u.k) % self.grid.n_t:
            raise SliceMismatch(f"function is at slice {u.k}, not {k1}")
        if k2 < k1:
            raise ValueError("backward operator needs k2 >= k1")
        out, _ = self.push(u.values, k1, k2)
        return GridFunction(self.grid, k2 % self.grid.n_t, out[0])

    # ---- forward (T+) direction

    def pull(self, X, k1, k2):
        """Left-multiply column block ``X`` (at slice ``k2``) by the steps ``k1 -> k2``."""
        X = np.asarray(X, dtype=float)
        arg = None
        for k in range(k2 - 1, k1 - 1, -1):
            X, arg = kernels.pull_rows(X, self.cost(k), self.M)
        return X, arg

    def forward_step(self, u):
        """One step of ``T+`` from slice ``u.k`` back to ``u.k - 1``."""
        k = (u.k - 1) % self.grid.n_t
        out, arg = kernels.pull_rows(-u.values[:, None], self.cost(k), self.M)
        return StepResult(GridFunction(self.grid, k, -out[:, 0]), self.velocities[arg[:, 0]])

    def forward(self, u, k1, k2=None):
        """``T+`` from slice ``k2`` (default: the first slice at or after ``k1`` matching ``u.k``) to ``k1``."""
        if k2 is None:
            k2 = k1 + (u.k - k1) % self.grid.n_t
        if (k2 - u.k) % self.grid.n_t:
            raise SliceMismatch(f"function is at slice {u.k}, not {k2}")
        if k2 < k1:
            raise ValueError("forward operator needs k2 >= k1")
        out, _ = self.pull(-u.values[:, None], k1, k2)
        return GridFunction(self.grid, k1 % self.grid.n_t, -out[:, 0])

    # ---- kernels

    def kernel(self, k1, k2):
        if k2 <= k1:
            raise ValueError("action kernel needs k2 > k1")
        K0 = ActionKernel.identity(self.grid, k1).matrix
        K, _ = self.push(K0, k1, k2)
        return ActionKernel(self.grid, k1, k2, K, self.alpha_shift)

    def period_kernel(self, k=0):
        k = k % self.grid.n_t
        if k not in self._period:
            self._period[k] = self.kernel(k, k + self.grid.n_t)
        return self._period[k]

    def period_map(self, values, k=0):
        """One full period of ``T-`` starting at slice ``k`` on a value array (or row block)."""
        out, _ = self.push(values, k, k + self.grid.n_t)
        return out if np.ndim(values) == 2 else out[0]

    def forward_period_map(self, values, k=0):
        out, _ = self.pull(-np.asarray(values, dtype=float)[:, None], k, k + self.grid.n_t)
        return -out[:, 0]


# ------------------------------------------------------------ module API


def backward_step(op, u):
    return op.step(u)


def backward_operator(op, u, k2, k1=None):
    return op.backward(u, k2, k1)


def forward_operator(op, u, k1, k2=None):
    return op.forward(u, k1, k2)


def action_kernel(op, k1, k2):
    return op.kernel(k1, k2)


def minplus_product(A, B):
    return kernels.minplus_matmul(A, B)


def minplus_compose(K1, K2):
    """Kernel of the composed evolution: first ``K1``, then ``K2``."""
    if K1.grid != K2.grid:
        raise SliceMismatch("kernels live on different grids")
    if (K1.k2 - K2.k1) % K1.grid.n_t:
        raise SliceMismatch(f"K1 ends at slice {K1.k2}, K2 starts at {K2.k1}")
    if K1.alpha_shift != K2.alpha_shift:
        raise ValueError("cannot compose kernels with different alpha shifts")
    m2 = K2.k2 - K2.k1
    return ActionKernel(K1.grid, K1.k1, K1.k2 + m2, kernels.minplus_matmul(K1.matrix, K2.matrix), K1.alpha_shift)
