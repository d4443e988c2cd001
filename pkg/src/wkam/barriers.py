"""Peierls barriers, Mañé potential, Aubry masks, quotient classes and extended lifts.

Every kernel of the barrier family is assembled from three pieces of the
normalised one-period dynamics:

* ``A[k]``: steps from slice ``k`` to the end of the period (``A[0]`` is the full period),
* ``R[k]``: steps from the start of the period to slice ``k`` (``R[0]`` is the identity),
* ``W``: the min-plus sum of period powers ``P^m`` over the horizon window.

Min-plus products distribute over min, so ``h(k1, k2) = A[k1] W R[k2]`` is the
window minimum over all horizons without ever forming the individual kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import EmptyMask, WindowNotSettled
from .grid import BIG, SpaceTimeFunction, circle_distance, unreachable

DEFAULT_C_EPS = 2.0
DEFAULT_C_LINK = 5.0


def _identity(n):
    eye = np.full((n, n), BIG)
    np.fill_diagonal(eye, 0.0)
    return eye


def _period_pieces(op):
    g = op.grid
    n = g.n_q
    A = [None] * (g.n_t + 1)
    A[g.n_t] = _identity(n)
    for k in range(g.n_t - 1, -1, -1):
        A[k], _ = op.pull(A[k + 1], k, k + 1)
    R = [_identity(n)]
    for k in range(g.n_t - 1):
        nxt, _ = op.push(R[k], k, k + 1)
        R.append(nxt)
    return A[: g.n_t], R


def _window(P, lo, hi):
    """``min_{lo <= m <= hi} P^m`` and the same minimum without its last term."""
    n = P.shape[0]
    power = _identity(n)
    acc = np.full((n, n), np.inf)
    prev = acc
    for m in range(hi + 1):
        if m > 0:
            power = kernels.minplus_matmul(power, P)
        if m >= lo:
            prev = acc
            acc = np.minimum(acc, power)
    return acc, prev


def _change(new, old):
    live = ~unreachable(new) & np.isfinite(old) & ~unreachable(old)
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(new[live] - old[live])))


@dataclass(eq=False)
class KernelFamily:
    """Window-minimised kernels ``h(k1, k2)`` between slices of one period.

    ``W_same`` serves ``k2 >= k1`` and ``W_wrap`` serves ``k2 < k1``; the extra
    start-to-end segment ``direct`` (Mañé potential only) covers the zero-period horizon.
    """

    op: object
    A: list
    R: list
    W_same: np.ndarray
    W_wrap: np.ndarray
    window: tuple
    change: float
    W_same_prev: np.ndarray | None = None
    W_wrap_prev: np.ndarray | None = None
    include_direct: bool = False
    tol: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def grid(self):
        return self.op.grid

    @property
    def settled(self):
        return self.change <= self.tol

    def _W(self, k1, k2, prev=False):
        if k2 >= k1:
            return self.W_same_prev if prev else self.W_same
        return self.W_wrap_prev if prev else self.W_wrap

    def h(self, k1, k2):
        """Kernel from slice ``k1`` to slice ``k2`` (both taken mod ``n_t``)."""
        g = self.grid
        k1, k2 = k1 % g.n_t, k2 % g.n_t
        key = (k1, k2)
        if key not in self._cache:
            M = kernels.minplus_matmul(kernels.minplus_matmul(self.A[k1], self._W(k1, k2)), self.R[k2])
            if self.include_direct and k2 >= k1:
                direct = _identity(g.n_q) if k2 == k1 else self.op.kernel(k1, k2).matrix
                M = np.minimum(M, direct)
            self._cache[key] = M
        return self._cache[key]

    def still_decreasing(self, k1, k2):
        """Entries lowered by the longest horizon in the window."""
        k1, k2 = k1 % self.grid.n_t, k2 % self.grid.n_t
        old = kernels.minplus_matmul(kernels.minplus_matmul(self.A[k1], self._W(k1, k2, True)), self.R[k2])
        if self.include_direct and k2 >= k1:
            direct = _identity(self.grid.n_q) if k2 == k1 else self.op.kernel(k1, k2).matrix
            old = np.minimum(old, direct)
        return self.h(k1, k2) < old

    def diagonal(self):
        """``B(q_j, t_k) = h(k, k)[j, j]`` without forming the full kernels."""
        g = self.grid
        B = np.empty((g.n_t, g.n_q))
        for k in range(g.n_t):
            X = kernels.minplus_matmul(self.A[k], self.W_same)
            B[k] = np.min(X + self.R[k].T, axis=1)
        return SpaceTimeFunction(g, B)


def peierls_barrier(op, n_min=8, n_max=24, tol=1e-6, strict=True):
    """Barrier kernels ``h`` as the window minimum over ``n in [n_min, n_max]`` periods.

    ``op`` is the normalised operator.  A kernel from slice ``k1`` to ``k2`` spans
    ``(k2 - k1) mod n_t + n n_t`` steps.  Raises WindowNotSettled when adding the
    longest horizon still moves some entry by more than ``tol`` (unless ``strict=False``).
    """
    if not n_max > n_min >= 1:
        raise ValueError("need n_max > n_min >= 1")
    A, R = _period_pieces(op)
    P = A[0]
    W_same, W_same_prev = _window(P, n_min - 1, n_max - 1)
    W_wrap, W_wrap_prev = _window(P, n_min, n_max)
    change = max(_change(W_same, W_same_prev), _change(W_wrap, W_wrap_prev))
    fam = KernelFamily(op, A, R, W_same, W_wrap, (n_min, n_max), change, W_same_prev, W_wrap_prev, tol=tol)
    if strict and change > tol:
        raise WindowNotSettled(f"barrier window [{n_min}, {n_max}] still moves by {change:.3e} > {tol:.1e}")
    return fam


def mane_potential(op, n_max=24):
    """Mañé potential kernels: minimum over every horizon of ``0 .. n_max`` extra periods.

    Zero elapsed time is admissible, so ``phi(x, x) <= 0``.  Use
    :meth:`KernelFamily.still_decreasing` to see which entries have not settled.
    """
    A, R = _period_pieces(op)
    P = A[0]
    W_same, W_same_prev = _window(P, 0, n_max - 1)
    W_wrap, W_wrap_prev = _window(P, 0, n_max)
    change = max(_change(W_same, W_same_prev), _change(W_wrap, W_wrap_prev))
    return KernelFamily(op, A, R, W_same, W_wrap, (0, n_max), change, W_same_prev, W_wrap_prev, include_direct=True)


@dataclass(frozen=True, eq=False)
class AubryMask:
    mask: np.ndarray
    eps: float
    grid: object

    def __post_init__(self):
        if self.mask.shape != (self.grid.n_t, self.grid.n_q):
            raise ValueError("mask shape does not match the grid")

    @property
    def count(self):
        return int(self.mask.sum())

    def nodes(self):
        """``(k, j)`` pairs of mask nodes, slice-major."""
        k, j = np.nonzero(self.mask)
        return list(zip(k.tolist(), j.tolist()))

    def columns(self):
        """Node indices ``j`` present in at least one slice."""
        return np.flatnonzero(self.mask.any(axis=0))

    def to_csv(self, path):
        g = self.grid
        with open(path, "w") as fh:
            fh.write("k,j,flag\n")
            for k in range(g.n_t):
                for j in range(g.n_q):
                    fh.write(f"{k},{j},{int(self.mask[k, j])}\n")


def default_eps(grid, c_eps=DEFAULT_C_EPS):
    """Aubry threshold ``c_eps dq^2``; barriers grow quadratically off the Aubry set."""
    return c_eps * grid.dq**2


def aubry_mask(B, eps=None, c_eps=DEFAULT_C_EPS):
    """Nodes where the first barrier is at most ``eps``."""
    eps = default_eps(B.grid, c_eps) if eps is None else float(eps)
    mask = B.values <= eps
    if not mask.any():
        raise EmptyMask(f"no node has B <= {eps:.3e} (min B = {B.values.min():.3e})")
    return AubryMask(mask, eps, B.grid)


@dataclass(frozen=True, eq=False)
class MaskBlocks:
    """Barrier kernels restricted to Aubry rows and/or columns."""

    nodes: list
    into: list  # into[k]: (|mask|, n_q) kernel from each mask node to slice k
    out_of: list  # out_of[k]: (n_q, |mask|) kernel from slice k to each mask node
    among: np.ndarray  # (|mask|, |mask|) kernel between mask nodes


def mask_blocks(family, mask):
    g = family.grid
    idx = [np.flatnonzero(mask.mask[k]) for k in range(g.n_t)]
    nodes = [(k, int(j)) for k in range(g.n_t) for j in idx[k]]
    Y_same = [kernels.minplus_matmul(family.A[k][idx[k]], family.W_same) for k in range(g.n_t)]
    Y_wrap = [kernels.minplus_matmul(family.A[k][idx[k]], family.W_wrap) for k in range(g.n_t)]
    Z_same = [kernels.minplus_matmul(family.W_same, family.R[k][:, idx[k]]) for k in range(g.n_t)]
    Z_wrap = [kernels.minplus_matmul(family.W_wrap, family.R[k][:, idx[k]]) for k in range(g.n_t)]
    into, out_of = [], []
    for k in range(g.n_t):
        Y = np.vstack([Y_same[k1] if k >= k1 else Y_wrap[k1] for k1 in range(g.n_t)])
        into.append(kernels.minplus_matmul(Y, family.R[k]))
        Z = np.hstack([Z_same[k2] if k2 >= k else Z_wrap[k2] for k2 in range(g.n_t)])
        out_of.append(kernels.minplus_matmul(family.A[k], Z))
    # among[x, z]: from mask node x to mask node z
    among = np.hstack([into[k][:, idx[k]] for k in range(g.n_t)])
    return MaskBlocks(nodes, into, out_of, among)


def second_barrier(family, mask, blocks=None):
    """``b(x) = min over Aubry nodes xi, zeta of h(xi, x) + h(x, zeta) - h(xi, zeta)``."""
    g = family.grid
    blocks = blocks or mask_blocks(family, mask)
    b = np.empty((g.n_t, g.n_q))
    for k in range(g.n_t):
        b[k] = kernels.via_mask(blocks.into[k], blocks.out_of[k], blocks.among)
    return SpaceTimeFunction(g, b)


@dataclass(frozen=True, eq=False)
class BarrierField:
    B: SpaceTimeFunction
    b: SpaceTimeFunction
    window: tuple
    settled: bool
    change: float


def barrier_field(family, mask=None, c_eps=DEFAULT_C_EPS):
    B = family.diagonal()
    mask = aubry_mask(B, c_eps=c_eps) if mask is None else mask
    b = second_barrier(family, mask)
    return BarrierField(B, b, family.window, family.settled, family.change), mask


@dataclass(frozen=True, eq=False)
class QuotientMetric:
    representatives: list
    classes: np.ndarray  # class label per mask node
    rho: np.ndarray  # class-to-class pseudometric between representatives
    diameters: np.ndarray
    eps: float

    @property
    def count(self):
        return len(self.representatives)

    def to_dict(self):
        return {
            "classes": self.count,
            "representatives": [list(r) for r in self.representatives],
            "diameters": self.diameters.tolist(),
            "rho": self.rho.tolist(),
            "eps": self.eps,
        }


def pseudometric(family, mask, blocks=None):
    """``rho(x, y) = h(x, y) + h(y, x)`` on mask nodes."""
    blocks = blocks or mask_blocks(family, mask)
    return blocks.among + blocks.among.T, blocks.nodes


def link_eps(grid, c_link=DEFAULT_C_LINK):
    """Linking scale ``c_link (dq + dt)`` for static classes.

    Off-lattice motion costs at least one velocity quantum, so ``rho`` between
    neighbouring Aubry nodes is ``O(dq)`` rather than zero; the linking scale must
    therefore be first order, unlike the quadratic mask threshold.
    """
    return c_link * grid.h


def quotient_aubry(family, mask, blocks=None, c_link=DEFAULT_C_LINK):
    """Static classes: connected components of the graph ``rho <= 2 eps`` on mask nodes,
    with ``eps = c_link (dq + dt)``."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    eps = link_eps(mask.grid, c_link)
    rho, nodes = pseudometric(family, mask, blocks)
    n_cls, labels = connected_components(csr_matrix(rho <= 2 * eps), directed=False)
    reps = [int(np.flatnonzero(labels == c)[0]) for c in range(n_cls)]
    diam = np.array([float(np.max(rho[np.ix_(labels == c, labels == c)])) for c in range(n_cls)])
    return QuotientMetric([nodes[r] for r in reps], labels, rho[np.ix_(reps, reps)], diam, eps)


@dataclass(frozen=True, eq=False)
class ExtendedLift:
    """Points ``(q, p, t, kappa)`` over the Aubry mask with ``kappa = alpha - H``."""

    q: np.ndarray
    p: np.ndarray
    t: np.ndarray
    kappa: np.ndarray
    alpha: float
    h2_tilde: np.ndarray | None = None

    def __len__(self):
        return len(self.q)

    def points(self):
        return np.column_stack([self.q, self.p, self.t, self.kappa])

    def to_csv(self, path):
        data = self.points()
        np.savetxt(path, data, delimiter=",", header="q,p,t,kappa", comments="", fmt="%.17g")


def extended_lift(mask, H, alpha, velocity, H2=None):
    """Lift each mask node with the momentum of its calibrated arrival velocity.

    ``velocity`` is an ``(n_t, n_q)`` array of arrival velocities, normally
    :func:`loop_velocities`; only its entries on the mask are read.
    When ``H2`` is given, ``kappa + H2`` is evaluated as well.
    """
    g = mask.grid
    k, j = np.nonzero(mask.mask)
    q, t = g.q[j], g.t[k]
    v = np.asarray(velocity)[k, j]
    p = H.momentum(q, v, t)
    kappa = alpha - H.H(q, p, t)
    h2 = None if H2 is None else kappa + H2.H(q, p, t)
    return ExtendedLift(q, p, t, kappa, float(alpha), h2)


def product_distance(X, Y):
    """Pairwise max-metric on ``(q, p, t, kappa)`` with circle distances for ``q`` and ``t``."""
    X, Y = np.atleast_2d(X), np.atleast_2d(Y)
    dq = circle_distance(X[:, None, 0], Y[None, :, 0])
    dt = circle_distance(X[:, None, 2], Y[None, :, 2])
    dp = np.abs(X[:, None, 1] - Y[None, :, 1])
    dk = np.abs(X[:, None, 3] - Y[None, :, 3])
    return np.maximum(np.maximum(dq, dt), np.maximum(dp, dk))


def hausdorff(X, Y):
    if len(X) == 0 or len(Y) == 0:
        return np.inf
    D = product_distance(X, Y)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def boundary_only(mask1, mask2):
    """True when every node of the symmetric difference touches both masks.

    A node touches a mask if it or one of its 8 space-time neighbours is in it.
    """
    diff = mask1.mask ^ mask2.mask
    if not diff.any():
        return True
    near1, near2 = _dilate(mask1.mask), _dilate(mask2.mask)
    return bool(np.all(near1[diff] & near2[diff]))


def _dilate(m):
    out = m.copy()
    for dk in (-1, 0, 1):
        for dj in (-1, 0, 1):
            out |= np.roll(np.roll(m, dk, axis=0), dj, axis=1)
    return out


def loop_velocities(family, mask):
    """Arrival velocity of the barrier loop through each mask node (``nan`` elsewhere).

    The last step of the cheapest loop returning to ``(q_j, t_k)`` arrives from
    ``(q_j - m dq, t_{k-1})``; its velocity is the calibrated velocity at the node.
    """
    op = family.op
    g = family.grid
    vel = np.full((g.n_t, g.n_q), np.nan)
    m = np.arange(-op.M, op.M + 1)
    for k in range(g.n_t):
        j = np.flatnonzero(mask.mask[k])
        if j.size == 0:
            continue
        kp = (k - 1) % g.n_t
        H = family.h(k, kp)
        src = (j[:, None] - m[None, :]) % g.n_q
        tot = H[j[:, None], src] + op.cost(kp)[src, m[None, :] + op.M]
        vel[k, j] = op.velocities[np.argmin(tot, axis=1)]
    return vel
