"""Periodic space-time grids and the functions that live on them."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch

BIG = 1e12


def unreachable(values):
    """Mask of entries that carry the BIG sentinel (anything >= BIG/2)."""
    return np.asarray(values) >= BIG / 2


@dataclass(frozen=True)
class TorusGrid:
    """Nodes ``q_j = j / n_q`` on the circle and slices ``t_k = k / n_t`` on circle time."""

    n_q: int
    n_t: int
    dim: int = 1

    def __post_init__(self):
        if self.n_q < 8 or self.n_t < 4:
            raise ValueError(f"grid too coarse: need n_q >= 8 and n_t >= 4, got ({self.n_q}, {self.n_t})")
        if self.dim != 1:
            raise NotImplementedError("only the one-dimensional torus is supported")

    @property
    def dq(self):
        return 1.0 / self.n_q

    @property
    def dt(self):
        return 1.0 / self.n_t

    @property
    def q(self):
        return np.arange(self.n_q) / self.n_q

    @property
    def t(self):
        return np.arange(self.n_t) / self.n_t

    @property
    def h(self):
        """Combined mesh size ``dq + dt``."""
        return self.dq + self.dt

    def time(self, k):
        return (k % self.n_t) / self.n_t


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: TorusGrid
    k: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_q,):
            raise ShapeMismatch(f"expected {self.grid.n_q} values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def __call__(self, q, order="linear"):
        return interpolate(self, q, order)

    def shifted(self, c):
        return GridFunction(self.grid, self.k, self.values + c)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "q", "value"])
            for j, (q, v) in enumerate(zip(self.grid.q, self.values)):
                w.writerow([j, _fmt(q), _fmt(v)])

    @classmethod
    def from_csv(cls, path, grid, k=0):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        vals = np.empty(len(rows))
        for r in rows:
            vals[int(r["j"])] = float(r["value"])
        return cls(grid, k, vals)


@dataclass(frozen=True, eq=False)
class SpaceTimeFunction:
    """``values[k, j] ~ phi(q_j, t_k)``."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_t, self.grid.n_q):
            raise ShapeMismatch(f"expected shape {(self.grid.n_t, self.grid.n_q)}, got {v.shape}")
        object.__setattr__(self, "values", v)

    def slice(self, k):
        return GridFunction(self.grid, k % self.grid.n_t, self.values[k % self.grid.n_t])

    def __getitem__(self, kj):
        k, j = kj
        return self.values[k % self.grid.n_t, j % self.grid.n_q]

    def to_csv(self, path):
        g = self.grid
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "t", "j", "q", "value"])
            for k in range(g.n_t):
                for j in range(g.n_q):
                    w.writerow([k, _fmt(g.time(k)), j, _fmt(g.q[j]), _fmt(self.values[k, j])])

    @classmethod
    def from_csv(cls, path, grid):
        vals = np.empty((grid.n_t, grid.n_q))
        with open(path, newline="") as fh:
            for r in csv.DictReader(fh):
                vals[int(r["k"]), int(r["j"])] = float(r["value"])
        return cls(grid, vals)


def _fmt(x):
    return f"{float(x):.17g}"


def _values(f):
    return f.values if isinstance(f, (GridFunction, SpaceTimeFunction)) else np.asarray(f, dtype=float)


def interpolate(f, q, order="linear"):
    """Periodic interpolation of node values at positions ``q`` (wrapped to [0, 1)).

    ``order="linear"`` is monotone and reproduces constants exactly; ``"cubic"``
    is a periodic cubic spline meant for accuracy studies only.
    """
    vals = _values(f)
    n = vals.shape[-1]
    q = np.asarray(q, dtype=float)
    x = np.mod(q, 1.0) * n
    if order == "cubic":
        from scipy.interpolate import CubicSpline

        nodes = np.arange(n + 1)
        spline = CubicSpline(nodes, np.append(vals, vals[0]), bc_type="periodic")
        return spline(x)
    if order != "linear":
        raise ValueError(f"unknown interpolation order {order!r}")
    i0 = np.floor(x).astype(int)
    w = x - i0
    i0 %= n
    i1 = (i0 + 1) % n
    return (1.0 - w) * vals[i0] + w * vals[i1]


def sup_distance(f, g):
    """Sup-norm distance over nodes; raises ShapeMismatch on incompatible inputs."""
    a, b = _values(f), _values(g)
    if a.shape != b.shape:
        raise ShapeMismatch(f"shapes {a.shape} and {b.shape} differ")
    for x, y in ((f, g), (g, f)):
        if hasattr(x, "grid") and hasattr(y, "grid") and x.grid != y.grid:
            raise ShapeMismatch("functions live on different grids")
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def sample_nodes(field, n_q, t=0.0):
    """Evaluate a closed-form ``field(q, t)`` at ``q_j = j / n_q``."""
    q = np.arange(n_q) / n_q
    return np.asarray(field(q, np.full_like(q, t)), dtype=float) * np.ones(n_q)


def sample(field, grid, k=0):
    return GridFunction(grid, k % grid.n_t, sample_nodes(field, grid.n_q, grid.time(k)))


def sample_space_time(field, grid):
    q, t = np.meshgrid(grid.q, grid.t)
    return SpaceTimeFunction(grid, np.asarray(field(q, t), dtype=float) * np.ones((grid.n_t, grid.n_q)))


def circle_distance(a, b):
    d = np.abs(np.mod(np.asarray(a) - np.asarray(b), 1.0))
    return np.minimum(d, 1.0 - d)
