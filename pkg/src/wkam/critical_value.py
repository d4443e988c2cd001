"""Critical value alpha_H(0) of the discrete problem, computed two independent ways."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NonConvergence, NonFiniteKernel
from .grid import unreachable


@dataclass(frozen=True)
class AlphaEstimate:
    value: float
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"value": self.value, "method": self.method, "diagnostics": self.diagnostics}


def min_mean_cycle(K):
    """Minimum cycle mean of the complete digraph with weights ``K`` (Karp).

    Returns ``(lambda, argmin node, best walk length)``.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("square weight matrix required")
    if not np.all(np.isfinite(K)) or np.any(unreachable(K)):
        raise NonFiniteKernel("Karp's algorithm needs a finite, fully reachable kernel")
    n = K.shape[0]
    D = kernels.karp_table(K)
    k = np.arange(n)[:, None]
    ratios = (D[n][None, :] - D[:n]) / (n - k)
    worst = np.max(ratios, axis=0)
    v = int(np.argmin(worst))
    return float(worst[v]), v, int(n - np.argmax(ratios[:, v]))


def alpha_karp(K):
    """``alpha = -lambda`` where ``lambda`` is the min-plus eigenvalue of a one-period kernel.

    ``K`` is an unnormalised :class:`~wkam.lax_oleinik.ActionKernel` spanning exactly
    one period, or a raw square matrix.
    """
    if hasattr(K, "matrix"):
        if K.m != K.grid.n_t:
            raise ValueError(f"kernel spans {K.m} steps, not one period ({K.grid.n_t})")
        if K.alpha_shift != 0.0:
            raise ValueError("alpha_karp expects an unnormalised kernel (alpha_shift = 0)")
        M = K.matrix
    else:
        M = K
    lam, node, _ = min_mean_cycle(M)
    return AlphaEstimate(-lam, "karp", {"argmin_node": node, "n_nodes": int(np.shape(M)[0])})


def alpha_growth(op, n_periods=150, burn_in=50, tol=1e-3):
    """``alpha = -slope`` of the period means of unnormalised iterates ``T^n 0``.

    ``op`` must be unnormalised.  The slope is a least-squares fit over periods
    ``burn_in+1 .. n_periods``; the fit over ``burn_in+1 .. n_periods-1`` must
    agree within ``10 tol`` or NonConvergence is raised.
    """
    if not n_periods > burn_in >= 1:
        raise ValueError("need n_periods > burn_in >= 1")
    if op.alpha_shift != 0.0:
        raise ValueError("alpha_growth expects an unnormalised operator")
    u = np.zeros(op.grid.n_q)
    means = np.empty(n_periods + 1)
    mins = np.empty(n_periods + 1)
    means[0] = mins[0] = 0.0
    for n in range(1, n_periods + 1):
        u = op.period_map(u)
        means[n] = u.mean()
        mins[n] = u.min()
    x = np.arange(burn_in + 1, n_periods + 1)
    slope = np.polyfit(x, means[x], 1)[0]
    prev = np.polyfit(x[:-1], means[x[:-1]], 1)[0]
    slope_min = np.polyfit(x, mins[x], 1)[0]
    if abs(slope - prev) > 10 * tol:
        raise NonConvergence(f"growth slope unsettled: {prev:.6g} vs {slope:.6g}")
    return AlphaEstimate(
        float(-slope),
        "growth",
        {
            "iterations": n_periods,
            "burn_in": burn_in,
            "slope_change": float(abs(slope - prev)),
            "alpha_from_min": float(-slope_min),
        },
    )
