"""Time-periodic Tonelli Hamiltonians on the circle.

Every model has the form

    H(q, p, t) = h(p + dS/dq(q, t)) + dS/dt(q, t) + V(q, t)

with ``h`` a convex polynomial profile and ``S``, ``V`` finite double Fourier
series, 1-periodic in ``q`` and ``t``.  The built-in families are special cases:

* free:            h = p^2/2, S = V = 0
* pendulum(A):     h = p^2/2, V = A cos(2 pi q)
* forced_pendulum: h = p^2/2, V = (A + eps cos(2 pi t)) cos(2 pi q)
* conjugated:      h arbitrary, S arbitrary, V = g(t)

Two conjugated models sharing ``(S, g)`` commute: the translation ``p -> p + dS``
is symplectic on the extended phase space and maps both to p-only profiles.
The Lagrangian of the general form is ``h*(v) - v dS/dq - dS/dt - V``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NewtonDivergence, ProfileNotConvex

TWO_PI = 2.0 * np.pi
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 60


# ----------------------------------------------------------------- Fourier


def _trig_deriv(kind, x, a, n):
    """n-th derivative of cos(a x) (kind 0) or sin(a x) (kind 1)."""
    phase = (n + kind * 3) % 4  # cos, -sin, -cos, sin ; sin = cos shifted by 3
    scale = a**n
    if phase == 0:
        return scale * np.cos(a * x)
    if phase == 1:
        return -scale * np.sin(a * x)
    if phase == 2:
        return -scale * np.cos(a * x)
    return scale * np.sin(a * x)


@dataclass(frozen=True)
class FourierTable:
    """Finite double Fourier series in product form.

    Each row ``(kq, kt, cc, cs, sc, ss)`` contributes
    ``cc cos(a q) cos(b t) + cs cos(a q) sin(b t) + sc sin(a q) cos(b t)
    + ss sin(a q) sin(b t)`` with ``a = 2 pi kq`` and ``b = 2 pi kt``.
    """

    rows: tuple = ()

    def __post_init__(self):
        clean = []
        for row in self.rows:
            if len(row) != 6:
                raise ValueError(f"Fourier row needs 6 entries, got {row!r}")
            kq, kt = int(row[0]), int(row[1])
            if kq != row[0] or kt != row[1] or kq < 0 or kt < 0:
                raise ValueError(f"wave numbers must be non-negative integers: {row!r}")
            clean.append((kq, kt) + tuple(float(c) for c in row[2:]))
        object.__setattr__(self, "rows", tuple(clean))

    @classmethod
    def constant(cls, c):
        return cls(((0, 0, c, 0.0, 0.0, 0.0),)) if c else cls()

    def deriv(self, q, t, nq=0, nt=0):
        q = np.asarray(q, dtype=float)
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast(q, t).shape)
        for kq, kt, cc, cs, sc, ss in self.rows:
            a, b = TWO_PI * kq, TWO_PI * kt
            if kq == 0 and nq > 0:
                continue
            if kt == 0 and nt > 0:
                continue
            cq = _trig_deriv(0, q, a, nq)
            sq = _trig_deriv(1, q, a, nq)
            ct = _trig_deriv(0, t, b, nt)
            st = _trig_deriv(1, t, b, nt)
            out = out + cc * cq * ct + cs * cq * st + sc * sq * ct + ss * sq * st
        return out

    def __call__(self, q, t):
        return self.deriv(q, t)

    @property
    def mean(self):
        return sum(r[2] for r in self.rows if r[0] == 0 and r[1] == 0)

    @property
    def is_zero(self):
        return not any(any(r[2:]) for r in self.rows)

    def time_reversed(self):
        """The series of ``(q, t) -> f(q, -t)``."""
        return FourierTable(tuple((kq, kt, cc, -cs, sc, -ss) for kq, kt, cc, cs, sc, ss in self.rows))

    def scaled(self, c):
        return FourierTable(tuple((kq, kt, c * cc, c * cs, c * sc, c * ss) for kq, kt, cc, cs, sc, ss in self.rows))

    def plus(self, other):
        return FourierTable(self.rows + other.rows)

    def to_list(self):
        return [list(r) for r in self.rows]


# ----------------------------------------------------------------- profiles


@dataclass(frozen=True)
class ConvexProfile:
    """Strictly convex, superlinear polynomial ``h(p) = sum_k coeffs[k] p**k``."""

    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)
        deg = len(c) - 1
        if deg < 2 or deg % 2 or c[-1] <= 0:
            raise ProfileNotConvex(f"profile {c} is not an even-degree polynomial with positive leading term")
        if self.min_curvature() <= 0:
            raise ProfileNotConvex(f"profile {c} has h'' <= 0 somewhere")

    @classmethod
    def quadratic(cls):
        return cls((0.0, 0.0, 0.5))

    @property
    def poly(self):
        return np.polynomial.Polynomial(self.coeffs)

    def min_curvature(self):
        d2 = self.poly.deriv(2)
        cand = [0.0]
        if d2.degree() >= 1:
            cand += [r.real for r in d2.deriv().roots() if abs(r.imag) < 1e-9]
        return float(min(d2(np.array(cand))))

    def __call__(self, p):
        return self.poly(np.asarray(p, dtype=float))

    def d1(self, p):
        return self.poly.deriv(1)(np.asarray(p, dtype=float))

    def d2(self, p):
        return self.poly.deriv(2)(np.asarray(p, dtype=float))

    def mirrored(self):
        """Profile of ``p -> h(-p)``."""
        return ConvexProfile(tuple(c * (-1) ** k for k, c in enumerate(self.coeffs)))

    def superlinear_bound(self, ratio=2.0):
        """Smallest power of two ``P`` with ``h(+-P')/P' >= ratio`` for all sampled ``P' >= P``."""
        P = 1.0
        while True:
            probe = P * np.array([1.0, 1.5, 2.0, 4.0, 8.0])
            if np.all(self(probe) / probe >= ratio) and np.all(self(-probe) / probe >= ratio):
                return P
            P *= 2.0

    def dh_inv(self, v):
        """Solve ``h'(p) = v`` elementwise by bracketed Newton."""
        v = np.asarray(v, dtype=float)
        c = self.coeffs
        if len(c) == 3:
            return (v - c[1]) / (2.0 * c[2])
        return _bracketed_newton(self.d1, self.d2, v)

    def conjugate(self, v):
        """Legendre conjugate ``h*(v) = sup_p (p v - h(p))``."""
        v = np.asarray(v, dtype=float)
        p = self.dh_inv(v)
        return p * v - self(p)


def _bracketed_newton(f, df, target, tol=NEWTON_TOL, maxiter=NEWTON_MAXITER):
    """Solve increasing ``f(x) = target`` elementwise; Newton steps, bisection fallback."""
    target = np.asarray(target, dtype=float)
    flat = target
    span = max(1.0, float(np.max(np.abs(flat))) if flat.size else 1.0)
    hi = np.full(flat.shape, span)
    for _ in range(200):
        if np.all(f(hi) >= flat):
            break
        hi = np.where(f(hi) < flat, 2.0 * hi, hi)
    lo = -hi.copy()
    for _ in range(200):
        if np.all(f(lo) <= flat):
            break
        lo = np.where(f(lo) > flat, 2.0 * lo, lo)
    x = np.clip(flat, lo, hi)
    done = np.zeros(flat.shape, dtype=bool)
    for _ in range(maxiter):
        r = f(x) - flat
        lo = np.where(r <= 0, x, lo)
        hi = np.where(r >= 0, x, hi)
        d = df(x)
        step = np.where(d > 0, r / np.where(d > 0, d, 1.0), np.inf)
        xn = x - step
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        done = np.abs(xn - x) <= tol * np.maximum(1.0, np.abs(x))
        x = xn
        if np.all(done):
            return x.reshape(target.shape)
    raise NewtonDivergence(f"bracketed Newton did not converge in {maxiter} iterations")


# ----------------------------------------------------------------- models


class HamEval(NamedTuple):
    H: np.ndarray
    dH_dp: np.ndarray
    dH_dq: np.ndarray
    dH_dt: np.ndarray


class Legendre(NamedTuple):
    L: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class HamiltonianModel:
    """``H = h(p + S_q) + S_t + V``; immutable, vectorised over numpy inputs."""

    profile: ConvexProfile = field(default_factory=ConvexProfile.quadratic)
    S: FourierTable = field(default_factory=FourierTable)
    V: FourierTable = field(default_factory=FourierTable)
    family: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def _P(self, q, p, t):
        return np.asarray(p, dtype=float) + self.S.deriv(q, t, 1, 0)

    def H(self, q, p, t):
        return self.profile(self._P(q, p, t)) + self.S.deriv(q, t, 0, 1) + self.V.deriv(q, t)

    def dH_dp(self, q, p, t):
        return self.profile.d1(self._P(q, p, t))

    def d2H_dp2(self, q, p, t):
        return self.profile.d2(self._P(q, p, t))

    def dH_dq(self, q, p, t):
        hp = self.profile.d1(self._P(q, p, t))
        return hp * self.S.deriv(q, t, 2, 0) + self.S.deriv(q, t, 1, 1) + self.V.deriv(q, t, 1, 0)

    def dH_dt(self, q, p, t):
        hp = self.profile.d1(self._P(q, p, t))
        return hp * self.S.deriv(q, t, 1, 1) + self.S.deriv(q, t, 0, 2) + self.V.deriv(q, t, 0, 1)

    def lagrangian(self, q, v, t):
        """Closed-form Legendre dual ``h*(v) - v S_q - S_t - V``."""
        v = np.asarray(v, dtype=float)
        return (
            self.profile.conjugate(v)
            - v * self.S.deriv(q, t, 1, 0)
            - self.S.deriv(q, t, 0, 1)
            - self.V.deriv(q, t)
        )

    def momentum(self, q, v, t):
        """Momentum conjugate to velocity ``v``: ``(h')^{-1}(v) - S_q``."""
        return self.profile.dh_inv(v) - self.S.deriv(q, t, 1, 0)

    @property
    def autonomous(self):
        return not any(r[1] > 0 for r in self.S.rows + self.V.rows)

    def mirrored(self):
        """``H(q, -p, -t)``: the Hamiltonian whose backward solutions are our forward ones."""
        return HamiltonianModel(
            profile=self.profile.mirrored(),
            S=self.S.time_reversed().scaled(-1.0),
            V=self.V.time_reversed(),
            family=f"mirror({self.family})",
            params=dict(self.params),
        )

    def shifted(self, c):
        """``H + c``."""
        return HamiltonianModel(self.profile, self.S, self.V.plus(FourierTable.constant(c)), self.family, dict(self.params))

    def to_spec(self):
        # conjugated models store their q-independent forcing under "g"
        vkey = "g" if self.family == "conjugated" else "V"
        return {
            "family": self.family,
            "params": dict(self.params),
            "fourier": {
                "profile": list(self.profile.coeffs),
                "S": self.S.to_list(),
                vkey: self.V.to_list(),
            },
        }


def evaluate(model, q, p, t):
    """``(H, dH/dp, dH/dq, dH/dt)`` at the given point(s)."""
    return HamEval(model.H(q, p, t), model.dH_dp(q, p, t), model.dH_dq(q, p, t), model.dH_dt(q, p, t))


def legendre(model, q, v, t, vmax=None):
    """Numerical Legendre transform: solve ``dH/dp(q, p, t) = v`` for ``p``.

    Uses only the Hamiltonian's own evaluators (not the closed-form Lagrangian).
    """
    q, v, t = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (q, v, t)))
    if vmax is not None and np.any(np.abs(v) > vmax):
        raise ValueError(f"|v| exceeds configured Vmax={vmax}")
    p = _bracketed_newton(lambda x: model.dH_dp(q, x, t), lambda x: model.d2H_dp2(q, x, t), v)
    return Legendre(p * v - model.H(q, p, t), p)


# ----------------------------------------------------------------- brackets


@dataclass(frozen=True)
class SampleLattice:
    n_q: int = 10
    n_p: int = 10
    n_t: int = 10
    p_bound: float = 2.0

    def points(self):
        q = np.arange(self.n_q) / self.n_q
        p = np.linspace(-self.p_bound, self.p_bound, self.n_p)
        t = np.arange(self.n_t) / self.n_t
        return np.meshgrid(q, p, t, indexing="ij")


def bracket(H1, H2, q, p, t):
    """``[H1, H2] = {H1, H2} + dH1/dt - dH2/dt`` with ``{F, G} = F_q G_p - F_p G_q``."""
    return (
        H1.dH_dq(q, p, t) * H2.dH_dp(q, p, t)
        - H1.dH_dp(q, p, t) * H2.dH_dq(q, p, t)
        + H1.dH_dt(q, p, t)
        - H2.dH_dt(q, p, t)
    )


def bracket_defect(H1, H2, samples=None):
    """Maximum of ``|[H1, H2]|`` over a sample lattice."""
    samples = samples or SampleLattice()
    q, p, t = samples.points()
    return float(np.max(np.abs(bracket(H1, H2, q, p, t))))


def check_tonelli(model, samples=None, ratio=2.0, periodic_tol=1e-12):
    """Sampled Tonelli checks: convexity, superlinearity, periodicity in ``q`` and ``t``."""
    samples = samples or SampleLattice()
    q, p, t = samples.points()
    P = model.profile.superlinear_bound(ratio) * 4.0
    bound = max(float(np.max(np.abs(model.S.deriv(q, t, 1, 0)))), 0.0)
    big = P + bound
    sup = min(
        float(np.min(model.H(q, big, t) / big)),
        float(np.min(model.H(q, -big, t) / big)),
    )
    per_q = float(np.max(np.abs(model.H(q + 1.0, p, t) - model.H(q, p, t))))
    per_t = float(np.max(np.abs(model.H(q, p, t + 1.0) - model.H(q, p, t))))
    return {
        "min_curvature": float(np.min(model.d2H_dp2(q, p, t))),
        "superlinear_ratio": sup,
        "periodic_q": per_q,
        "periodic_t": per_t,
        "ok": bool(np.min(model.d2H_dp2(q, p, t)) > 0 and sup >= ratio and max(per_q, per_t) <= periodic_tol * 100),
    }


# ----------------------------------------------------------------- families


@dataclass(frozen=True)
class GeneratingField:
    """Conjugation data: exact-form generator ``S(q, t)`` and forcing ``g(t)``."""

    S: FourierTable = field(default_factory=FourierTable)
    g: FourierTable = field(default_factory=FourierTable)

    def __post_init__(self):
        if any(r[0] != 0 for r in self.g.rows):
            raise ValueError("forcing g must not depend on q (kq = 0 rows only)")

    @property
    def g_mean(self):
        return self.g.mean


@dataclass(frozen=True)
class CommutingPair:
    H1: HamiltonianModel
    H2: HamiltonianModel
    field: GeneratingField
    h1: ConvexProfile
    h2: ConvexProfile

    def analytic_alpha(self):
        """Critical values ``h_i(0) + mean(g)`` of the two members."""
        g = self.field.g_mean
        return float(self.h1(0.0)) + g, float(self.h2(0.0)) + g


def free(profile=None):
    profile = profile or ConvexProfile.quadratic()
    return HamiltonianModel(profile=profile, family="free", params={"profile": list(profile.coeffs)})


def pendulum(A=1.0):
    return HamiltonianModel(V=FourierTable(((1, 0, A, 0, 0, 0),)), family="pendulum", params={"A": A})


def forced_pendulum(A=1.0, eps=0.5):
    V = FourierTable(((1, 0, A, 0, 0, 0), (1, 1, eps, 0, 0, 0)))
    return HamiltonianModel(V=V, family="forced_pendulum", params={"A": A, "eps": eps})


def conjugated(profile, gen):
    return HamiltonianModel(
        profile=profile,
        S=gen.S,
        V=gen.g,
        family="conjugated",
        params={"profile": list(profile.coeffs)},
    )


def custom(profile, V, gen=None):
    gen = gen or GeneratingField()
    return HamiltonianModel(profile=profile, S=gen.S, V=V.plus(gen.g), family="custom")


def make_conjugated_pair(h1, h2, gen, samples=None, tol=1e-10):
    """Build ``H_i = h_i(p + S_q) + S_t + g`` for a shared generating field."""
    for h in (h1, h2):
        if h.min_curvature() <= 0:
            raise ProfileNotConvex(f"profile {h.coeffs} is not strictly convex")
    pair = CommutingPair(conjugated(h1, gen), conjugated(h2, gen), gen, h1, h2)
    defect = bracket_defect(pair.H1, pair.H2, samples)
    if defect > tol:  # pragma: no cover - guaranteed by construction
        raise AssertionError(f"conjugated pair has bracket defect {defect:.3e}")
    return pair


def pair_d1_field():
    return GeneratingField(
        S=FourierTable(((1, 1, 0.0, 0.0, 0.05, 0.0),)),
        g=FourierTable(((0, 1, 1.0, 0.0, 0.0, 0.0),)),
    )


def pair_d1():
    """Reference commuting pair: ``p^2/2`` and ``p^2/2 + p^4/4`` under
    ``S = 0.05 sin(2 pi q) cos(2 pi t)``, ``g = cos(2 pi t)``."""
    return make_conjugated_pair(
        ConvexProfile((0.0, 0.0, 0.5)),
        ConvexProfile((0.0, 0.0, 0.5, 0.0, 0.25)),
        pair_d1_field(),
    )


def control_pair(A=1.0, eps=0.5):
    """Non-commuting reference: pendulum vs forced pendulum."""
    return pendulum(A), forced_pendulum(A, eps)


# ----------------------------------------------------------------- JSON


def model_from_spec(spec):
    """Build a model from a ``{"family", "params", "fourier"}`` block."""
    fam = spec.get("family")
    params = spec.get("params", {}) or {}
    fourier = spec.get("fourier", {}) or {}
    profile = ConvexProfile(tuple(fourier.get("profile", params.get("profile", (0.0, 0.0, 0.5)))))
    S = FourierTable(tuple(tuple(r) for r in fourier.get("S", [])))
    g = FourierTable(tuple(tuple(r) for r in fourier.get("g", [])))
    V = FourierTable(tuple(tuple(r) for r in fourier.get("V", [])))
    if fam == "free":
        return free(profile)
    if fam == "pendulum":
        return pendulum(float(params.get("A", 1.0)))
    if fam == "forced_pendulum":
        return forced_pendulum(float(params.get("A", 1.0)), float(params.get("eps", 0.5)))
    if fam == "conjugated":
        return conjugated(profile, GeneratingField(S, g))
    if fam == "custom":
        return custom(profile, V, GeneratingField(S, g))
    if fam in ("pair_d1.H1", "pair_d1.H2"):
        pair = pair_d1()
        return pair.H1 if fam.endswith("H1") else pair.H2
    raise ValueError(f"unknown model family {fam!r}")
