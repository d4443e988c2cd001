"""Scenario runner: wires the solver modules into theorem checks and JSON reports.

Every criterion records the measured value, its threshold and the grid it was
measured on.  Grid-dependent thresholds are ``tol(grid) = C (dq + dt)`` with the
constant ``C`` stored next to the criterion.
"""

from __future__ import annotations

import hashlib
import json
import os
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _accel
from . import barriers as br
from . import flow as fl
from . import hamiltonian as hm
from . import weak_kam as wk
from .critical_value import alpha_growth, alpha_karp
from .errors import ConfigInvalid, WkamError
from .grid import TorusGrid
from .lax_oleinik import LaxOleinik, OperatorConfig

KINDS = (
    "pair-check",
    "alpha",
    "weak-kam",
    "barrier",
    "aubry",
    "theorem1",
    "theorem2",
    "theorem3",
    "theorem4",
    "flow-check",
)

FLOOR = 1e-12  # defects below this count as exact; refinement ratios are then not meaningful

DEFAULT_TOLERANCES = {
    "C": 0.05,
    "ratio_min": 1.5,
    "control_ratio_max": 1.2,
    "control_factor": 10.0,
    "bracket": 1e-10,
    "alpha_agreement": 1e-3,
    "alpha_abs": 5e-3,
    "flow": 1e-8,
    "order_lo": 12.0,
    "order_hi": 20.0,
    "gap_min": 0.15,
    "rel": 0.02,
}


# ------------------------------------------------------------ scenario


@dataclass
class Scenario:
    kind: str
    models: dict
    grids: list
    operator: OperatorConfig
    verification: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    out_dir: str | None = None
    seed: int = 0
    controls: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def tol(self, key):
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def model(self, name):
        return hm.model_from_spec(self.models[name])


def _require(cfg, key, path, kind=None):
    if key not in cfg:
        raise ConfigInvalid(f"missing required key {key!r}", f"{path}.{key}" if path else key)
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigInvalid(f"{key!r} must be of type {getattr(kind, '__name__', kind)}", f"{path}.{key}" if path else key)
    return val


def _check_model(spec, path):
    if not isinstance(spec, dict):
        raise ConfigInvalid("model spec must be an object", path)
    _require(spec, "family", path, str)
    try:
        hm.model_from_spec(spec)
    except (ValueError, TypeError) as exc:
        raise ConfigInvalid(str(exc), path) from exc


def validate_config(cfg, kind=None):
    """Parse a config dict into a :class:`Scenario`; raises ConfigInvalid with the offending path."""
    if not isinstance(cfg, dict):
        raise ConfigInvalid("config must be a JSON object")
    kind = kind or cfg.get("kind")
    if kind is None:
        raise ConfigInvalid("missing required key 'kind' (or pass a verb)", "kind")
    if kind not in KINDS:
        raise ConfigInvalid(f"unknown verification kind {kind!r}", "kind")
    models = _require(cfg, "models", "", dict)
    for name, spec in models.items():
        _check_model(spec, f"models.{name}")
    need = ("H1", "H2") if kind in ("pair-check", "theorem1", "theorem2", "theorem3", "theorem4", "flow-check") else ("H",)
    for name in need:
        if name not in models:
            raise ConfigInvalid(f"missing required key {name!r}", f"models.{name}")
    controls = cfg.get("controls", {}) or {}
    for name, spec in controls.items():
        _check_model(spec, f"controls.{name}")
    grids = _require(cfg, "grids", "", list)
    if kind not in ("pair-check", "flow-check") and not grids:
        raise ConfigInvalid("at least one grid is required", "grids")
    parsed = []
    for i, gr in enumerate(grids):
        if not (isinstance(gr, (list, tuple)) and len(gr) == 2 and all(isinstance(x, int) for x in gr)):
            raise ConfigInvalid("grid must be a pair [N_q, N_t] of integers", f"grids[{i}]")
        try:
            TorusGrid(*gr)
        except ValueError as exc:
            raise ConfigInvalid(str(exc), f"grids[{i}]") from exc
        parsed.append(tuple(gr))
    for i in range(1, len(parsed)):
        if not (parsed[i][0] > parsed[i - 1][0] and parsed[i][1] >= parsed[i - 1][1]):
            raise ConfigInvalid("grid list must be strictly increasing", f"grids[{i}]")
    op = cfg.get("operator", {}) or {}
    try:
        opcfg = OperatorConfig(vmax=float(op.get("vmax", 3.0)), quadrature=op.get("quadrature", "trapezoid"))
        for gr in parsed:
            opcfg.half_width(TorusGrid(*gr))
    except ValueError as exc:
        raise ConfigInvalid(str(exc), "operator") from exc
    tols = cfg.get("tolerances", {}) or {}
    if not isinstance(tols, dict):
        raise ConfigInvalid("tolerances must be an object", "tolerances")
    for key, val in tols.items():
        if not isinstance(val, (int, float)) or not val > 0:
            raise ConfigInvalid("tolerances must be positive numbers", f"tolerances.{key}")
    ver = cfg.get("verification", {}) or {}
    if not isinstance(ver, dict):
        raise ConfigInvalid("verification must be an object", "verification")
    return Scenario(kind, models, parsed, opcfg, ver, tols, cfg.get("out"), int(cfg.get("seed", 0)), controls, cfg)


def load_config(path, kind=None):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigInvalid(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"invalid JSON: {exc}") from exc
    return validate_config(cfg, kind)


# ------------------------------------------------------------ report


@dataclass
class Report:
    kind: str
    grids: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    criteria: list = field(default_factory=list)
    ratios: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def check(self, name, measured, threshold, op="<=", grid=None, C=None, note=None):
        """Record one criterion; ``op`` is how ``measured`` must compare to ``threshold``."""
        m = float(measured) if not isinstance(measured, (bool, str)) else measured
        if op == "<=":
            ok = m <= threshold
        elif op == ">=":
            ok = m >= threshold
        elif op == "==":
            ok = m == threshold
        elif op == "in":
            ok = threshold[0] <= m <= threshold[1]
        else:  # pragma: no cover
            raise ValueError(op)
        entry = {"name": name, "measured": m, "threshold": threshold, "op": op, "grid": list(grid) if grid else None, "passed": bool(ok)}
        if C is not None:
            entry["C"] = C
        if note:
            entry["note"] = note
        self.criteria.append(entry)
        return ok

    @property
    def passed(self):
        return all(c["passed"] for c in self.criteria)

    def lines(self):
        out = []
        for c in self.criteria:
            g = "" if c["grid"] is None else f" grid={tuple(c['grid'])}"
            out.append(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['measured']!r} {c['op']} {c['threshold']!r}{g}")
        return out

    def to_dict(self, timestamp=True):
        d = {
            "kind": self.kind,
            "passed": self.passed,
            "grids": [list(g) for g in self.grids],
            "metrics": self.metrics,
            "criteria": self.criteria,
            "ratios": self.ratios,
            "provenance": self.provenance,
            "artifacts": self.artifacts,
            "notes": self.notes,
        }
        if timestamp:
            d["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        return _clean(d)

    def to_json(self, timestamp=True):
        return json.dumps(self.to_dict(timestamp), indent=2, sort_keys=True)


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def provenance(scn):
    import numba
    import scipy

    blob = json.dumps(scn.raw, sort_keys=True).encode()
    return {
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "seed": scn.seed,
        "versions": {
            "wkam": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
            "python": platform.python_version(),
        },
        "backend": _accel.backend_name(),
    }


# ------------------------------------------------------------ helpers


def tol_grid(C, grid):
    return C * grid.h


def refinement_ratios(values):
    """Successive ratios ``d_i / d_{i+1}``; ``None`` where both values sit below FLOOR."""
    out = []
    for a, b in zip(values, values[1:]):
        if a <= FLOOR and b <= FLOOR:
            out.append(None)
        else:
            out.append(a / b if b > 0 else float("inf"))
    return out


def check_ratios(report, name, values, grids, ratio_min, exact_note=True):
    ratios = refinement_ratios(values)
    report.ratios[name] = ratios
    for i, r in enumerate(ratios):
        g = grids[i + 1]
        if r is None:
            pair = max(values[i], values[i + 1])
            report.check(f"{name} at roundoff floor (ratio not defined)", pair, FLOOR, "<=", g, note="exact at this grid pair")
        else:
            report.check(f"{name} ratio", r, ratio_min, ">=", g)
    return ratios


def probe_functions(grid, rng, count, modes=4):
    """Seeded smooth probes: Fourier series with coefficients in [-1, 1]."""
    q = grid.q
    out = []
    for _ in range(count):
        c = rng.uniform(-1.0, 1.0, size=(modes, 2))
        u = np.zeros_like(q)
        for m in range(modes):
            u += c[m, 0] * np.cos(2 * np.pi * (m + 1) * q) + c[m, 1] * np.sin(2 * np.pi * (m + 1) * q)
        out.append(u)
    return out


def normalized_operator(H, grid, opcfg):
    op = LaxOleinik(H, grid, opcfg)
    a = alpha_karp(op.period_kernel()).value
    return op.normalized(a), a


def fp_config(ver):
    return wk.FixedPointConfig(
        window=int(ver.get("window", 10)),
        burn_in=int(ver.get("burn_in", 50)),
        max_iters=int(ver.get("max_iters", 2000)),
        tol=float(ver.get("fixed_point_tol", 1e-9)),
    )


def _out(scn, name):
    if not scn.out_dir:
        return None
    Path(scn.out_dir).mkdir(parents=True, exist_ok=True)
    return os.path.join(scn.out_dir, name)


def _tag(grid):
    return f"{grid.n_q}x{grid.n_t}"


# ------------------------------------------------------------ verbs


def run_pair_check(scn, report):
    H1, H2 = scn.model("H1"), scn.model("H2")
    d = hm.bracket_defect(H1, H2)
    report.metrics.append({"bracket_defect": d, "tonelli_H1": hm.check_tonelli(H1), "tonelli_H2": hm.check_tonelli(H2)})
    expect = scn.verification.get("expect", "commuting")
    if expect == "commuting":
        report.check("bracket defect", d, scn.tol("bracket"), "<=")
    else:
        report.check("bracket defect (control)", d, 1.0, ">=")
    for name, H in (("H1", H1), ("H2", H2)):
        report.check(f"{name} Tonelli sample checks", bool(hm.check_tonelli(H)["ok"]), True, "==")


def run_alpha(scn, report):
    H = scn.model("H")
    expected = scn.verification.get("expected")
    for gr in scn.grids:
        g = TorusGrid(*gr)
        op = LaxOleinik(H, g, scn.operator)
        k = alpha_karp(op.period_kernel())
        gro = alpha_growth(op, int(scn.verification.get("n_periods", 150)), int(scn.verification.get("burn_in", 50)))
        agree = abs(k.value - gro.value)
        report.metrics.append({"grid": gr, "karp": k.to_dict(), "growth": gro.to_dict(), "agreement": agree})
        report.check("|karp - growth|", agree, scn.tol("alpha_agreement"), "<=", gr)
        if expected is not None:
            report.check("|alpha_karp - expected|", abs(k.value - float(expected)), scn.tol("alpha_abs"), "<=", gr)
        path = _out(scn, f"alpha_{_tag(g)}.json")
        if path:
            with open(path, "w") as fh:
                json.dump(_clean({"karp": k.to_dict(), "growth": gro.to_dict()}), fh, indent=2, sort_keys=True)
            report.artifacts.append(os.path.basename(path))


def _expected_points(scn, report, values_at, gr, label, key="expected"):
    for item in scn.verification.get(key, []) or []:
        q, val = float(item["q"]), float(item["value"])
        rel = float(item.get("rel", scn.tol("rel")))
        got = values_at(q)
        report.check(f"{label}({q}) relative error", abs(got - val) / abs(val), rel, "<=", gr)


def run_weak_kam(scn, report):
    H = scn.model("H")
    cfg = fp_config(scn.verification)
    for gr in scn.grids:
        g = TorusGrid(*gr)
        op, a = normalized_operator(H, g, scn.operator)
        sol = wk.backward_fixed_point(op, cfg=cfg)
        report.metrics.append({"grid": gr, **sol.to_dict()})
        report.check("fixed-point residual", sol.residual, cfg.tol, "<=", gr)
        report.check("wrap residual", sol.wrap_residual, cfg.tol, "<=", gr)
        dom = wk.domination_residual(sol.phi, op) if g.n_q <= 128 else None
        if dom is not None:
            report.check("domination residual", dom, 1e-12, "<=", gr)
        phi0 = sol.phi.values[0]
        _expected_points(scn, report, lambda q: phi0[int(round(q * g.n_q)) % g.n_q] - phi0[0], gr, "u*")
        path = _out(scn, f"phi_{_tag(g)}.csv")
        if path:
            sol.phi.to_csv(path)
            report.artifacts.append(os.path.basename(path))


def _barriers(H, g, scn):
    op, a = normalized_operator(H, g, scn.operator)
    ver = scn.verification
    fam = br.peierls_barrier(
        op, int(ver.get("n_min", 8)), int(ver.get("n_max", 24)), float(ver.get("settle_tol", 1e-6)), strict=bool(ver.get("strict", False))
    )
    B = fam.diagonal()
    mask = br.aubry_mask(B, c_eps=float(ver.get("c_eps", br.DEFAULT_C_EPS)))
    blocks = br.mask_blocks(fam, mask)
    b = br.second_barrier(fam, mask, blocks)
    quo = br.quotient_aubry(fam, mask, blocks, c_link=float(ver.get("c_link", br.DEFAULT_C_LINK)))
    return op, a, fam, B, b, mask, quo


def run_barrier(scn, report, kind="barrier"):
    H = scn.model("H")
    for gr in scn.grids:
        g = TorusGrid(*gr)
        op, a, fam, B, b, mask, quo = _barriers(H, g, scn)
        report.metrics.append(
            {"grid": gr, "alpha": a, "settled": fam.settled, "window_change": fam.change, "mask_count": mask.count,
             "mask_columns": mask.columns().tolist(), "classes": quo.count, "diameters": quo.diameters.tolist()}
        )
        report.check("barrier window settled", fam.change, fam.tol, "<=", gr)
        report.check("min B", B.values.min(), -mask.eps, ">=", gr)
        report.check("max b on mask", float(np.max(np.abs(b.values[mask.mask]))), mask.eps, "<=", gr)
        _expected_points(scn, report, lambda q: B.values[0, int(round(q * g.n_q)) % g.n_q], gr, "B")
        _expected_points(scn, report, lambda q: b.values[0, int(round(q * g.n_q)) % g.n_q], gr, "b", "expected_b")
        cols = scn.verification.get("mask_columns")
        if cols is not None:
            extra = _column_mismatch(mask, cols)
            report.check("mask columns beyond +-1 node of expected", extra, 0, "<=", gr)
        if kind == "aubry":
            sol = wk.backward_fixed_point(op, cfg=fp_config(scn.verification))
            lift = br.extended_lift(mask, H, a, br.loop_velocities(fam, mask))
            report.check("max |kappa + H - alpha| on lift", float(np.max(np.abs(lift.kappa + H.H(lift.q, lift.p, lift.t) - a))), 1e-12, "<=", gr)
            pair = wk.conjugate_pair(op, sol, mask.eps)
            report.check("phi- == phi+ on Aubry mask", float(np.max(np.abs(pair.gap()[mask.mask]))), mask.eps, "<=", gr)
            p = _out(scn, f"lift_{_tag(g)}.csv")
            if p:
                lift.to_csv(p)
                report.artifacts.append(os.path.basename(p))
        for name, obj in (("B", B), ("b", b)):
            p = _out(scn, f"{name}_{_tag(g)}.csv")
            if p:
                obj.to_csv(p)
                report.artifacts.append(os.path.basename(p))
        p = _out(scn, f"mask_{_tag(g)}.csv")
        if p:
            mask.to_csv(p)
            report.artifacts.append(os.path.basename(p))
        report.metrics[-1]["quotient"] = quo.to_dict()


def _column_mismatch(mask, cols):
    """Mask nodes farther than one node from every expected column (plus empty expected columns)."""
    n = mask.grid.n_q
    near = np.zeros(n, dtype=bool)
    for c in cols:
        for d in (-1, 0, 1):
            near[(int(c) + d) % n] = True
    stray = int(mask.mask[:, ~near].sum())
    missing = sum(1 for c in cols if not mask.mask[:, [(int(c) + d) % n for d in (-1, 0, 1)]].any(axis=1).all())
    return stray + missing


def _pair_ops(H1, H2, g, scn):
    return LaxOleinik(H1, g, scn.operator), LaxOleinik(H2, g, scn.operator)


def theorem1_defects(H1, H2, g, scn, rng):
    """Sup distance between the two orders of one period of each operator, backward and forward."""
    o1, o2 = _pair_ops(H1, H2, g, scn)
    probes = [np.zeros(g.n_q)] + probe_functions(g, rng, int(scn.verification.get("probes", 5)))
    back = fwd = 0.0
    for u in probes:
        back = max(back, float(np.max(np.abs(o1.period_map(o2.period_map(u)) - o2.period_map(o1.period_map(u))))))
        fwd = max(fwd, float(np.max(np.abs(o1.forward_period_map(o2.forward_period_map(u)) - o2.forward_period_map(o1.forward_period_map(u))))))
    return back, fwd


def run_theorem1(scn, report):
    H1, H2 = scn.model("H1"), scn.model("H2")
    C = scn.tol("C")
    backs, fwds = [], []
    for gr in scn.grids:
        g = TorusGrid(*gr)
        back, fwd = theorem1_defects(H1, H2, g, scn, np.random.default_rng(scn.seed))
        backs.append(back)
        fwds.append(fwd)
        report.metrics.append({"grid": gr, "backward_defect": back, "forward_defect": fwd, "tol": tol_grid(C, g)})
        report.check("commutation defect T-", back, tol_grid(C, g), "<=", gr, C)
        report.check("commutation defect T+", fwd, tol_grid(C, g), "<=", gr, C)
    check_ratios(report, "commutation defect T-", backs, scn.grids, scn.tol("ratio_min"))
    check_ratios(report, "commutation defect T+", fwds, scn.grids, scn.tol("ratio_min"))
    if scn.controls:
        c1, c2 = hm.model_from_spec(scn.controls["H1"]), hm.model_from_spec(scn.controls["H2"])
        g = TorusGrid(*scn.grids[-1])
        cb, _ = theorem1_defects(c1, c2, g, scn, np.random.default_rng(scn.seed))
        report.metrics.append({"grid": scn.grids[-1], "control_backward_defect": cb})
        report.check("control / commuting finest defect", cb / max(backs[-1], FLOOR), scn.tol("control_factor"), ">=", scn.grids[-1])


def theorem2_residuals(H1, H2, g, scn):
    cfg = fp_config(scn.verification)
    n1, _ = normalized_operator(H1, g, scn.operator)
    n2, _ = normalized_operator(H2, g, scn.operator)
    s = wk.backward_fixed_point(n1, cfg=cfg)
    cross = wk.period_residual(n2, s.raw())
    f = wk.forward_fixed_point(n1, cfg=cfg)
    u = f.raw()
    cross_f = float(np.max(np.abs(n2.forward_period_map(u) - u)))
    common = wk.common_fixed_point(n1, n2, cfg)
    return cross, cross_f, common


def run_theorem2(scn, report):
    H1, H2 = scn.model("H1"), scn.model("H2")
    C = scn.tol("C")
    cb, cf = [], []
    for gr in scn.grids:
        g = TorusGrid(*gr)
        cross, cross_f, common = theorem2_residuals(H1, H2, g, scn)
        cb.append(cross)
        cf.append(cross_f)
        t = tol_grid(C, g)
        report.metrics.append(
            {"grid": gr, "cross_backward": cross, "cross_forward": cross_f, "common_1": common.residual_1, "common_2": common.residual_2, "tol": t}
        )
        report.check("H2 residual of H1 backward solution", cross, t, "<=", gr, C)
        report.check("H2 residual of H1 forward solution", cross_f, t, "<=", gr, C)
        report.check("common fixed point residual H1", common.residual_1, t, "<=", gr, C)
        report.check("common fixed point residual H2", common.residual_2, t, "<=", gr, C)
    check_ratios(report, "H2 residual of H1 backward solution", cb, scn.grids, scn.tol("ratio_min"))
    check_ratios(report, "H2 residual of H1 forward solution", cf, scn.grids, scn.tol("ratio_min"))
    if scn.controls:
        c1, c2 = hm.model_from_spec(scn.controls["H1"]), hm.model_from_spec(scn.controls["H2"])
        vals = []
        for gr in scn.grids:
            vals.append(theorem2_residuals(c1, c2, TorusGrid(*gr), scn)[0])
        report.metrics.append({"control_cross_backward": vals})
        rs = refinement_ratios(vals)
        report.ratios["control cross residual"] = rs
        for i, r in enumerate(rs):
            report.check("control cross residual ratio", r if r is not None else 1.0, scn.tol("control_ratio_max"), "<=", scn.grids[i + 1])


def run_theorem3(scn, report):
    H1, H2 = scn.model("H1"), scn.model("H2")
    C = scn.tol("C")
    dB, db = [], []
    for gr in scn.grids:
        g = TorusGrid(*gr)
        _, _, f1, B1, b1, m1, q1 = _barriers(H1, g, scn)
        _, _, f2, B2, b2, m2, q2 = _barriers(H2, g, scn)
        x, y = float(np.max(np.abs(B1.values - B2.values))), float(np.max(np.abs(b1.values - b2.values)))
        dB.append(x)
        db.append(y)
        t = tol_grid(C, g)
        report.metrics.append(
            {"grid": gr, "sup_dB": x, "sup_db": y, "classes": [q1.count, q2.count], "tol": t, "eps": m1.eps, "link": q1.eps}
        )
        report.check("sup |B1 - B2|", x, t, "<=", gr, C)
        report.check("sup |b1 - b2|", y, t, "<=", gr, C)
        report.check("quotient class counts differ by", abs(q1.count - q2.count), 0, "<=", gr)
        if q1.count == q2.count:
            report.check("class-to-class rho difference", float(np.max(np.abs(q1.rho - q2.rho))), q1.eps, "<=", gr)
    check_ratios(report, "sup |B1 - B2|", dB, scn.grids, scn.tol("ratio_min"))
    check_ratios(report, "sup |b1 - b2|", db, scn.grids, scn.tol("ratio_min"))
    if scn.controls:
        c1, c2 = hm.model_from_spec(scn.controls["H1"]), hm.model_from_spec(scn.controls["H2"])
        for gr in scn.grids:
            g = TorusGrid(*gr)
            B1 = _barriers(c1, g, scn)[3]
            B2 = _barriers(c2, g, scn)[3]
            gap = float(np.max(np.abs(B1.values - B2.values)))
            report.metrics.append({"grid": gr, "control_gap": gap})
            report.check("control barrier gap", gap, scn.tol("gap_min"), ">=", gr)


def theorem4_measures(H1, H2, g, scn):
    out = {}
    _, a1, f1, B1, _, m1, _ = _barriers_nob(H1, g, scn)
    _, a2, f2, B2, _, m2, _ = _barriers_nob(H2, g, scn)
    l1 = br.extended_lift(m1, H1, a1, br.loop_velocities(f1, m1), H2=H2)
    l2 = br.extended_lift(m2, H2, a2, br.loop_velocities(f2, m2))
    out["sym_diff"] = int((m1.mask ^ m2.mask).sum())
    out["boundary_only"] = br.boundary_only(m1, m2)
    out["hausdorff"] = br.hausdorff(l1.points(), l2.points())
    out["prop34"] = float(np.max(np.abs(l1.h2_tilde - a2)))
    return out, (l1, l2, m1, m2)


def _barriers_nob(H, g, scn):
    op, a = normalized_operator(H, g, scn.operator)
    ver = scn.verification
    fam = br.peierls_barrier(op, int(ver.get("n_min", 8)), int(ver.get("n_max", 24)), float(ver.get("settle_tol", 1e-6)), strict=False)
    B = fam.diagonal()
    mask = br.aubry_mask(B, c_eps=float(ver.get("c_eps", br.DEFAULT_C_EPS)))
    return op, a, fam, B, None, mask, None


def run_theorem4(scn, report):
    H1, H2 = scn.model("H1"), scn.model("H2")
    C = scn.tol("C")
    for gr in scn.grids:
        g = TorusGrid(*gr)
        m, (l1, l2, m1, m2) = theorem4_measures(H1, H2, g, scn)
        report.metrics.append({"grid": gr, **m, "mask_counts": [m1.count, m2.count]})
        report.check("mask symmetric difference boundary-only", bool(m["boundary_only"]), True, "==", gr)
        report.check("extended lift Hausdorff", m["hausdorff"], 2 * g.h, "<=", gr)
        report.check("max |kappa + H2 - alpha_H2| on lift of H1", m["prop34"], tol_grid(C, g), "<=", gr, C)
        p = _out(scn, f"lift_H1_{_tag(g)}.csv")
        if p:
            l1.to_csv(p)
            report.artifacts.append(os.path.basename(p))
    if scn.controls:
        c1, c2 = hm.model_from_spec(scn.controls["H1"]), hm.model_from_spec(scn.controls["H2"])
        g = TorusGrid(*scn.grids[0])
        m, _ = theorem4_measures(c1, c2, g, scn)
        report.metrics.append({"grid": scn.grids[0], "control": m})
        report.notes.append("control pair shares its Aubry set, so theorem4 quantities do not separate it; the theorem3 barrier gap does")


def run_flow_check(scn, report):
    H1, H2 = scn.model("H1"), scn.model("H2")
    ver = scn.verification
    step = float(ver.get("step", 1e-3))
    s = float(ver.get("s", 0.5))
    span = float(ver.get("span", 2.0))
    rng = np.random.default_rng(scn.seed)
    n_pts = int(ver.get("points", 4))
    X = np.column_stack([rng.uniform(0, 1, n_pts), rng.uniform(-1, 1, n_pts), rng.uniform(0, 1, n_pts), np.zeros(n_pts)])
    cfg = fl.FlowConfig(step=step)
    bd = hm.bracket_defect(H1, H2)
    comm = fl.commutation_defect(H1, H2, X, s, s, cfg)
    cons = fl.conservation_defect(H1, H2, X, span, cfg)
    report.metrics.append({"bracket_defect": bd, "commutation": comm, "conservation": cons, "step": step})
    report.check("bracket defect", bd, scn.tol("bracket"), "<=")
    report.check("flow commutation defect", comm, scn.tol("flow"), "<=")
    report.check("H2~ conservation defect", cons, scn.tol("flow"), "<=")
    h0 = float(ver.get("order_step", 0.01))
    c_a = fl.commutation_defect(H1, H2, X, s, s, fl.FlowConfig(step=h0))
    c_b = fl.commutation_defect(H1, H2, X, s, s, fl.FlowConfig(step=h0 / 2))
    k_a = fl.conservation_defect(H1, H2, X, span, fl.FlowConfig(step=h0))
    k_b = fl.conservation_defect(H1, H2, X, span, fl.FlowConfig(step=h0 / 2))
    lo_hi = [scn.tol("order_lo"), scn.tol("order_hi")]
    report.check("commutation step-halving ratio", c_a / c_b, lo_hi, "in")
    report.check("conservation step-halving ratio", k_a / k_b, lo_hi, "in")
    report.ratios["step halving"] = {"commutation": c_a / c_b, "conservation": k_a / k_b}
    if scn.grids:
        g = TorusGrid(*scn.grids[0])
        _, a1, f1, _, _, m1, _ = _barriers_nob(H1, g, scn)
        lift = br.extended_lift(m1, H1, a1, br.loop_velocities(f1, m1))
        disp = max(fl.aubry_invariance_check(H1, H2, lift, r, cfg) for r in ver.get("invariance_spans", [0.5, 2.0]))
        report.check("Aubry invariance displacement", disp, 2 * g.h, "<=", scn.grids[0])
    if scn.controls:
        c1, c2 = hm.model_from_spec(scn.controls["H1"]), hm.model_from_spec(scn.controls["H2"])
        w = ver.get("witness", [0.25, 1.0, 0.0])
        wv = abs(float(hm.bracket(c1, c2, *w)))
        report.metrics.append({"control_witness_bracket": wv})
        report.check("control bracket at witness", wv, 1.0, ">=")
    p = _out(scn, "trajectory.csv")
    if p:
        fl.flow_points(H1, X[:1], span, cfg, record=True).to_csv(p)
        report.artifacts.append(os.path.basename(p))


RUNNERS = {
    "pair-check": run_pair_check,
    "alpha": run_alpha,
    "weak-kam": run_weak_kam,
    "barrier": run_barrier,
    "aubry": lambda scn, rep: run_barrier(scn, rep, "aubry"),
    "theorem1": run_theorem1,
    "theorem2": run_theorem2,
    "theorem3": run_theorem3,
    "theorem4": run_theorem4,
    "flow-check": run_flow_check,
}


def execute(scn):
    """Run a validated scenario; returns the :class:`Report` (written to ``out_dir`` if set)."""
    report = Report(scn.kind, grids=list(scn.grids))
    report.provenance = provenance(scn)
    path = _out(scn, "report.json")
    try:
        RUNNERS[scn.kind](scn, report)
    except WkamError as exc:
        # keep whatever was written, flagged as partial, then let the caller decide
        if path:
            d = report.to_dict()
            d.update(passed=False, aborted=True, partial_artifacts=list(report.artifacts),
                     error={"type": type(exc).__name__, "message": str(exc)})
            with open(path, "w") as fh:
                fh.write(json.dumps(_clean(d), indent=2, sort_keys=True))
        raise
    if path:
        with open(path, "w") as fh:
            fh.write(report.to_json())
    return report


def run_scenario(path, kind=None, out_dir=None, seed=None):
    scn = load_config(path, kind)
    if out_dir is not None:
        scn.out_dir = out_dir
    if seed is not None:
        scn.seed = int(seed)
        scn.raw = {**scn.raw, "seed": scn.seed}
    return execute(scn)


# public names mirroring the theorem checks


def verify_theorem1(scn):
    return _verify(scn, "theorem1")


def verify_theorem2(scn):
    return _verify(scn, "theorem2")


def verify_theorem3(scn):
    return _verify(scn, "theorem3")


def verify_theorem4(scn):
    return _verify(scn, "theorem4")


def _verify(scn, kind):
    scn.kind = kind
    return execute(scn)
