"""Regenerate the small golden examples in docs/golden/.

Run from the repository root: ``python docs/make_golden.py``.
"""

import json
import os
import shutil
import tempfile

import numpy as np

from wkam import barriers as br
from wkam import flow as fl
from wkam import hamiltonian as hm
from wkam import weak_kam as wk
from wkam.critical_value import alpha_karp
from wkam.experiments import run_scenario
from wkam.grid import TorusGrid
from wkam.lax_oleinik import LaxOleinik, OperatorConfig

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")

CONFIG = {
    "kind": "aubry",
    "models": {"H": {"family": "pendulum", "params": {"A": 1.0}}},
    "grids": [[16, 4]],
    "operator": {"vmax": 3.0},
    "verification": {"n_min": 8, "n_max": 24, "mask_columns": [0]},
    "seed": 0,
}


def main():
    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "config_aubry.json"), "w") as fh:
        json.dump(CONFIG, fh, indent=2)
        fh.write("\n")
    with tempfile.TemporaryDirectory() as tmp:
        run_scenario(os.path.join(OUT, "config_aubry.json"), out_dir=tmp)
        for name in ("report.json", "B_16x4.csv", "b_16x4.csv", "mask_16x4.csv", "lift_16x4.csv"):
            shutil.copy(os.path.join(tmp, name), os.path.join(OUT, name))

    g = TorusGrid(16, 4)
    op = LaxOleinik(hm.pendulum(1.0), g, OperatorConfig(vmax=3.0))
    nop = op.normalized(alpha_karp(op.period_kernel()).value)
    sol = wk.backward_fixed_point(nop)
    sol.phi.to_csv(os.path.join(OUT, "phi_16x4.csv"))
    sol.initial().to_csv(os.path.join(OUT, "u_star_16x4.csv"))

    small = LaxOleinik(hm.pendulum(1.0), TorusGrid(8, 4), OperatorConfig(vmax=1.0))
    small.kernel(0, 4).to_csv(os.path.join(OUT, "kernel_8x4.csv"), os.path.join(OUT, "kernel_8x4.json"), small.cfg)

    x0 = fl.ExtendedState(0.2, 0.5, 0.0, 0.0)
    fl.flow_extended(hm.pair_d1().H1, x0, 0.1, fl.FlowConfig(step=0.01)).to_csv(os.path.join(OUT, "trajectory.csv"))
    print("wrote", sorted(os.listdir(OUT)))


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    main()
