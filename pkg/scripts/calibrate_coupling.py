"""Coupling calibration factor that puts unit zeroth-mode efficiency at a target power.

theta scales as sqrt(P), so with the factor set to 1 the required factor is
sqrt(P_raw / P_target).  Usage:

    python3 scripts/calibrate_coupling.py [scenario.toml] [--target-w 60]
"""

import argparse
import dataclasses

import numpy as np

from qfc.config import load_scenario
from qfc.optimize import power_for_unit_eta0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("scenario", nargs="?")
    ap.add_argument("--target-w", type=float, default=60.0)
    args = ap.parse_args()
    scn = load_scenario(args.scenario)
    setup = scn.to_setup()
    raw = dataclasses.replace(setup, crystal=dataclasses.replace(setup.crystal, coupling_calibration=1.0))
    p_raw = power_for_unit_eta0(raw, (0.0, 1e4), xtol=1e-16)
    kappa = float(np.sqrt(p_raw / args.target_w))
    print(f"uncalibrated power for unit eta0: {p_raw:.6g} W")
    print(f"coupling_calibration = {kappa!r}")


if __name__ == "__main__":
    main()
