"""Boundary response of the wave equation to Jost function and potential.

The response a(t) = (kappa - nu) exp(-nu (t - 1)), t > 1, belongs to
f(k) = (k + i nu)/(k + i kappa). It is written to CSV and fed to the
``wave-reduce`` subcommand, which also runs the Marchenko inversion.

Run: python demos/wave_response.py [outdir]
"""
import sys
from pathlib import Path

import numpy as np

from halfline.cli import main as cli

NU, KAPPA = 1.0, 2.0

if __name__ == "__main__":
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "wave_out")
    out.mkdir(parents=True, exist_ok=True)
    ts = np.linspace(1.0, 41.0, 40001)
    a = (KAPPA - NU) * np.exp(-NU * (ts - 1))
    np.savetxt(out / "response.csv", np.column_stack([ts, a]), delimiter=",",
               header="t,a", comments="")
    sys.exit(cli(["wave-reduce", str(out / "response.csv"), "--invert", "--X", "2",
                  "--dx", "0.01", "--out", str(out)]))
