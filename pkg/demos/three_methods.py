"""Reconstruct one potential by the Marchenko, Gel'fand-Levitan and Krein chains.

Run: python demos/three_methods.py
"""
import time

import numpy as np

from halfline import benchmarks, gelfand_levitan, krein, marchenko

KS = np.arange(0.0, 200.0 + 1e-9, 0.025)


def main():
    case = benchmarks.krein_case(nu=1.0, kappa=2.0)
    sd = case.scattering_data(KS)
    sf = case.spectral_function(KS)

    runs = {}
    for name, fn in (("marchenko", lambda: marchenko.invert(sd, X=5.0, dx=0.01)),
                     ("gl", lambda: gelfand_levitan.invert(sf, X=5.0, dx=0.01)),
                     ("krein", lambda: krein.invert(sd, X=5.0, dx=0.01).potential)):
        t = time.perf_counter()
        runs[name] = fn()
        print(f"{name:10s} {time.perf_counter() - t:6.2f} s")

    xs = runs["marchenko"].xs
    exact = case.q(xs)
    print("\n     x      exact   marchenko         gl      krein")
    for i in range(0, xs.size, 50):
        row = [runs[k].qs[i] for k in ("marchenko", "gl", "krein")]
        print(f"{xs[i]:6.2f} {exact[i]:10.6f} " + " ".join(f"{v:10.6f}" for v in row))
    for k, q in runs.items():
        print(f"max |q_{k} - q| = {np.max(np.abs(q.qs - exact)):.2e}")


if __name__ == "__main__":
    main()
