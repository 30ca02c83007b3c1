"""Estimate the support radius of a step potential from fixed-energy phase shifts.

Run: python demos/support_radius.py
"""
import numpy as np

from halfline import fixed_energy
from halfline.types import PotentialGrid


def step(a, height=1.0, n=1000):
    xs = np.linspace(0.0, a, n + 1)
    return PotentialGrid(xs, np.full(n + 1, height), a, "compact")


if __name__ == "__main__":
    for a in (0.5, 1.0, 2.0, 3.0):
        ps = fixed_energy.partial_wave_forward(step(a), L=40)
        est = fixed_energy.radius_estimate(ps)
        print(f"a = {a:3.1f}: a_hat = {est.a_hat:.4f}  (richardson {est.richardson:.4f}, "
              f"usable l {est.usable})")
