"""Regenerates free_field_band0.csv with scipy (independent of the Rust code).

Band-0 loudness of a unit line source in free field: octave 250-500 Hz,
c = 343 m/s, 8 trapezoid nodes in angular frequency, both edges included.
"""
import numpy as np
from scipy.special import hankel1

C = 343.0
LO, HI = 2 * np.pi * 250.0, 2 * np.pi * 500.0
NODES = 8

omega = np.linspace(LO, HI, NODES)
weights = np.full(NODES, (HI - LO) / (NODES - 1))
weights[[0, -1]] *= 0.5

with open("free_field_band0.csv", "w") as f:
    f.write("# distance_m,loudness_db\n")
    for r in (0.1, 0.5, 1.0, 2.46, 3.0, 5.0, 7.5):
        energy = np.abs(0.25j * hankel1(0, omega * r / C)) ** 2
        level = 10 * np.log10(np.sum(weights * energy) / (HI - LO))
        f.write(f"{r!r},{float(level)!r}\n")
