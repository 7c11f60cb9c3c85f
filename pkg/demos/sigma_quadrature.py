"""
Limit variance two ways
=======================

Compares the closed-form variance of the limiting integral with adaptive
double quadrature over random parameter draws, and shows how sigma^2 moves
between its two endpoints as theta goes from 0 to 1.
"""

import numpy as np

from branchimm import sigma_squared
from branchimm.asymptotics import AsymptoticParams, zeta_variance_crosscheck

rng = np.random.default_rng(0)
for _ in range(5):
    th, a, g, b2 = rng.uniform(0, 1), rng.uniform(0, 3), rng.uniform(0, 6), rng.uniform(0.1, 4)
    p = AsymptoticParams(1, 1.0, 1.0, 1.0, 1.0, th, sigma_squared(th, a, g, b2), a, g, b2)
    closed, numeric = zeta_variance_crosscheck(p)
    print(f"theta={th:.3f} alpha={a:.3f} gamma={g:.3f} b2={b2:.3f}: "
          f"closed {closed:.10f} quad {numeric:.10f} rel {abs(closed - numeric) / closed:.1e}")

# sigma^2 is linear in theta
for th in np.linspace(0, 1, 5):
    print(f"theta={th:.2f}  sigma^2={sigma_squared(th, 0.5, 1.0, 2.0):.4f}")
