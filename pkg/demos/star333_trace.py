"""Reading the geometry of the *333 triangle off its spectrum.

The counting trace C(s) is rebuilt from about eleven thousand eigenvalues
with a quadratic window.  Its value near zero is the area, its slope the
mirror length, and its jumps and bends sit at the lengths of closed
geodesics and at distances between corners.
"""

import math

import numpy as np

from orbitrace import flatspec as fs
from orbitrace import selberg as sb

for name in ("star333", "star333-dirichlet"):
    qt = fs.standard_quotients()[name]
    spec = fs.quotient_spectrum(qt, 1e6)
    grid = np.arange(0.0, 2.5 + 0.0025, 0.005)
    curve = sb.reconstruct_trace(spec, grid, sb.Window("quadratic", 1000.0))
    print(f"{name}: {spec.total} eigenvalues below 1e6")
    for b in sb.detect_breaks(curve):
        print(f"   {b.kind:<10} at s = {b.s:.4f}  bend {b.bend_direction:+d}")
    ro = sb.readoff_features(curve, "flat", s_range=(0.05, 0.9 * math.sqrt(3) / 2))
    print(f"   area {ro.volume:.6f} (exact {qt.area:.6f}), "
          f"mirror {ro.mirror_length:+.4f}, cone weight {ro.cone_weight:.3f}\n")
