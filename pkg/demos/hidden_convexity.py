"""Convexity of images of hyperplanes under quadratic maps.

Structural checks settle most families directly.  For three separable forms
the whole-space image looks convex, yet a search over hyperplanes finds
one whose image is not.
"""
import numpy as np

from aggrahull import gallery
from aggrahull.hhc import hhc_falsify, hhc_structural, hidden_convexity_falsify

rng = np.random.default_rng(0)
two = rng.standard_normal((2, 4, 4))
print("two forms:", hhc_structural(two + two.transpose(0, 2, 1)).verdict)
print("three spheres:", hhc_structural(gallery.three_spheres()).verdict)
print("linear factor family:", hhc_structural(gallery.linear_factor_family(N=6, m=3, seed=0)).verdict)

sys = gallery.separable()
print("separable forms:", hhc_structural(sys).verdict)
print("whole-space witness:", hidden_convexity_falsify(sys, trials=50) is not None)

w = hhc_falsify(sys, trials=20, seed=0)
print("hyperplane normal", w.normal, "midpoint", np.round(w.z, 6),
      f"distance to the image {w.residual:.6f} (threshold {w.threshold:.3g})")
