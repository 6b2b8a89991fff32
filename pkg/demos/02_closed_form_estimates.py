"""
Closed-form estimates at image scale
====================================

A 300 x 136 image with 256 gray levels, 100 000 stored images and 95% of
the pixels corrupted.
"""

from qvam import Dimensions, TheoryInput, capacity, critical_distortion, error_probability
from qvam.analysis import max_output_neurons, op_counts

t = TheoryInput(N=300 * 136, M=100_000, q=256, b=0.95, n=3, P0=1e-4)
P = error_probability(t)
print(f"N_e = {t.N_e:.1f} undistorted-equivalent components")
print(f"identification error ~ {P.raw:.2e}  (reliability {1 - P.clamped:.6f})")
print(f"capacity at P0 = 1e-4: {capacity(t):,.0f} patterns")
print(f"critical noise level: b_max = {critical_distortion(t.N, t.M, t.q).raw:.4f}")

value, layer = max_output_neurons(t.N_e, t.q)
print(f"output neurons: estimate {value:.2f}, use {layer}")

ops = op_counts(Dimensions(N=t.N, M=t.M, q=t.q, n=4))
print(f"operations per query: perceptron {ops['perceptron']:,} vs exhaustive scan {ops['direct_scan']:,}")

# the error falls off as exp(-N_e q^2 / 4M): doubling q is worth a lot
for q in (8, 16, 32, 64):
    e = error_probability(TheoryInput(N=500, M=1000, q=q, b=0.5))
    print(f"N=500 M=1000 b=0.5 q={q:>2}: P ~ {e.raw:.3g}{'' if e.trusted else '  (outside validity)'}")
