"""
Recall cost does not depend on noise
====================================

Counted operations and wall-clock time per query for the perceptron and
for an exhaustive nearest-neighbour scan of the stored list.
"""

from qvam import Dimensions, ExperimentConfig, compare_engines

dims = Dimensions(N=1000, M=5000, q=32)
cfg = ExperimentConfig(dims, b_start=0.0, b_end=0.9, steps=4, trials=1, seed=0)
print(f"{'b':>5} {'perceptron ops':>15} {'scan ops':>10} {'perceptron us':>14} {'scan us':>9}  stack search")
for row in compare_engines(cfg, repeats=5):
    print(f"{row['b']:5.2f} {row['perceptron_ops']:15,} {row['baseline_ops']:10,} "
          f"{1e6 * row['perceptron_seconds']:14.0f} {1e6 * row['baseline_seconds']:9.0f}  {row['stack']}")
