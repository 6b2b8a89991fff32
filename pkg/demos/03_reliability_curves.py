"""
Reliability versus noise level
==============================

Monte Carlo curves at N=500, M=1000 for q = 8, 16, 32, next to the
closed-form estimate and the analytic threshold.  Takes about a minute.

The per-digit breakdown at the end shows where errors come from when M
is far from a power of q: the most significant key digit then takes only
a few colors, each shared by many patterns, and its field is noisier
than the others.
"""

import numpy as np

from qvam import Dimensions, ExperimentConfig, critical_distortion, sweep_noise
from qvam.experiment import (
    Memory,
    crossing,
    distort_batch,
    format_csv,
    generate_patterns,
    substream,
)
from qvam.memory import identify_batch

TRIALS = 5000

for q in (8, 16, 32):
    dims = Dimensions(N=500, M=1000, q=q)
    cfg = ExperimentConfig(dims, b_start=0.0, b_end=0.95, steps=20, trials=TRIALS, seed=1)
    points = sweep_noise(cfg)
    print(f"# q={q}, n={dims.n}: 0.5 crossing {crossing(points):.3f}, "
          f"threshold estimate {critical_distortion(500, 1000, q).raw:.3f}")
    print(format_csv(points))

# digit-level error rates at b = 0.3, q = 8
dims = Dimensions(N=500, M=1000, q=8)
mem = Memory.build(generate_patterns(500, 8, 1000, seed=1), dims)
rng = substream(1, 99)
mu = rng.integers(0, dims.M, 20_000)
digits, _ = identify_batch(mem.net, distort_batch(mem.patterns[mu], 0.3, 8, rng))
print("colors used per key digit:", (mem.net.bias_counts > 0).sum(axis=1))
print("digit error rates at b=0.3:", np.round((digits != mem.keys[mu]).mean(axis=0), 4))
