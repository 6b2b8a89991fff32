"""
Storing patterns and recalling their numbers
============================================

Random colored patterns go in, each keyed by its own number written in
base q.  A heavily distorted copy still comes back with the right number.
"""

import numpy as np

from qvam import Dimensions, QPattern, identify, train_arrays
from qvam.experiment import NoiseSpec, distort, generate_patterns
from qvam.memory import default_keys

# 300 patterns of 200 components, 16 colors
dims = Dimensions(N=200, M=300, q=16)
X = generate_patterns(dims.N, dims.q, dims.M, seed=1)
keys = default_keys(dims.M, dims)
print("key length n =", dims.n, "| key of pattern 123:", keys[123])

net = train_arrays(X, keys, dims.q)
print("weight blocks:", net.blocks.shape, "(n, N, q, q)")

# distort 70% of the components of pattern 123
probe = distort(QPattern(X[123], dims.q), NoiseSpec(0.7, seed=5), trial=0)
print("components still intact:", int((probe.symbols == X[123]).sum()), "of", dims.N)

result = identify(net, probe)
print("recalled key", result.key.digits, "-> index", result.index, "valid", result.valid)
print("per-digit margins (scaled):", result.margins)

# a probe with no relation to any stored pattern
junk = QPattern(np.random.default_rng(0).integers(0, dims.q, dims.N), dims.q)
print("random probe ->", identify(net, junk).index, "margins", identify(net, junk).margins)
