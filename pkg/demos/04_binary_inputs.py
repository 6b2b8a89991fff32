"""
Binary inputs
=============

Binary vectors are packed into r-bit words, giving q = 2**r colors, and
then stored as usual.
"""

import numpy as np

from qvam import identify, map_binary, train_arrays, unmap_binary
from qvam.codec import Dimensions
from qvam.memory import default_keys

r = 4  # 16 colors
rng = np.random.default_rng(3)
bits = rng.integers(0, 2, size=(200, 512))  # 200 vectors of 512 bits

patterns = np.stack([map_binary(v, r).symbols for v in bits])
dims = Dimensions(N=patterns.shape[1], M=len(patterns), q=2**r)
print("binary length 512 ->", dims.N, "components over", dims.q, "colors")
assert (unmap_binary(map_binary(bits[0], r), r) == bits[0]).all()

net = train_arrays(patterns, default_keys(dims.M, dims), dims.q)

# flip 20% of the bits of vector 42
noisy = bits[42].copy()
flip = rng.choice(512, size=102, replace=False)
noisy[flip] ^= 1
probe = map_binary(noisy, r)
print("components hit by the bit flips:", int((probe.symbols != patterns[42]).sum()), "of", dims.N)
print("recalled index:", identify(net, probe).index)
