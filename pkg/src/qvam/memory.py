"""Two-layer vector perceptron trained with the generalized Hebb rule.

Weights between output neuron ``i`` and input neuron ``j`` form a q x q
count block: entry ``(a, b)`` is the number of stored pairs whose key digit
``i`` is color ``a`` while pattern component ``j`` is color ``b``.  Recall
projects the local field of every output neuron onto the basis vectors
and keeps the largest projection.

All projections are multiplied by ``q`` so that the bias ``-(N/q) * c``
stays integral and the weight path and the overlap-vote path agree bit
for bit.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from .codec import Dimensions, KeyVector, QPattern, decode_keys, encode_keys

UINT32_LIMIT = 2**32


@dataclass
class OpCounter:
    """Tallies the elementary operations performed by one or more recalls."""

    accumulations: int = 0
    bias_subtractions: int = 0
    comparisons: int = 0

    @property
    def total(self) -> int:
        return self.accumulations + self.bias_subtractions + self.comparisons


@dataclass(frozen=True)
class Identification:
    key: KeyVector
    index: int
    valid: bool
    margins: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class HebbNetwork:
    """Trained memory.

    ``blocks[i, j, a, b]`` holds the Hebb counts (uint32), ``bias_counts[i, k]``
    the number of keys whose digit ``i`` is ``k``.
    """

    dims: Dimensions
    blocks: np.ndarray
    bias_counts: np.ndarray
    exclude_diagonal: bool = True
    _table: np.ndarray | None = field(default=None, repr=False)

    @property
    def active(self) -> np.ndarray:
        """Boolean (n, N) mask of blocks that take part in recall."""
        mask = np.ones((self.dims.n, self.dims.N), dtype=bool)
        if self.exclude_diagonal:
            d = min(self.dims.n, self.dims.N)
            mask[np.arange(d), np.arange(d)] = False
        return mask

    def table(self) -> np.ndarray:
        """Recall lookup table of shape (N, q, n*q): row ``(j, x)`` is the
        count vector contributed to every output neuron by input color x at j."""
        if self._table is None:
            n, N, q = self.dims.n, self.dims.N, self.dims.q
            t = self.blocks.astype(np.int64) * self.active[:, :, None, None]
            t = np.ascontiguousarray(t.transpose(1, 3, 0, 2).reshape(N, q, n * q))
            t.setflags(write=False)
            object.__setattr__(self, "_table", t)
        return self._table


def _stack_inputs(patterns, keys) -> tuple[np.ndarray, np.ndarray, int]:
    patterns = list(patterns)
    keys = list(keys)
    if not patterns:
        raise ValueError("at least one pattern is required")
    if len(patterns) != len(keys):
        raise ValueError(f"{len(patterns)} patterns but {len(keys)} keys")
    q = patterns[0].q
    N = patterns[0].N
    n = keys[0].n
    for p in patterns:
        if p.q != q or p.N != N:
            raise ValueError("patterns must share length and alphabet size")
    for k in keys:
        if k.q != q or k.n != n:
            raise ValueError("keys must share length and the patterns' alphabet size")
    X = np.stack([p.symbols for p in patterns])
    Y = np.stack([k.digits for k in keys])
    return X, Y, q


def train_arrays(
    X: np.ndarray, Y: np.ndarray, q: int, exclude_diagonal: bool = True
) -> HebbNetwork:
    """Train from an (M, N) pattern array and an (M, n) key-digit array."""
    X = np.asarray(X, dtype=np.int64)
    Y = np.asarray(Y, dtype=np.int64)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("need (M, N) patterns and (M, n) keys with equal M")
    M, N = X.shape
    n = Y.shape[1]
    if M < 1:
        raise ValueError("at least one pattern is required")
    if M >= UINT32_LIMIT:
        raise OverflowError("pattern count would overflow 32-bit counts")
    if N < 1 or n < 1:
        raise ValueError("patterns and keys need at least one component")
    if min(X.min(), Y.min()) < 0 or max(X.max(), Y.max()) >= q:
        raise ValueError(f"symbols must lie in [0, {q})")
    dims = Dimensions(N=N, M=M, q=q, n=n)

    blocks = np.empty((n, N, q, q), dtype=np.uint32)
    cell = np.arange(N, dtype=np.int64) * q * q
    for i in range(n):
        flat = cell[None, :] + Y[:, i, None] * q + X
        blocks[i] = np.bincount(flat.ravel(), minlength=N * q * q).reshape(N, q, q)
    if exclude_diagonal:
        d = min(n, N)
        blocks[np.arange(d), np.arange(d)] = 0
    bias = np.stack([np.bincount(Y[:, i], minlength=q) for i in range(n)])
    return HebbNetwork(dims, blocks, bias.astype(np.int64), exclude_diagonal)


def train(
    patterns: Sequence[QPattern],
    keys: Sequence[KeyVector],
    exclude_diagonal: bool = True,
) -> HebbNetwork:
    X, Y, q = _stack_inputs(patterns, keys)
    return train_arrays(X, Y, q, exclude_diagonal)


def merge(a: HebbNetwork, b: HebbNetwork) -> HebbNetwork:
    """Network trained on the union of the two training sets."""
    if (a.dims.N, a.dims.n, a.dims.q) != (b.dims.N, b.dims.n, b.dims.q):
        raise ValueError("networks have different shapes")
    if a.exclude_diagonal != b.exclude_diagonal:
        raise ValueError("networks disagree on diagonal exclusion")
    M = a.dims.M + b.dims.M
    if M >= UINT32_LIMIT:
        raise OverflowError("pattern count would overflow 32-bit counts")
    dims = Dimensions(N=a.dims.N, M=M, q=a.dims.q, n=a.dims.n)
    return HebbNetwork(
        dims, a.blocks + b.blocks, a.bias_counts + b.bias_counts, a.exclude_diagonal
    )


def _check_probe(net: HebbNetwork, X) -> np.ndarray:
    if isinstance(X, QPattern):
        if X.q != net.dims.q:
            raise ValueError(f"probe alphabet {X.q} != network alphabet {net.dims.q}")
        x = X.symbols
    else:
        x = np.asarray(X, dtype=np.int64)
        if x.size and (x.min() < 0 or x.max() >= net.dims.q):
            raise ValueError(f"probe symbols must lie in [0, {net.dims.q})")
    if x.shape != (net.dims.N,):
        raise ValueError(f"probe length {x.shape} != network input size {net.dims.N}")
    return x


def _field(net, x, i, scale, counter):
    q, N = net.dims.q, net.dims.N
    cols = np.flatnonzero(net.active[i])
    # one q-vector per active input neuron: column x_j of block (i, j)
    hits = net.blocks[i, cols, :, x[cols]].astype(np.int64)
    if counter is not None:
        counter.accumulations += hits.size
        counter.bias_subtractions += q
    return scale * hits.sum(axis=0) - (scale // q) * N * net.bias_counts[i]


def local_field(net: HebbNetwork, X, i: int, scale: int | None = None) -> np.ndarray:
    """Projections of the local field of output neuron ``i`` (0-based) onto
    every basis vector, multiplied by ``scale`` (default q, must be a multiple of q)."""
    x = _check_probe(net, X)
    if not 0 <= i < net.dims.n:
        raise IndexError(f"output neuron {i} outside [0, {net.dims.n})")
    scale = net.dims.q if scale is None else scale
    if scale <= 0 or scale % net.dims.q:
        raise ValueError("scale must be a positive multiple of q")
    return _field(net, x, i, scale, None)


def _argmax_with_margin(proj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Winner (lowest index on ties) and winner-minus-runner-up along the last axis."""
    win = proj.argmax(axis=-1)
    top = np.take_along_axis(proj, win[..., None], axis=-1)[..., 0]
    rest = proj.copy()
    np.put_along_axis(rest, win[..., None], np.iinfo(np.int64).min, axis=-1)
    return win, top - rest.max(axis=-1)


def _identification(digits, margins, q, M) -> Identification:
    key = KeyVector(digits, q)
    index = int(decode_keys(key.digits, q))
    return Identification(key, index, index < M, tuple(int(v) for v in margins))


def identify(
    net: HebbNetwork, X, counter: OpCounter | None = None, scale: int | None = None
) -> Identification:
    x = _check_probe(net, X)
    q = net.dims.q
    scale = q if scale is None else scale
    if scale <= 0 or scale % q:
        raise ValueError("scale must be a positive multiple of q")
    proj = np.stack([_field(net, x, i, scale, counter) for i in range(net.dims.n)])
    if counter is not None:
        counter.comparisons += net.dims.n * (q - 1)
    digits, margins = _argmax_with_margin(proj)
    return _identification(digits, margins, q, net.dims.M)


def identify_batch(net: HebbNetwork, probes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Recall many probes at once.

    Returns ``(digits, margins)``, both of shape (B, n).
    """
    probes = np.asarray(probes, dtype=np.int64)
    n, N, q = net.dims.n, net.dims.N, net.dims.q
    if probes.ndim != 2 or probes.shape[1] != N:
        raise ValueError(f"probes must have shape (B, {N})")
    table = net.table()
    acc = np.zeros((probes.shape[0], n * q), dtype=np.int64)
    for j in range(N):
        acc += table[j, probes[:, j]]
    proj = q * acc.reshape(-1, n, q) - N * net.bias_counts[None]
    return _argmax_with_margin(proj)


def overlap(X: QPattern, Z: QPattern) -> int:
    """Number of positions where the two patterns carry the same color."""
    if X.q != Z.q or X.N != Z.N:
        raise ValueError("patterns differ in length or alphabet size")
    return int(np.count_nonzero(X.symbols == Z.symbols))


def oracle_fields(
    X: np.ndarray, Y: np.ndarray, q: int, probes: np.ndarray, exclude_diagonal: bool = True
) -> np.ndarray:
    """Scaled projections computed from pattern overlaps, without weights.

    ``X`` is (M, N), ``Y`` is (M, n), ``probes`` is (B, N); returns (B, n, q).
    """
    X = np.asarray(X, dtype=np.int64)
    Y = np.asarray(Y, dtype=np.int64)
    probes = np.asarray(probes, dtype=np.int64)
    M, N = X.shape
    n = Y.shape[1]
    agree = probes[:, None, :] == X[None, :, :]  # (B, M, N)
    votes = np.repeat(agree.sum(axis=2)[:, :, None], n, axis=2)  # (B, M, n)
    if exclude_diagonal:
        d = min(n, N)
        votes[:, :, :d] -= agree[:, :, :d]
    onehot = (Y[:, :, None] == np.arange(q)).astype(np.int64)  # (M, n, q)
    counts = onehot.sum(axis=0)
    return q * np.einsum("bmi,mik->bik", votes, onehot) - N * counts[None]


def oracle_identify_batch(
    X: np.ndarray, Y: np.ndarray, q: int, probes: np.ndarray, exclude_diagonal: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    return _argmax_with_margin(oracle_fields(X, Y, q, probes, exclude_diagonal))


def oracle_identify(
    patterns: Sequence[QPattern],
    keys: Sequence[KeyVector],
    X: QPattern,
    exclude_diagonal: bool = True,
) -> Identification:
    """Matrix-free recall: each stored pattern votes for its key digits with
    weight equal to its overlap with the probe."""
    P, Y, q = _stack_inputs(patterns, keys)
    if X.q != q or X.N != P.shape[1]:
        raise ValueError("probe does not match the stored patterns")
    digits, margins = oracle_identify_batch(P, Y, q, X.symbols[None], exclude_diagonal)
    return _identification(digits[0], margins[0], q, P.shape[0])


def default_keys(M: int, dims: Dimensions) -> np.ndarray:
    """Key digits of patterns 0..M-1 when each pattern is keyed by its number."""
    return encode_keys(np.arange(M), dims.q, dims.n)


# -- QVN1 network snapshots -------------------------------------------------

NETWORK_MAGIC = b"QVN1"
_HEADER = struct.Struct("<4sIIII")


def save_network(net: HebbNetwork, fh: BinaryIO | str | Path) -> None:
    d = net.dims
    payload = (
        _HEADER.pack(NETWORK_MAGIC, d.q, d.N, d.n, d.M)
        + net.blocks.astype("<u4").tobytes(order="C")
        + net.bias_counts.astype("<u4").tobytes(order="C")
    )
    if isinstance(fh, (str, Path)):
        Path(fh).write_bytes(payload)
    else:
        fh.write(payload)


def load_network(fh: BinaryIO | str | Path) -> HebbNetwork:
    """Read a QVN1 snapshot and check its count invariants."""
    data = Path(fh).read_bytes() if isinstance(fh, (str, Path)) else fh.read()
    if len(data) < _HEADER.size:
        raise ValueError("truncated QVN1 header")
    magic, q, N, n, M = _HEADER.unpack_from(data)
    if magic != NETWORK_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {NETWORK_MAGIC!r}")
    dims = Dimensions(N=N, M=M, q=q, n=n)
    nblock = n * N * q * q
    expected = _HEADER.size + 4 * (nblock + n * q)
    if len(data) != expected:
        raise ValueError(f"QVN1 body has {len(data)} bytes, expected {expected}")
    blocks = np.frombuffer(data, "<u4", nblock, _HEADER.size).reshape(n, N, q, q)
    bias = np.frombuffer(data, "<u4", n * q, _HEADER.size + 4 * nblock).reshape(n, q)
    blocks = blocks.astype(np.uint32)
    bias = bias.astype(np.int64)

    d = min(n, N)
    diag = blocks[np.arange(d), np.arange(d)]
    exclude = not diag.any()
    net = HebbNetwork(dims, blocks, bias, exclude)
    if not (bias.sum(axis=1) == M).all():
        raise ValueError("bias counts do not sum to M")
    active = blocks[net.active].astype(np.int64)  # (n_active, q, q)
    if not (active.sum(axis=(1, 2)) == M).all():
        raise ValueError("an active block does not hold M counts")
    rows = active.sum(axis=2)
    owner = np.nonzero(net.active)[0]
    if not (rows == bias[owner]).all():
        raise ValueError("block row sums disagree with bias counts")
    return net
