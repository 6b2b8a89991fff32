"""Patterns, keys and the q-ary codecs that connect them.

A pattern is a length-N row of color indices in ``[0, q)``; each index
stands for a basis vector of R^q.  A key is the pattern number written in
base q, least-significant digit first.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

MAX_Q = 65536
MAX_CHUNK = 30


def _as_symbols(values, q: int, name: str) -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise TypeError(f"{name} must hold integer color indices")
    arr = arr.astype(np.int64, copy=True)
    if arr.size and (arr.min() < 0 or arr.max() >= q):
        raise ValueError(f"{name} symbols must lie in [0, {q})")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QPattern:
    """Length-N sequence of colors over an alphabet of size ``q``."""

    symbols: np.ndarray
    q: int

    def __init__(self, symbols, q: int):
        if q < 2 or q > MAX_Q:
            raise ValueError(f"alphabet size must be in [2, {MAX_Q}], got {q}")
        object.__setattr__(self, "q", int(q))
        object.__setattr__(self, "symbols", _as_symbols(symbols, q, "pattern"))

    @property
    def N(self) -> int:
        return int(self.symbols.size)

    def __len__(self) -> int:
        return self.N

    def __eq__(self, other) -> bool:
        if not isinstance(other, QPattern):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.symbols, other.symbols)

    def __hash__(self) -> int:
        return hash((self.q, self.symbols.tobytes()))

    def __repr__(self) -> str:
        return f"QPattern({self.symbols.tolist()}, q={self.q})"


@dataclass(frozen=True, eq=False)
class KeyVector:
    """Base-q digits of a pattern number, least significant first."""

    digits: np.ndarray
    q: int

    def __init__(self, digits, q: int):
        if q < 2 or q > MAX_Q:
            raise ValueError(f"alphabet size must be in [2, {MAX_Q}], got {q}")
        object.__setattr__(self, "q", int(q))
        object.__setattr__(self, "digits", _as_symbols(digits, q, "key"))
        if self.digits.size == 0:
            raise ValueError("key needs at least one digit")

    @property
    def n(self) -> int:
        return int(self.digits.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        if not isinstance(other, KeyVector):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.digits, other.digits)

    def __hash__(self) -> int:
        return hash((self.q, self.digits.tobytes()))

    def __repr__(self) -> str:
        return f"KeyVector({self.digits.tolist()}, q={self.q})"


def required_digits(M: int, q: int) -> int:
    """Smallest n >= 1 with q**n >= M."""
    if q < 2:
        raise ValueError(f"alphabet size must be >= 2, got {q}")
    if M < 1:
        raise ValueError(f"pattern count must be >= 1, got {M}")
    n, capacity = 1, q
    while capacity < M:
        capacity *= q
        n += 1
    return n


@dataclass(frozen=True)
class Dimensions:
    """Sizes of a memory: pattern length N, key length n, count M, alphabet q.

    ``n`` defaults to :func:`required_digits`; a larger value may be passed.
    """

    N: int
    M: int
    q: int
    n: int | None = None

    def __post_init__(self):
        if self.q < 2 or self.q > MAX_Q:
            raise ValueError(f"alphabet size must be in [2, {MAX_Q}], got {self.q}")
        if self.N < 1:
            raise ValueError(f"pattern length must be >= 1, got {self.N}")
        if self.M < 1:
            raise ValueError(f"pattern count must be >= 1, got {self.M}")
        minimal = required_digits(self.M, self.q)
        if self.n is None:
            object.__setattr__(self, "n", minimal)
        elif self.n < minimal:
            raise ValueError(
                f"key length {self.n} cannot index {self.M} patterns with q={self.q}"
                f" (need {minimal})"
            )

    @property
    def key_space(self) -> int:
        return self.q**self.n


def encode_key(m: int, dims: Dimensions) -> KeyVector:
    q, n = dims.q, dims.n
    if m < 0 or m >= q**n:
        raise ValueError(f"index {m} outside [0, {q}**{n})")
    digits = []
    for _ in range(n):
        m, k = divmod(m, q)
        digits.append(k)
    return KeyVector(digits, q)


def decode_key(key: KeyVector) -> int:
    m = 0
    for k in reversed(key.digits.tolist()):
        m = m * key.q + k
    return m


def encode_keys(indices, q: int, n: int) -> np.ndarray:
    """Vectorized :func:`encode_key`: returns an (len(indices), n) digit array."""
    idx = np.asarray(indices, dtype=np.int64)
    if n * np.log2(q) >= 62:
        powers = np.array([q**i for i in range(n)], dtype=object)
        return ((idx.astype(object)[:, None] // powers) % q).astype(np.int64)
    powers = np.int64(q) ** np.arange(n, dtype=np.int64)
    return (idx[:, None] // powers) % q


def decode_keys(digits: np.ndarray, q: int) -> np.ndarray:
    """Vectorized :func:`decode_key` over the last axis of ``digits``.

    Object dtype is used when q**n does not fit in int64.
    """
    digits = np.asarray(digits)
    n = digits.shape[-1]
    if n * np.log2(q) < 62:
        powers = np.int64(q) ** np.arange(n, dtype=np.int64)
        return digits.astype(np.int64) @ powers
    powers = np.array([q**i for i in range(n)], dtype=object)
    return digits.astype(object) @ powers


def map_binary(bits: Sequence[int], r: int) -> QPattern:
    """Pack bits into r-bit words (MSB first); the result has q = 2**r."""
    if not 1 <= r <= MAX_CHUNK:
        raise ValueError(f"chunk width must be in [1, {MAX_CHUNK}], got {r}")
    b = np.asarray(bits, dtype=np.int64)
    if b.ndim != 1 or b.size == 0:
        raise ValueError("binary vector must be a non-empty 1-d sequence")
    if not np.isin(b, (0, 1)).all():
        raise ValueError("binary vector may only contain 0 and 1")
    if b.size % r:
        raise ValueError(f"length {b.size} is not divisible by chunk width {r}")
    if r > 16:
        raise ValueError(f"chunk width {r} gives q = 2**{r} > {MAX_Q}")
    weights = 1 << np.arange(r - 1, -1, -1, dtype=np.int64)
    return QPattern(b.reshape(-1, r) @ weights, 1 << r)


def unmap_binary(p: QPattern, r: int) -> np.ndarray:
    """Inverse of :func:`map_binary`."""
    if not 1 <= r <= MAX_CHUNK or p.q != 1 << r:
        raise ValueError(f"alphabet size {p.q} is not 2**{r}")
    shifts = np.arange(r - 1, -1, -1, dtype=np.int64)
    return ((p.symbols[:, None] >> shifts) & 1).reshape(-1)


# -- QVP1 pattern-set files -------------------------------------------------

PATTERN_MAGIC = b"QVP1"
_HEADER = struct.Struct("<4sIII")


def _symbol_dtype(q: int) -> np.dtype:
    return np.dtype("u1") if q <= 256 else np.dtype("<u2")


def write_patterns(fh: BinaryIO | str | Path, patterns: np.ndarray, q: int) -> None:
    """Write an (M, N) symbol array as a QVP1 pattern set."""
    patterns = np.asarray(patterns)
    if patterns.ndim != 2:
        raise ValueError("patterns must be an (M, N) array")
    if q < 2 or q > MAX_Q:
        raise ValueError(f"alphabet size must be in [2, {MAX_Q}], got {q}")
    if patterns.size and (patterns.min() < 0 or patterns.max() >= q):
        raise ValueError(f"pattern symbols must lie in [0, {q})")
    M, N = patterns.shape
    payload = _HEADER.pack(PATTERN_MAGIC, q, N, M)
    payload += patterns.astype(_symbol_dtype(q)).tobytes(order="C")
    if isinstance(fh, (str, Path)):
        Path(fh).write_bytes(payload)
    else:
        fh.write(payload)


def read_patterns(fh: BinaryIO | str | Path) -> tuple[np.ndarray, int]:
    """Read a QVP1 file; returns the (M, N) int64 symbol array and q."""
    data = Path(fh).read_bytes() if isinstance(fh, (str, Path)) else fh.read()
    if len(data) < _HEADER.size:
        raise ValueError("truncated QVP1 header")
    magic, q, N, M = _HEADER.unpack_from(data)
    if magic != PATTERN_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {PATTERN_MAGIC!r}")
    if q < 2 or q > MAX_Q:
        raise ValueError(f"alphabet size {q} out of range")
    dtype = _symbol_dtype(q)
    expected = _HEADER.size + M * N * dtype.itemsize
    if len(data) != expected:
        raise ValueError(f"QVP1 body has {len(data)} bytes, expected {expected}")
    body = np.frombuffer(data, dtype=dtype, offset=_HEADER.size, count=M * N)
    patterns = body.astype(np.int64).reshape(M, N)
    if patterns.size and patterns.max() >= q:
        raise ValueError(f"symbol out of range for q={q}")
    return patterns, q
