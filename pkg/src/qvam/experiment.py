"""Monte Carlo reliability curves, the exhaustive-scan baseline and
operation-count comparisons.

Randomness
----------
Every random draw comes from a PCG64 generator seeded by
``numpy.random.SeedSequence(seed, spawn_key=path)``.  Trials are grouped into
fixed blocks of :data:`TRIALS_PER_STREAM`; block ``c`` of grid point ``p``
draws from ``path = (p, c)``.  Results therefore depend only on the seed,
never on how many threads run the blocks or in which order they finish.
Synthetic pattern sets use ``SeedSequence(seed)`` itself.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist, median
from typing import Iterable, Sequence

import numpy as np

from . import analysis
from .codec import Dimensions, QPattern, decode_keys
from .memory import (
    HebbNetwork,
    OpCounter,
    default_keys,
    identify,
    identify_batch,
    oracle_identify_batch,
    train_arrays,
)

TRIALS_PER_STREAM = 2048
CSV_COLUMNS = (
    "b",
    "trials",
    "errors",
    "reliability_measured",
    "reliability_theory",
    "wilson_halfwidth",
    "perceptron_ops",
    "baseline_ops",
)
SCHEMA_VERSION = 1
ENGINES = ("weights", "matrixfree")
NOISE_MODELS = ("different", "uniform")
Z95 = NormalDist().inv_cdf(0.975)


def substream(seed: int, *path: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(path)))
    )


def generate_patterns(N: int, q: int, M: int, seed: int) -> np.ndarray:
    """M uniform random patterns as an (M, N) array."""
    Dimensions(N=N, M=M, q=q)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return rng.integers(0, q, size=(M, N), dtype=np.int64)


@dataclass(frozen=True)
class NoiseSpec:
    b: float
    seed: int = 0
    model: str = "different"

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"distortion b must lie in [0, 1], got {self.b}")
        if self.model not in NOISE_MODELS:
            raise ValueError(f"unknown noise model {self.model!r}")


def n_distorted(N: int, b: float) -> int:
    """round(b N), halves rounded up; the epsilon absorbs float noise in b."""
    return min(N, int(math.floor(b * N + 0.5 + 1e-9)))


def distort_batch(
    X: np.ndarray, b: float, q: int, rng: np.random.Generator, model: str = "different"
) -> np.ndarray:
    """Distort each row of ``X`` at round(b N) distinct positions.

    With ``model="different"`` a distorted symbol always changes color
    (uniformly among the q - 1 others); ``"uniform"`` redraws it from all q.
    """
    X = np.asarray(X, dtype=np.int64)
    B, N = X.shape
    d = n_distorted(N, b)
    out = X.copy()
    if d == 0:
        return out
    if d == N:
        pos = np.broadcast_to(np.arange(N), (B, N))
    else:
        pos = np.argpartition(rng.random((B, N)), d - 1, axis=1)[:, :d]
    rows = np.arange(B)[:, None]
    if model == "different":
        out[rows, pos] = (X[rows, pos] + rng.integers(1, q, size=(B, d))) % q
    elif model == "uniform":
        out[rows, pos] = rng.integers(0, q, size=(B, d))
    else:
        raise ValueError(f"unknown noise model {model!r}")
    return out


def distort(X: QPattern, spec: NoiseSpec, trial: int) -> QPattern:
    rng = substream(spec.seed, trial)
    row = distort_batch(X.symbols[None], spec.b, X.q, rng, spec.model)
    return QPattern(row[0], X.q)


def _pattern_array(patterns) -> np.ndarray:
    if isinstance(patterns, np.ndarray):
        P = patterns.astype(np.int64, copy=False)
    else:
        P = np.stack([p.symbols if isinstance(p, QPattern) else np.asarray(p) for p in patterns])
    if P.ndim != 2 or P.shape[0] == 0:
        raise ValueError("need a non-empty (M, N) pattern set")
    return P


def baseline_scan_identify(patterns, X, counter: OpCounter | None = None) -> int:
    """Index of the stored pattern with the largest overlap (first on ties)."""
    P = _pattern_array(patterns)
    x = X.symbols if isinstance(X, QPattern) else np.asarray(X, dtype=np.int64)
    if x.shape != (P.shape[1],):
        raise ValueError("probe length does not match the pattern set")
    eq = P == x
    if counter is not None:
        counter.comparisons += eq.size
    return int(eq.sum(axis=1).argmax())


@dataclass(frozen=True)
class CurvePoint:
    b: float
    trials: int
    errors: int
    reliability_measured: float
    reliability_theory: float
    wilson_halfwidth: float
    perceptron_ops: int = 0
    baseline_ops: int = 0

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials


def wilson_halfwidth(successes: int, trials: int, z: float = Z95) -> float:
    p = successes / trials
    denom = 1.0 + z * z / trials
    return z / denom * math.sqrt(p * (1 - p) / trials + z * z / (4.0 * trials * trials))


def theory_reliability(N: int, M: int, q: int, n: int, b: float) -> float:
    try:
        P = analysis.error_probability(analysis.TheoryInput(N=N, M=M, q=q, b=b, n=n))
    except analysis.NoSignalError:
        return 0.0
    return 1.0 - P.clamped


@dataclass(frozen=True)
class ExperimentConfig:
    dims: Dimensions
    b_start: float = 0.0
    b_end: float = 0.95
    steps: int = 20
    trials: int = 10_000
    seed: int = 0
    engine: str = "weights"
    baseline: bool = True
    noise_model: str = "different"
    exclude_diagonal: bool = True
    threads: int | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0.0 <= self.b_start <= self.b_end <= 1.0:
            raise ValueError("need 0 <= b_start <= b_end <= 1")
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        if self.noise_model not in NOISE_MODELS:
            raise ValueError(f"noise model must be one of {NOISE_MODELS}")

    def grid(self) -> np.ndarray:
        if self.steps == 1:
            return np.array([self.b_start])
        return np.linspace(self.b_start, self.b_end, self.steps)

    def as_dict(self) -> dict:
        out = asdict(self)
        out["dims"] = asdict(self.dims)
        return out


def default_threads() -> int:
    env = os.environ.get("QVAM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class Memory:
    """Stored patterns, their keys and the trained network, kept together
    so either recall engine can run."""

    patterns: np.ndarray
    keys: np.ndarray
    net: HebbNetwork
    targets: np.ndarray = field(init=False)

    def __post_init__(self):
        self.targets = decode_keys(self.keys, self.net.dims.q)

    @classmethod
    def build(cls, patterns, dims: Dimensions, keys=None, exclude_diagonal=True):
        P = _pattern_array(patterns)
        if P.shape != (dims.M, dims.N):
            raise ValueError(f"pattern array {P.shape} does not match {dims}")
        Y = default_keys(dims.M, dims) if keys is None else np.asarray(keys, dtype=np.int64)
        net = train_arrays(P, Y, dims.q, exclude_diagonal)
        return cls(P, Y, net)

    def recall(self, probes: np.ndarray, engine: str = "weights") -> np.ndarray:
        """Decoded indices for a batch of probes."""
        q = self.net.dims.q
        if engine == "weights":
            digits, _ = identify_batch(self.net, probes)
            return decode_keys(digits, q)
        if engine == "matrixfree":
            M, N = self.patterns.shape
            step = max(1, 20_000_000 // (M * N))
            parts = []
            for s in range(0, probes.shape[0], step):
                digits, _ = oracle_identify_batch(
                    self.patterns, self.keys, q, probes[s : s + step],
                    self.net.exclude_diagonal,
                )
                parts.append(decode_keys(digits, q))
            return np.concatenate(parts)
        raise ValueError(f"unknown engine {engine!r}")


def _run_block(mem: Memory, b, trials, seed, point, block, engine, model) -> int:
    rng = substream(seed, point, block)
    mu = rng.integers(0, mem.patterns.shape[0], size=trials)
    probes = distort_batch(mem.patterns[mu], b, mem.net.dims.q, rng, model)
    decoded = mem.recall(probes, engine)
    return int(np.count_nonzero(decoded != mem.targets[mu]))


def _blocks(trials: int) -> list[tuple[int, int]]:
    return [
        (c, min(TRIALS_PER_STREAM, trials - c * TRIALS_PER_STREAM))
        for c in range(-(-trials // TRIALS_PER_STREAM))
    ]


def _instrumented_ops(mem: Memory, b: float, seed: int, point: int, model: str) -> tuple[int, int]:
    """Operation counts of one recall and one exhaustive scan on a probe at noise b."""
    rng = substream(seed, point, 2**32 - 1)
    probe = distort_batch(mem.patterns[:1], b, mem.net.dims.q, rng, model)[0]
    ops = OpCounter()
    identify(mem.net, probe, ops)
    scan = OpCounter()
    baseline_scan_identify(mem.patterns, probe, scan)
    return ops.accumulations, scan.comparisons


def _make_point(mem, b, trials, errors, ops) -> CurvePoint:
    d = mem.net.dims
    return CurvePoint(
        b=float(b),
        trials=trials,
        errors=errors,
        reliability_measured=1.0 - errors / trials,
        reliability_theory=theory_reliability(d.N, d.M, d.q, d.n, float(b)),
        wilson_halfwidth=wilson_halfwidth(trials - errors, trials),
        perceptron_ops=ops[0],
        baseline_ops=ops[1],
    )


def run_point(
    mem: Memory,
    b: float,
    trials: int,
    seed: int,
    point: int = 0,
    engine: str = "weights",
    model: str = "different",
    threads: int = 1,
) -> CurvePoint:
    """Estimate recall reliability at one noise level.

    A trial draws a stored pattern uniformly, distorts it and counts an
    error unless recall returns that pattern's own number.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = _blocks(trials)
    run = lambda job: _run_block(mem, b, job[1], seed, point, job[0], engine, model)
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            errors = sum(pool.map(run, jobs))
    else:
        errors = sum(map(run, jobs))
    return _make_point(mem, b, trials, errors, _instrumented_ops(mem, b, seed, point, model))


def sweep_noise(cfg: ExperimentConfig, patterns=None) -> list[CurvePoint]:
    """Run :func:`run_point` over the config's uniform b grid.

    Without ``patterns`` a uniform random set is drawn from ``cfg.seed``.
    """
    d = cfg.dims
    if patterns is None:
        patterns = generate_patterns(d.N, d.q, d.M, cfg.seed)
    mem = Memory.build(patterns, d, exclude_diagonal=cfg.exclude_diagonal)
    grid = cfg.grid()
    threads = cfg.threads or default_threads()
    jobs = [(p, c, t) for p in range(len(grid)) for c, t in _blocks(cfg.trials)]

    def run(job):
        p, c, t = job
        return _run_block(mem, grid[p], t, cfg.seed, p, c, cfg.engine, cfg.noise_model)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            block_errors = list(pool.map(run, jobs))
    else:
        block_errors = [run(job) for job in jobs]
    errors = np.zeros(len(grid), dtype=np.int64)
    for (p, _, _), e in zip(jobs, block_errors):
        errors[p] += e

    points = []
    for p, b in enumerate(grid):
        ops = _instrumented_ops(mem, b, cfg.seed, p, cfg.noise_model)
        if not cfg.baseline:
            ops = (ops[0], 0)
        points.append(_make_point(mem, b, cfg.trials, int(errors[p]), ops))
    return points


def crossing(points: Sequence[CurvePoint], level: float = 0.5) -> float | None:
    """First b where measured reliability falls through ``level``, by linear
    interpolation between neighbouring grid points."""
    for lo, hi in zip(points, points[1:]):
        r0, r1 = lo.reliability_measured, hi.reliability_measured
        if r0 >= level > r1:
            return lo.b + (r0 - level) * (hi.b - lo.b) / (r0 - r1)
    return None


def is_monotone(points: Sequence[CurvePoint]) -> bool:
    """Nonincreasing reliability, allowing rises that stay inside the
    overlap of neighbouring 95% Wilson intervals."""
    for lo, hi in zip(points, points[1:]):
        rise = hi.reliability_measured - lo.reliability_measured
        if rise > lo.wilson_halfwidth + hi.wilson_halfwidth:
            return False
    return True


def format_csv(points: Iterable[CurvePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for pt in points:
        writer.writerow(
            [
                f"{pt.b:.6f}",
                pt.trials,
                pt.errors,
                f"{pt.reliability_measured:.6f}",
                f"{pt.reliability_theory:.6f}",
                f"{pt.wilson_halfwidth:.6f}",
                pt.perceptron_ops,
                pt.baseline_ops,
            ]
        )
    return buf.getvalue()


def parse_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


STACK_COLUMN = "not implemented (unspecified)"


def compare_engines(cfg: ExperimentConfig, patterns=None, repeats: int = 5) -> list[dict]:
    """Per-b operation counts and median wall-clock times of one recall by
    the perceptron and by the exhaustive scan."""
    d = cfg.dims
    if patterns is None:
        patterns = generate_patterns(d.N, d.q, d.M, cfg.seed)
    mem = Memory.build(patterns, d, exclude_diagonal=cfg.exclude_diagonal)
    rows = []
    for p, b in enumerate(cfg.grid()):
        rng = substream(cfg.seed, p, 2**32 - 2)
        probe = distort_batch(mem.patterns[:1], b, d.q, rng, cfg.noise_model)[0]
        ops, scan = OpCounter(), OpCounter()
        identify(mem.net, probe, ops)
        baseline_scan_identify(mem.patterns, probe, scan)
        t_perc, t_scan = [], []
        for _ in range(repeats):
            t0 = time.perf_counter()
            identify(mem.net, probe)
            t1 = time.perf_counter()
            baseline_scan_identify(mem.patterns, probe)
            t2 = time.perf_counter()
            t_perc.append(t1 - t0)
            t_scan.append(t2 - t1)
        rows.append(
            {
                "b": float(b),
                "perceptron_ops": ops.accumulations,
                "perceptron_ops_total": ops.total,
                "perceptron_ops_analytic": analysis.op_counts(d)["perceptron"],
                "baseline_ops": scan.comparisons,
                "perceptron_seconds": median(t_perc),
                "baseline_seconds": median(t_scan),
                "stack": STACK_COLUMN,
            }
        )
    return rows
