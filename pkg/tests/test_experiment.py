import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qvam.codec import Dimensions, KeyVector, QPattern
from qvam.experiment import (
    CSV_COLUMNS,
    CurvePoint,
    ExperimentConfig,
    Memory,
    NoiseSpec,
    STACK_COLUMN,
    Z95,
    baseline_scan_identify,
    compare_engines,
    crossing,
    distort,
    distort_batch,
    format_csv,
    generate_patterns,
    is_monotone,
    n_distorted,
    parse_csv,
    run_point,
    substream,
    sweep_noise,
    wilson_halfwidth,
)
from qvam.memory import OpCounter, oracle_identify


def test_distort_b_zero():
    x = QPattern(np.arange(10) % 4, 4)
    assert distort(x, NoiseSpec(0.0, seed=3), 0) == x


def test_distort_b_one():
    x = QPattern(np.arange(10) % 4, 4)
    y = distort(x, NoiseSpec(1.0, seed=3), 5)
    assert np.count_nonzero(x.symbols == y.symbols) == 0


def test_distort_counts_positions():
    x = QPattern(np.zeros(10, dtype=int), 3)
    y = distort(x, NoiseSpec(0.3, seed=1), 2)
    assert np.count_nonzero(x.symbols != y.symbols) == 3


def test_distort_deterministic():
    x = QPattern(np.arange(50) % 7, 7)
    spec = NoiseSpec(0.4, seed=99)
    assert distort(x, spec, 4) == distort(x, spec, 4)
    assert distort(x, spec, 4) != distort(x, spec, 5)


@settings(max_examples=200, deadline=None)
@given(
    st.integers(1, 60),
    st.integers(2, 20),
    st.floats(0, 1),
    st.integers(0, 2**63),
    st.integers(0, 1000),
)
def test_distort_properties(N, q, b, seed, trial):
    rng = np.random.default_rng(seed % 2**32)
    x = QPattern(rng.integers(0, q, N), q)
    y = distort(x, NoiseSpec(b, seed=seed), trial)
    assert y.N == N and y.q == q
    changed = np.count_nonzero(x.symbols != y.symbols)
    assert changed == n_distorted(N, b)
    assert n_distorted(N, b) == min(N, math.floor(b * N + 0.5 + 1e-9))


def test_n_distorted_rounding():
    assert n_distorted(10, 0.3) == 3
    assert n_distorted(100, 0.15) == 15
    assert n_distorted(10, 0.25) == 3
    assert n_distorted(7, 1.0) == 7


def test_distort_positions_uniform():
    rng = substream(0, 0)
    X = np.zeros((20000, 10), dtype=np.int64)
    out = distort_batch(X, 0.3, 5, rng)
    hits = (out != 0).mean(axis=0)
    assert np.allclose(hits, 0.3, atol=0.02)
    colors = np.bincount(out[out != 0], minlength=5)[1:] / (out != 0).sum()
    assert np.allclose(colors, 0.25, atol=0.02)


def test_uniform_noise_model():
    rng = substream(0, 0)
    X = np.zeros((20000, 10), dtype=np.int64)
    out = distort_batch(X, 0.5, 4, rng, "uniform")
    # a quarter of the redraws land on the original color
    assert (out != 0).mean() == pytest.approx(0.5 * 0.75, abs=0.01)


def brute_force_best(P, x):
    best, arg = -1, None
    for mu, row in enumerate(P):
        o = sum(int(a == b) for a, b in zip(row, x))
        if o > best:
            best, arg = o, mu
    return arg


def test_baseline_scan():
    rng = np.random.default_rng(1)
    P = rng.integers(0, 4, size=(5, 8))
    for _ in range(50):
        x = rng.integers(0, 4, 8)
        c = OpCounter()
        assert baseline_scan_identify(P, x, c) == brute_force_best(P, x)
        assert c.comparisons == 40
    assert baseline_scan_identify(P, P[3]) == brute_force_best(P, P[3])


def test_baseline_scan_ties_to_smallest():
    P = np.array([[1, 2, 3], [0, 0, 0], [0, 0, 0]])
    assert baseline_scan_identify(P, np.array([0, 0, 0])) == 1
    patterns = [QPattern(p, 4) for p in P]
    assert baseline_scan_identify(patterns, QPattern([1, 2, 3], 4)) == 0


def test_baseline_agrees_with_oracle():
    rng = np.random.default_rng(2)
    dims = Dimensions(N=40, M=10, q=6)
    P = rng.integers(0, 6, size=(10, 40))
    mem = Memory.build(P, dims)
    patterns = [QPattern(p, 6) for p in P]
    keys = [KeyVector(k, 6) for k in mem.keys]
    for t in range(100):
        probe = distort(patterns[t % 10], NoiseSpec(0.3, seed=1), t)
        ident = oracle_identify(patterns, keys, probe)
        overlaps = np.sort((P == probe.symbols).sum(axis=1))
        if ident.index == t % 10 and overlaps[-1] > overlaps[-2]:
            assert baseline_scan_identify(P, probe) == ident.index


def wilson_by_roots(k, n, z=Z95):
    """Half-width from the roots of (p_hat - p)^2 = z^2 p (1 - p) / n."""
    ph = k / n
    a = 1 + z * z / n
    b = -(2 * ph + z * z / n)
    c = ph * ph
    lo, hi = sorted(np.roots([a, b, c]).real)
    return (hi - lo) / 2


@pytest.mark.parametrize("k, n", [(0, 10), (10, 10), (95, 100), (9990, 10000), (1, 2)])
def test_wilson(k, n):
    assert wilson_halfwidth(k, n) == pytest.approx(wilson_by_roots(k, n), rel=1e-9)


def small_memory(N=100, M=50, q=8, seed=3):
    dims = Dimensions(N=N, M=M, q=q)
    return Memory.build(generate_patterns(N, q, M, seed), dims)


def test_run_point_exact_recall():
    pt = run_point(small_memory(), 0.0, 10_000, seed=5)
    assert pt.errors == 0
    assert pt.reliability_measured == 1.0
    assert pt.reliability_theory == pytest.approx(1.0, abs=1e-12)


def test_run_point_single_trial():
    mem = small_memory(N=20, M=30, q=3)
    for b in (0.0, 0.5, 1.0):
        pt = run_point(mem, b, 1, seed=0)
        assert pt.errors in (0, 1) and pt.trials == 1


def test_run_point_chance_level_above_threshold():
    dims = Dimensions(N=250, M=500, q=8)
    mem = Memory.build(generate_patterns(250, 8, 500, 4), dims)
    pt = run_point(mem, 0.85, 4000, seed=6)
    chance = 1 / dims.M
    assert abs(pt.reliability_measured - chance) <= 2 * pt.wilson_halfwidth


def test_run_point_thread_independent():
    mem = small_memory(N=60, M=200, q=4)
    a = run_point(mem, 0.3, 5000, seed=7, threads=1)
    b = run_point(mem, 0.3, 5000, seed=7, threads=3)
    assert a == b


def test_engines_agree():
    mem = small_memory(N=40, M=60, q=5)
    for b in (0.0, 0.3, 0.6):
        a = run_point(mem, b, 3000, seed=8, engine="weights")
        c = run_point(mem, b, 3000, seed=8, engine="matrixfree")
        assert a == c


def test_config_validation():
    dims = Dimensions(N=10, M=10, q=4)
    for kwargs in ({"steps": 0}, {"trials": 0}, {"b_start": 0.6, "b_end": 0.5},
                   {"b_end": 1.2}, {"engine": "gpu"}, {"noise_model": "burst"}):
        with pytest.raises(ValueError):
            ExperimentConfig(dims, **kwargs)


def test_sweep_single_step_equals_run_point():
    dims = Dimensions(N=50, M=40, q=4)
    cfg = ExperimentConfig(dims, b_start=0.3, b_end=0.9, steps=1, trials=3000, seed=2, threads=1)
    (pt,) = sweep_noise(cfg)
    mem = Memory.build(generate_patterns(50, 4, 40, 2), dims)
    assert pt == run_point(mem, 0.3, 3000, seed=2, point=0)


def test_sweep_reproducible_and_thread_independent():
    dims = Dimensions(N=60, M=120, q=4)
    base = dict(b_start=0.0, b_end=0.6, steps=4, trials=5000, seed=11)
    a = format_csv(sweep_noise(ExperimentConfig(dims, threads=1, **base)))
    b = format_csv(sweep_noise(ExperimentConfig(dims, threads=1, **base)))
    c = format_csv(sweep_noise(ExperimentConfig(dims, threads=4, **base)))
    assert a == b == c
    d = format_csv(sweep_noise(ExperimentConfig(dims, threads=1, **(base | {"seed": 12}))))
    assert d != a


def test_sweep_grid_order_and_monotone():
    dims = Dimensions(N=100, M=200, q=8)
    cfg = ExperimentConfig(dims, b_start=0.0, b_end=0.9, steps=10, trials=4000, seed=3, threads=1)
    pts = sweep_noise(cfg)
    assert [p.b for p in pts] == pytest.approx(list(np.linspace(0, 0.9, 10)))
    assert is_monotone(pts)
    assert pts[0].reliability_measured > 0.9 > pts[-1].reliability_measured


def test_crossing_interpolates():
    def pt(b, r):
        return CurvePoint(b, 100, round((1 - r) * 100), r, 0.0, 0.01)

    pts = [pt(0.0, 1.0), pt(0.1, 0.8), pt(0.2, 0.4), pt(0.3, 0.1)]
    assert crossing(pts) == pytest.approx(0.175)
    assert crossing(pts[:2]) is None


def test_is_monotone_tolerates_noise():
    def pt(b, r, w):
        return CurvePoint(b, 100, 0, r, 0.0, w)

    assert is_monotone([pt(0, 0.9, 0.02), pt(0.1, 0.92, 0.02)])
    assert not is_monotone([pt(0, 0.5, 0.01), pt(0.1, 0.8, 0.01)])


def test_csv_format():
    dims = Dimensions(N=30, M=20, q=4)
    cfg = ExperimentConfig(dims, b_start=0.0, b_end=0.5, steps=3, trials=100, seed=1, threads=1)
    text = format_csv(sweep_noise(cfg))
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 4
    rows = parse_csv(text)
    assert rows[1]["b"] == "0.250000"
    for row in rows:
        for col in ("reliability_measured", "reliability_theory", "wilson_halfwidth"):
            assert len(row[col].split(".")[1]) == 6
        assert int(row["baseline_ops"]) == 30 * 20
        assert int(row["perceptron_ops"]) == (dims.n * dims.N - min(dims.n, dims.N)) * dims.q


def test_compare_engines():
    dims = Dimensions(N=100, M=200, q=8, n=3)
    cfg = ExperimentConfig(dims, b_start=0.0, b_end=0.9, steps=3, trials=1, seed=0)
    rows = compare_engines(cfg, repeats=2)
    assert [r["b"] for r in rows] == pytest.approx([0.0, 0.45, 0.9])
    assert len({r["perceptron_ops"] for r in rows}) == 1
    assert rows[0]["perceptron_ops"] == 3 * 99 * 8
    assert rows[0]["perceptron_ops_analytic"] == 2400
    assert all(r["baseline_ops"] == 20_000 for r in rows)
    assert all(r["stack"] == STACK_COLUMN for r in rows)
