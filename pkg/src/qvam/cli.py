"""Command-line front end: ``qvam {gen,train,identify,sweep,theory,compare}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, experiment
from .codec import Dimensions, QPattern, decode_keys, map_binary, read_patterns, write_patterns
from .memory import (
    default_keys,
    identify,
    load_network,
    oracle_identify_batch,
    save_network,
    train_arrays,
)


SCHEMA_VERSION = 1


class UsageError(Exception):
    """Precondition violation reported to the user with exit status 2."""


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _resolved(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}


def cmd_gen(args) -> None:
    patterns = experiment.generate_patterns(args.n, args.q, args.m, args.seed)
    write_patterns(args.out, patterns, args.q)
    _emit({"schema_version": SCHEMA_VERSION, "config": _resolved(args),
           "N": args.n, "q": args.q, "M": args.m, "out": str(args.out)})


def cmd_train(args) -> None:
    patterns, q = read_patterns(args.input)
    M, N = patterns.shape
    if M < 1:
        raise UsageError("pattern file holds no patterns")
    dims = Dimensions(N=N, M=M, q=q, n=args.key_digits)
    net = train_arrays(patterns, default_keys(M, dims), q, not args.keep_diagonal)
    save_network(net, args.out)
    mass = net.blocks[net.active].sum(axis=(1, 2))
    _emit({
        "schema_version": SCHEMA_VERSION,
        "config": _resolved(args),
        "dims": {"N": N, "n": dims.n, "M": M, "q": q},
        "active_blocks": int(mass.size),
        "block_mass_ok": bool((mass == M).all()),
        "block_mass_checksum": int(mass.astype(np.int64).sum()),
    })


def _read_bits(text: str) -> list[int]:
    bits = [c for c in text if not c.isspace() and c != ","]
    if any(c not in "01" for c in bits):
        raise UsageError("binary probe may only contain 0 and 1")
    return [int(c) for c in bits]


def _load_probes(args, q: int) -> np.ndarray:
    if args.binary_chunk is not None:
        if args.bits is not None:
            text = args.bits
        elif args.probe is not None:
            text = Path(args.probe).read_text()
        else:
            raise UsageError("--binary-chunk needs --bits or --probe")
        pattern = map_binary(_read_bits(text), args.binary_chunk)
        if pattern.q != q:
            raise UsageError(f"chunk width {args.binary_chunk} gives q={pattern.q}, network has q={q}")
        return pattern.symbols[None]
    if args.symbols is not None:
        return QPattern([int(s) for s in args.symbols.split(",")], q).symbols[None]
    if args.probe is not None:
        probes, pq = read_patterns(args.probe)
        if pq != q:
            raise UsageError(f"probe alphabet {pq} != network alphabet {q}")
        return probes
    raise UsageError("give a probe with --probe, --symbols or --bits")


def cmd_identify(args) -> None:
    net = load_network(args.input)
    d = net.dims
    probes = _load_probes(args, d.q)
    if probes.shape[1] != d.N:
        raise UsageError(f"probe length {probes.shape[1]} != network input size {d.N}")
    if args.engine == "matrixfree":
        if args.patterns is None:
            raise UsageError("--engine matrixfree needs --patterns")
        stored, sq = read_patterns(args.patterns)
        if stored.shape != (d.M, d.N) or sq != d.q:
            raise UsageError("pattern file does not match the network")
        digits, margins = oracle_identify_batch(
            stored, default_keys(d.M, d), d.q, probes, net.exclude_diagonal
        )
        results = [
            (dg, int(decode_keys(dg, d.q)), mg) for dg, mg in zip(digits, margins)
        ]
    else:
        results = []
        for probe in probes:
            ident = identify(net, probe)
            results.append((ident.key.digits, ident.index, ident.margins))
    for row, (digits, index, margins) in enumerate(results):
        _emit({
            "schema_version": SCHEMA_VERSION,
            "probe": row,
            "engine": args.engine,
            "key": [int(k) for k in digits],
            "index": int(index),
            "valid": bool(index < d.M),
            "margins": [int(m) for m in margins],
        })


def _sweep_config(args, dims) -> experiment.ExperimentConfig:
    if args.b is not None:
        b_start = b_end = args.b
        steps = 1
    else:
        b_start, b_end, steps = args.b_start, args.b_end, args.steps
    return experiment.ExperimentConfig(
        dims=dims,
        b_start=b_start,
        b_end=b_end,
        steps=steps,
        trials=args.trials,
        seed=args.seed,
        engine=args.engine,
        baseline=not args.no_baseline,
        noise_model=args.noise_model,
        exclude_diagonal=not args.keep_diagonal,
        threads=args.threads,
    )


def _pattern_source(args):
    if args.input is not None:
        patterns, q = read_patterns(args.input)
        M, N = patterns.shape
        return patterns, Dimensions(N=N, M=M, q=q, n=args.key_digits)
    if None in (args.n, args.q, args.m):
        raise UsageError("give --in PATTERNS or all of --n, --q, --m")
    dims = Dimensions(N=args.n, M=args.m, q=args.q, n=args.key_digits)
    return experiment.generate_patterns(dims.N, dims.q, dims.M, args.seed), dims


def cmd_sweep(args) -> None:
    patterns, dims = _pattern_source(args)
    cfg = _sweep_config(args, dims)
    points = experiment.sweep_noise(cfg, patterns)
    text = experiment.format_csv(points)
    meta = {
        "schema_version": experiment.SCHEMA_VERSION,
        "version": __version__,
        "config": cfg.as_dict(),
        "cli": _resolved(args),
        "columns": list(experiment.CSV_COLUMNS),
        "error_definition": "decoded index differs from the stored pattern's number",
        "rng": "PCG64 over SeedSequence(seed, spawn_key=(point, block)), "
               f"{experiment.TRIALS_PER_STREAM} trials per block",
    }
    if args.out is None:
        sys.stdout.write(text)
        if args.meta is not None:
            Path(args.meta).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        return
    Path(args.out).write_text(text)
    meta_path = args.meta or Path(str(args.out) + ".json")
    Path(meta_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def cmd_theory(args) -> None:
    if None in (args.n, args.q, args.m):
        raise UsageError("theory needs --n, --q and --m")
    t = analysis.TheoryInput(N=args.n, M=args.m, q=args.q, b=args.b or 0.0,
                             n=args.key_digits, P0=args.p0)
    report = analysis.theory_report(t)
    report["schema_version"] = SCHEMA_VERSION
    _emit(report)


def cmd_compare(args) -> None:
    patterns, dims = _pattern_source(args)
    cfg = _sweep_config(args, dims)
    for row in experiment.compare_engines(cfg, patterns, repeats=args.repeats):
        row["schema_version"] = SCHEMA_VERSION
        _emit(row)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qvam", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def dims_flags(p, required=False):
        p.add_argument("--n", type=int, required=required, help="pattern length N")
        p.add_argument("--q", type=int, required=required, help="alphabet size q")
        p.add_argument("--m", type=int, required=required, help="pattern count M")
        p.add_argument("--key-digits", type=int, default=None,
                       help="key length n (default: fewest digits that index M patterns)")

    p = sub.add_parser("gen", help="write M random patterns as QVP1")
    dims_flags(p, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a network from a QVP1 file")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--key-digits", type=int, default=None)
    p.add_argument("--keep-diagonal", action="store_true",
                   help="do not zero the block where output and input index coincide")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("identify", help="recall the key of one or more probes")
    p.add_argument("--in", dest="input", type=Path, required=True, help="QVN1 network")
    p.add_argument("--probe", type=Path, help="QVP1 file of probes, or a bit file with --binary-chunk")
    p.add_argument("--symbols", help="comma-separated probe colors")
    p.add_argument("--bits", help="binary probe, e.g. 0110...")
    p.add_argument("--binary-chunk", type=int, default=None, metavar="R")
    p.add_argument("--engine", choices=experiment.ENGINES, default="weights")
    p.add_argument("--patterns", type=Path, help="QVP1 patterns for the matrix-free engine")
    p.set_defaults(func=cmd_identify)

    def sweep_flags(p):
        dims_flags(p)
        p.add_argument("--in", dest="input", type=Path, help="QVP1 patterns (else random)")
        p.add_argument("--b", type=float, default=None, help="single noise level")
        p.add_argument("--b-start", type=float, default=0.0)
        p.add_argument("--b-end", type=float, default=0.95)
        p.add_argument("--steps", type=int, default=20)
        p.add_argument("--trials", type=int, default=10_000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $QVAM_THREADS or CPU count)")
        p.add_argument("--engine", choices=experiment.ENGINES, default="weights")
        p.add_argument("--noise-model", choices=experiment.NOISE_MODELS, default="different")
        p.add_argument("--keep-diagonal", action="store_true")
        p.add_argument("--no-baseline", action="store_true")

    p = sub.add_parser("sweep", help="Monte Carlo reliability over a grid of noise levels")
    sweep_flags(p)
    p.add_argument("--out", type=Path, default=None, help="CSV path (default stdout)")
    p.add_argument("--meta", type=Path, default=None,
                   help="metadata JSON path (default: <out>.json)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("theory", help="closed-form error, capacity and threshold estimates")
    dims_flags(p)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--p0", type=float, default=1e-3, help="target error for capacity")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("compare", help="operation counts: perceptron vs exhaustive scan")
    sweep_flags(p)
    p.add_argument("--repeats", type=int, default=5)
    p.set_defaults(func=cmd_compare, steps=10, b_end=0.9)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None) is None and hasattr(args, "threads"):
        args.threads = experiment.default_threads()
    try:
        args.func(args)
    except analysis.NoSignalError as exc:
        print(json.dumps({"error": "no signal", "detail": str(exc)}), file=sys.stderr)
        return 2
    except (UsageError, ValueError, OverflowError) as exc:
        print(f"qvam: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qvam: I/O error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
