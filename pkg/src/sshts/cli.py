"""Command-line entry point: data generation, index build, querying, and
benchmark reproduction.

Exit codes: 0 success, 2 usage error, 1 runtime error. Results go to stdout,
diagnostics and timings to stderr. Every flag may also be supplied through an
optional key=value config file (--config); explicit flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench, core, index as index_mod
from .core import SshError
from .index import SshParams


def _parse_config(path: str) -> dict[str, str]:
    out = {}
    p = Path(path)
    if not p.exists():
        raise SshError(f"config file {path} does not exist")
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SshError(f"{path}: line {lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args, spec: dict):
    """Fill argument holes from the config file, then from hard defaults."""
    config = _parse_config(args.config) if getattr(args, "config", None) else {}
    for dest, (conv, default) in spec.items():
        if getattr(args, dest, None) is None:
            if dest in config:
                setattr(args, dest, conv(config[dest]))
            else:
                setattr(args, dest, default)
    return args


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


_PARAM_SPEC = {
    "W": (int, 30),
    "delta": (int, 5),
    "n": (int, 15),
    "d": (int, 20),
    "seed": (int, 0),
    "band": (float, 0.05),
    "threads": (int, 1),
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="optional key=value config file; flags override it")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sshts", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random-walk recording (f64le)")
    g.add_argument("--length", type=int, default=None)
    g.add_argument("--out", required=True)
    _add_common(g)

    b = sub.add_parser("build", help="build a hash index over a recording or dataset file")
    b.add_argument("--data", required=True)
    b.add_argument("--format", choices=["f64le", "csv"], default=None)
    b.add_argument("--t", type=int, default=None, help="subsequence length when --data is a recording")
    b.add_argument("--W", type=int, default=None)
    b.add_argument("--delta", type=int, default=None)
    b.add_argument("--n", type=int, default=None)
    b.add_argument("--d", type=int, default=None)
    b.add_argument("--band", type=float, default=None)
    b.add_argument("--no-normalize", action="store_true")
    b.add_argument("--out", required=True)
    _add_common(b)

    q = sub.add_parser("query", help="query an index with series from a file")
    q.add_argument("--index", required=True)
    q.add_argument("--query-file", required=True)
    q.add_argument("--format", choices=["f64le", "csv"], default=None)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--fallback", action="store_true",
                   help="fall back to exact search when no bucket matches")
    _add_common(q)

    e = sub.add_parser("bench", help="run a benchmark experiment, writing CSV files")
    e.add_argument("--experiment", choices=["pruning", "accuracy", "timing", "sweep"], required=True)
    e.add_argument("--out-dir", required=True)
    e.add_argument("--lengths", type=_int_list, default=None)
    e.add_argument("--num-series", type=int, default=None)
    e.add_argument("--num-queries", type=int, default=None)
    e.add_argument("--k", type=int, default=None)
    e.add_argument("--k-list", type=_int_list, default=None)
    e.add_argument("--methods", type=_str_list, default=None)
    e.add_argument("--axis", choices=["W", "delta", "n"], default=None)
    e.add_argument("--values", type=_int_list, default=None)
    e.add_argument("--length", type=int, default=None, help="series length for sweeps")
    e.add_argument("--band", type=float, default=None)
    _add_common(e)
    return parser


def _cmd_gen(args, parser) -> int:
    _resolve(args, {"length": (int, None), "seed": (int, 0)})
    if args.length is None or args.length < 1:
        parser.error(f"--length must be a positive integer, got {args.length}")
    if args.seed < 0:
        parser.error(f"--seed must be non-negative, got {args.seed}")
    walk = core.generate_random_walk(args.length, args.seed)
    ds = core.Dataset(values=walk.values[None, :], source=f"random-walk(seed={args.seed})")
    core.save_dataset(ds, args.out, fmt="f64le")
    print(f"wrote {args.length}-point recording (seed {args.seed}) to {args.out}", file=sys.stderr)
    return 0


def _cmd_build(args, parser) -> int:
    spec = dict(_PARAM_SPEC)
    spec.update({"format": (str, "f64le"), "t": (int, None)})
    _resolve(args, spec)
    ds = core.load_dataset(args.data, fmt=args.format)
    if ds.n_series == 1:
        if args.t is None:
            parser.error("--t is required when --data holds a single recording")
        if args.t < 1 or args.t > ds.length:
            parser.error(f"--t must be in [1, {ds.length}], got {args.t}")
        ds = core.make_dataset(ds.series(0), args.t, normalize=not args.no_normalize)
    elif not args.no_normalize:
        ds = core.z_normalize_dataset(ds)
    params = SshParams(W=args.W, delta=args.delta, n=args.n, d=args.d, seed=args.seed, band=args.band)
    params.validate_for_length(ds.length)
    idx = index_mod.build_index(ds, params, normalized=not args.no_normalize, threads=args.threads)
    index_mod.save_index(idx, args.out)
    print(
        f"indexed {ds.n_series} series of length {ds.length} into {params.d} tables -> {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_query(args, parser) -> int:
    _resolve(args, {"format": (str, "f64le"), "k": (int, 10)})
    if args.k < 1:
        parser.error(f"--k must be >= 1, got {args.k}")
    idx = index_mod.load_index(args.index)
    queries = core.load_dataset(args.query_file, fmt=args.format)
    if queries.length != idx.dataset.length:
        raise SshError(
            f"query length {queries.length} does not match indexed length {idx.dataset.length}"
        )
    for qi in range(queries.n_series):
        q = queries.series(qi)
        if idx.normalized:
            q = core.z_normalize(q)
        res = index_mod.query_index(idx, q, args.k, fallback_on_empty=args.fallback)
        if res.warning:
            print(f"warning: {res.warning}", file=sys.stderr)
        s = res.stats
        print(
            f"# query {qi}: status={res.status} candidates={s.candidates} "
            f"hash_pruned={s.hash_pruned_fraction:.6f} total_pruned={s.total_pruned_fraction:.6f}"
        )
        print("rank,id,distance")
        for rank, (sid, dist) in enumerate(zip(res.ids, res.distances), start=1):
            print(f"{rank},{sid},{dist:.10g}")
        print(
            f"timings: hash={res.timings['hash']:.4f}s probe={res.timings['probe']:.4f}s "
            f"rerank={res.timings['rerank']:.4f}s",
            file=sys.stderr,
        )
    return 0


def _cmd_bench(args, parser) -> int:
    spec = {
        "lengths": (_int_list, [128, 512]),
        "num_series": (int, 10_000),
        "num_queries": (int, 10),
        "k": (int, 10),
        "k_list": (_int_list, [5, 10, 20, 50]),
        "methods": (_str_list, ["ssh", "srp"]),
        "axis": (str, "n"),
        "values": (_int_list, None),
        "length": (int, 512),
        "band": (float, 0.05),
        "seed": (int, 0),
        "threads": (int, 1),
    }
    _resolve(args, spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.experiment == "pruning":
        out = out_dir / "pruning.csv"
        bench.run_pruning_experiment(
            args.lengths, n_series=args.num_series, n_queries=args.num_queries, k=args.k,
            seed=args.seed, band=args.band, threads=args.threads, out_csv=out,
        )
    elif args.experiment == "accuracy":
        out = out_dir / "accuracy.csv"
        bench.run_accuracy_experiment(
            ks=args.k_list, methods=args.methods, lengths=args.lengths,
            n_series=args.num_series, n_queries=args.num_queries,
            seed=args.seed, band=args.band, threads=args.threads, out_csv=out,
        )
    elif args.experiment == "timing":
        out = out_dir / "timing.csv"
        bench.run_timing_experiment(
            lengths=args.lengths, n_series=args.num_series, n_queries=args.num_queries,
            k=args.k, seed=args.seed, band=args.band, out_csv=out,
        )
    else:
        values = args.values
        if values is None:
            values = {"n": [2, 8, 15, 25], "W": [8, 32, 128, 256], "delta": [1, 2, 4, 8]}[args.axis]
        out = out_dir / f"sweep_{args.axis}.csv"
        bench.parameter_sweep(
            args.axis, values, t=args.length, n_series=args.num_series,
            n_queries=args.num_queries, seed=args.seed, band=args.band, out_csv=out,
        )
    print(f"wrote {out}", file=sys.stderr)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "build": _cmd_build,
    "query": _cmd_query,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args, parser)
    except SshError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
