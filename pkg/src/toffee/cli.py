"""Command-line front end: ``toffee {factorize,embed,evaluate,benchmark}``.

Exit codes: 0 success, 1 validation error, 2 runtime or numerical error.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import io
from .config import SCHEMA, read_config, validate
from .embed import embeddings
from .errors import ConfigError, ToffeeError
from .factorize import ToffeeConfig, fit, toffee_fit
from .ingest import bin_timestamps, parse_edge_list
from .linkpred import grid_search, run_link_prediction
from .synthetic import random_adjacency

log = logging.getLogger("toffee")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _add_config_flags(p):
    p.add_argument("--config", help="INI-style run configuration")
    for key in SCHEMA:
        flag = "--" + key.replace("_", "-")
        p.add_argument(flag, dest=key, default=None, metavar=key.upper())
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="toffee", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("factorize", "fit a factorization and write its factors"),
        ("evaluate", "run the temporal link-prediction protocol"),
        ("benchmark", "time Toffee iterations over a grid of (n, T)"),
    ):
        _add_config_flags(sub.add_parser(name, help=text))
    emb = sub.add_parser("embed", help="export node embeddings of a saved factorization")
    emb.add_argument("factorization", help="directory written by 'factorize'")
    emb.add_argument("--out", help="output directory (default: the factorization directory)")
    emb.add_argument("-v", "--verbose", action="store_true")
    return parser


def _overrides(args):
    return {key: getattr(args, key, None) for key in SCHEMA}


def _load(cfg):
    g = parse_edge_list(cfg.path, cfg.edge_format)
    log.info("%s: %d nodes, %d events", cfg.path, g.n_nodes, g.n_events)
    return g


def cmd_factorize(cfg):
    g = _load(cfg)
    x = bin_timestamps(g, cfg.snapshot)
    model = cfg.model(g.n_nodes)
    t0 = time.perf_counter()
    f = fit(x, cfg.method, model)
    log.info("%s fitted in %.2f s, %d iterations", cfg.method, time.perf_counter() - t0, f.iterations_run)
    for path in io.save_factorization(cfg.out, f, g.labels):
        print(path)


def cmd_embed(directory, out=None):
    f, labels = io.load_factorization(directory)
    emb = embeddings(f)
    out = Path(out or directory)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "embeddings.txt"
    io.save_embeddings(path, labels, emb.vectors)
    print(path)


def cmd_evaluate(cfg):
    g = _load(cfg)
    model = cfg.model(g.n_nodes)
    kw = dict(split_fraction=cfg.split_fraction, l2=cfg.l2, threads=cfg.threads)
    if cfg.grid_search and cfg.method == "toffee":
        model, scores = grid_search(
            g, cfg.snapshot, model, cfg.operators, cfg.validation_seed, **kw
        )
        log.info("grid search picked lambda_A=%g lambda_R=%g", model.lambda_A, model.lambda_R)
    report = run_link_prediction(g, cfg.snapshot, cfg.method, model, cfg.operators, cfg.seeds, **kw)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.table(), encoding="utf-8")
    (out / "summary.jsonl").write_text(report.to_jsonl(), encoding="utf-8")
    (out / "records.jsonl").write_text(report.to_jsonl(per_seed=True), encoding="utf-8")
    sys.stdout.write(report.table())


def benchmark_rows(n_values, t_values, rank, iters, density=0.1, repeats=3):
    """Best-of-``repeats`` seconds per Toffee iteration for every ``(n, T)``."""
    rows = []
    for n in n_values:
        for T in t_values:
            x = random_adjacency(n, T, density, seed=0)
            cfg = ToffeeConfig(rank=min(rank, n), max_iters=iters, rel_tol=1e-300, seed=0)
            best = float("inf")
            for _ in range(repeats):
                t0 = time.perf_counter()
                f = toffee_fit(x, cfg)
                best = min(best, (time.perf_counter() - t0) / f.iterations_run)
            rows.append((n, T, cfg.rank, f.iterations_run, best))
    return rows


def cmd_benchmark(cfg):
    rows = benchmark_rows(
        cfg.n_values, cfg.t_values, cfg.bench_rank, cfg.bench_iters, cfg.density, cfg.repeats
    )
    lines = ["n,T,rank,iterations,seconds_per_iteration"]
    lines += [f"{n},{T},{r},{it},{sec:.6e}" for n, T, r, it, sec in rows]
    text = "\n".join(lines) + "\n"
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "benchmark.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "embed":
            try:
                cmd_embed(args.factorization, args.out)
            except FileNotFoundError as exc:
                raise ConfigError(str(exc)) from None
            return EXIT_OK
        cfg = read_config(args.config, _overrides(args))
        validate(cfg, need_data=args.command != "benchmark")
    except ConfigError as exc:
        print(f"toffee: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ToffeeError as exc:
        print(f"toffee: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    command = {"factorize": cmd_factorize, "evaluate": cmd_evaluate, "benchmark": cmd_benchmark}
    try:
        with threadpool_limits(cfg.threads):
            command[args.command](cfg)
    except (ToffeeError, ValueError, OSError) as exc:
        print(f"toffee: error: {exc}", file=sys.stderr)
        for note in getattr(exc, "__notes__", ()):
            print(f"  {note}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
