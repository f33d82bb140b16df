"""Command-line entry point: ``distwcc {detect,score,preprocess,generate}``."""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
from pathlib import Path

from . import generators, metric
from .engine import EngineConfig
from .errors import ConfigError, NoConvergenceError, ParseError
from .graph import load_edge_list
from .iterate import IterationConfig
from .partition import read_partition, write_partition
from .pipeline import detect
from .preprocess import DEFAULT_AVAIL_WORKER_MEMORY, PreprocessConfig, count_triangles

EXIT_IO, EXIT_PARSE, EXIT_CONFIG, EXIT_NO_CONVERGENCE = 1, 2, 3, 4

log = logging.getLogger("distwcc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _engine_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("engine")
    g.add_argument("--workers", type=_positive_int, default=1)
    g.add_argument("--superstep-cap", type=_positive_int, default=10_000)
    g.add_argument("--byte-accounting", action="store_true",
                   help="measure per-message byte sizes in the phase report")
    g.add_argument("--vertex-size", type=_positive_int, default=8,
                   help="bytes per vertex id in message-size estimates")
    g = p.add_argument_group("preprocessing")
    g.add_argument("--avail-worker-memory", type=_positive_int, default=DEFAULT_AVAIL_WORKER_MEMORY,
                   help="bytes of message buffer per worker (default: %(default)s)")
    g.add_argument("--force-phases", type=_positive_int, default=None,
                   help="override the computed number of subphases")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distwcc", description="WCC community detection on a BSP engine.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = sub.add_parser("detect", help="detect communities in an edge list")
    d.add_argument("input", type=Path)
    d.add_argument("-o", "--output", type=Path, help="partition file (default: stdout)")
    d.add_argument("--trace", type=Path, help="write the per-iteration trace CSV here")
    d.add_argument("--init-output", type=Path, help="write the initial partitioning here")
    _engine_flags(d)
    g = d.add_argument_group("optimisation")
    g.add_argument("--evaluator", choices=("exact", "heuristic"), default="exact")
    g.add_argument("--epsilon", type=_positive_float, default=1e-3)
    g.add_argument("--patience", type=_positive_int, default=3)
    g.add_argument("--max-iterations", type=_positive_int, default=100)

    s = sub.add_parser("score", help="print the WCC of a partition file")
    s.add_argument("graph", type=Path)
    s.add_argument("partition", type=Path)

    pp = sub.add_parser("preprocess", help="count triangles and filter the graph")
    pp.add_argument("input", type=Path)
    pp.add_argument("-o", "--output-dir", type=Path, default=Path("."),
                    help="directory for filtered.txt, stats.csv and plan.json")
    _engine_flags(pp)

    gen = sub.add_parser("generate", help="write a seeded synthetic edge list")
    gen.add_argument("kind", choices=("er", "rmat", "planted"))
    gen.add_argument("-o", "--output", type=Path, help="edge list (default: stdout)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--n", type=_positive_int, default=100, help="vertices (er)")
    gen.add_argument("--p", type=float, default=0.1, help="edge probability (er)")
    gen.add_argument("--scale", type=_positive_int, default=10, help="log2 vertices (rmat)")
    gen.add_argument("--edge-factor", type=_positive_int, default=16, help="edges per vertex (rmat)")
    gen.add_argument("--sizes", default="10,10,10", help="community sizes (planted)")
    gen.add_argument("--p-in", type=float, default=0.5)
    gen.add_argument("--p-out", type=float, default=0.02)
    return parser


@contextlib.contextmanager
def _open_out(path: Path | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            yield fh


def _configs(args) -> tuple[EngineConfig, PreprocessConfig]:
    engine = EngineConfig(
        worker_count=args.workers,
        superstep_cap=args.superstep_cap,
        byte_accounting=args.byte_accounting,
        vertex_size=args.vertex_size,
    )
    return engine, PreprocessConfig(args.avail_worker_memory, args.force_phases)


def _load(path: Path):
    graph = load_edge_list(path)
    print(graph.report, file=sys.stderr)
    return graph


def format_wcc(value: float) -> str:
    text = format(value, ".12g")
    if all(ch.isdigit() or ch == "-" for ch in text):
        text += ".0"
    return text


def cmd_detect(args) -> int:
    graph = _load(args.input)
    engine, prep = _configs(args)
    iteration = IterationConfig(
        evaluator=args.evaluator,
        epsilon=args.epsilon,
        patience=args.patience,
        max_iterations=args.max_iterations,
        avail_worker_memory=args.avail_worker_memory,
    )
    result = detect(graph, engine, prep, iteration)
    with _open_out(args.output) as out:
        write_partition(graph, result.partitioning, out)
    if args.trace:
        args.trace.write_text(result.trace.to_csv(), encoding="ascii")
    if args.init_output:
        with _open_out(args.init_output) as out:
            write_partition(graph, result.init.partitioning, out)
    for key, value in result.summary().items():
        if key == "best_wcc":
            value = format_wcc(value)
        print(f"{key}: {value}", file=sys.stderr)
    return 0


def cmd_score(args) -> int:
    graph = _load(args.graph)
    with open(args.partition, encoding="ascii") as fh:
        p = read_partition(graph, fh)
    print(format_wcc(metric.global_wcc(graph, p)))
    return 0


def cmd_preprocess(args) -> int:
    graph = _load(args.input)
    engine, prep = _configs(args)
    fg = count_triangles(graph, engine, prep)
    args.output_dir.mkdir(parents=True, exist_ok=True)
    with _open_out(args.output_dir / "filtered.txt") as out:
        fg.graph.write_edge_list(out)
    with _open_out(args.output_dir / "stats.csv") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["id", "degree", "t", "vt", "cc"])
        deg = fg.graph.degrees()
        for v, ext in enumerate(graph.original_ids.tolist()):
            w.writerow([ext, int(deg[v]), int(fg.t[v]), int(fg.vt[v]), repr(float(fg.cc[v]))])
    plan = fg.plan
    report = {
        "n_phases": plan.n_phases,
        "forced": plan.forced,
        "total_payload": plan.total_payload,
        "vertex_size_bytes": plan.vertex_size_bytes,
        "worker_count": plan.worker_count,
        "avail_worker_memory": plan.avail_worker_memory,
        "phases": fg.phase_report,
    }
    (args.output_dir / "plan.json").write_text(json.dumps(report, indent=2) + "\n", encoding="ascii")
    print(
        f"vertices: {graph.vertex_count}\nedges: {graph.edge_count}\n"
        f"filtered_edges: {fg.graph.edge_count}\nsubphases: {plan.n_phases}",
        file=sys.stderr,
    )
    return 0


def cmd_generate(args) -> int:
    if args.kind == "er":
        pairs = generators.erdos_renyi(args.n, args.p, args.seed)
    elif args.kind == "rmat":
        pairs = generators.rmat(args.scale, args.edge_factor, args.seed)
    else:
        try:
            sizes = [int(s) for s in args.sizes.split(",")]
        except ValueError:
            raise ConfigError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
        pairs, _ = generators.planted_partition(sizes, args.p_in, args.p_out, args.seed)
    with _open_out(args.output) as out:
        generators.write_edges(pairs, out)
    return 0


COMMANDS = {
    "detect": cmd_detect,
    "score": cmd_score,
    "preprocess": cmd_preprocess,
    "generate": cmd_generate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"distwcc: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConfigError as exc:
        print(f"distwcc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergenceError as exc:
        print(f"distwcc: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except OSError as exc:
        print(f"distwcc: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
