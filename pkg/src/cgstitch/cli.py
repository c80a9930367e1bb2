"""Command-line entry point.

Every command writes machine-readable output to stdout (JSON, or CSV for
``bench``) and human diagnostics to stderr. Exit codes form a stable
contract: 0 success, 1 usage error, 2 input/parse error, 3 artifact not
found, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from . import classfile, depset, jsonio
from .model import MalformedCoordinate, MavenCoordinate, parse_coordinate
from .partial import build_partial_cg
from .pool import CgPool, CorruptEntry
from .pipeline import run_stitch

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NOT_FOUND = 3
EXIT_INTERNAL = 4

POOL_ENV_VAR = "CGSTITCH_POOL"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _diag(message: str) -> None:
    sys.stderr.write(message + "\n")


def _open_pool(pool_dir: Optional[str]) -> CgPool:
    if pool_dir is None:
        pool_dir = os.environ.get(POOL_ENV_VAR)
    if pool_dir is None:
        raise _UsageError("no pool directory (use --pool or $%s)" % POOL_ENV_VAR)
    pool = CgPool(pool_dir)
    pool.load_stats()
    return pool


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileNotFoundError("cannot read %s: %s" % (path, exc)) from exc


def cmd_ingest(args) -> int:
    try:
        coordinate = parse_coordinate(args.coordinate)
    except MalformedCoordinate as exc:
        raise _UsageError(str(exc)) from exc
    pool = _open_pool(args.pool)
    try:
        data = Path(args.jar).read_bytes()
    except OSError as exc:
        raise FileNotFoundError(str(exc)) from exc
    entries, diagnostics = classfile.read_jar(data)
    for diag in diagnostics:
        _diag("skipped %s: %s" % (diag.entry_path, diag.reason))
    pcg = build_partial_cg(coordinate, [s for _, s in entries])
    pool.ingest(pcg)
    pool.save_stats()
    _emit({
        "coordinate": coordinate.render(),
        "classes": len(pcg.classes),
        "methods": sum(len(r.methods) for r in pcg.classes.values()),
        "callSites": len(pcg.call_sites),
        "internalEdges": len(pcg.internal_edges),
        "skippedEntries": len(diagnostics),
    })
    return EXIT_OK


def cmd_resolve(args) -> int:
    tree = depset.parse_tree(_read_text(args.tree))
    resolved = depset.mediate(tree)
    _emit({
        "winners": [c.render() for c in resolved.order],
        "mediationLog": [
            {
                "ga": "%s:%s" % (r.group_id, r.artifact_id),
                "winner": r.winner_version,
                "losers": [{"version": v, "depth": d} for v, d in r.losers],
            }
            for r in resolved.mediation_log
        ],
    })
    return EXIT_OK


def _load_coordinates(args) -> List[MavenCoordinate]:
    if args.tree is not None:
        resolved = depset.mediate(depset.parse_tree(_read_text(args.tree)))
        return list(resolved.order)
    coordinates = []
    for line in _read_text(args.set).splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            coordinates.append(depset.parse_coordinate_lenient(line))
    return coordinates


def cmd_stitch(args) -> int:
    pool = _open_pool(args.pool)
    coordinates = _load_coordinates(args)
    run = run_stitch(
        coordinates, pool, repo=args.repo, jobs=args.jobs,
        use_internal_fast_path=args.fast_path,
    )
    pool.save_stats()
    # phase timings are volatile, so they go to stderr; the output file
    # stays byte-identical across runs
    stats = run.cg.phase_stats
    _diag(json.dumps({
        "poolMs": round(stats.pool_ms, 3),
        "uchMs": round(stats.uch_ms, 3),
        "stitchMs": round(stats.stitch_ms, 3),
        "generations": run.generations,
    }, sort_keys=True))
    text = jsonio.full_cg_dumps(run.cg)
    Path(args.out).write_text(text + "\n", encoding="utf-8")
    _emit({
        "out": args.out,
        "nodes": len(run.cg.nodes),
        "edges": len(run.cg.edges),
        "unresolved": len(run.cg.unresolved),
        "dynamic": len(run.cg.dynamic),
        "generations": run.generations,
    })
    return EXIT_OK


_BENCH_COLUMNS = [
    "round", "tree", "deps", "poolMs", "uchMs", "stitchMs", "totalMs",
    "generationsAvoided",
]


def cmd_bench(args) -> int:
    pool = _open_pool(args.pool)
    rows = []
    for round_number in range(1, args.rounds + 1):
        round_totals = dict.fromkeys(
            ("deps", "poolMs", "uchMs", "stitchMs", "totalMs",
             "generationsAvoided"), 0
        )
        for tree_path in args.trees:
            resolved = depset.mediate(depset.parse_tree(_read_text(tree_path)))
            before = pool.stats()
            start = time.perf_counter()
            run = run_stitch(
                list(resolved.order), pool, repo=args.repo, jobs=args.jobs
            )
            total_ms = (time.perf_counter() - start) * 1000.0
            after = pool.stats()
            stats = run.cg.phase_stats
            row = {
                "round": round_number,
                "tree": Path(tree_path).name,
                "deps": len(resolved.order),
                "poolMs": round(stats.pool_ms, 1),
                "uchMs": round(stats.uch_ms, 1),
                "stitchMs": round(stats.stitch_ms, 1),
                "totalMs": round(total_ms, 1),
                "generationsAvoided": (
                    (after.requests - before.requests)
                    - (after.generations - before.generations)
                ),
            }
            rows.append(row)
            for key in round_totals:
                round_totals[key] += row[key]
        rows.append({
            "round": round_number,
            "tree": "TOTAL",
            **{k: round(v, 1) if isinstance(v, float) else v
               for k, v in round_totals.items()},
        })
    pool.save_stats()

    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=_BENCH_COLUMNS)
    writer.writeheader()
    writer.writerows(rows)
    sys.stdout.write(buffer.getvalue())

    widths = {
        c: max(len(c), *(len(str(r[c])) for r in rows)) for c in _BENCH_COLUMNS
    }
    _diag("  ".join(c.ljust(widths[c]) for c in _BENCH_COLUMNS))
    for row in rows:
        _diag("  ".join(str(row[c]).ljust(widths[c]) for c in _BENCH_COLUMNS))
    return EXIT_OK


def cmd_pool_stats(args) -> int:
    pool = _open_pool(args.pool)
    stats = pool.stats()
    _emit({
        "requests": stats.requests,
        "hits": stats.hits,
        "misses": stats.misses,
        "generations": stats.generations,
        "avoided": stats.avoided,
    })
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.listen.rpartition(":")
    app = create_app(pool_dir=args.pool, repo=args.repo)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="cgstitch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a JAR into the CG pool")
    p.add_argument("--jar", required=True)
    p.add_argument("--coordinate", required=True, metavar="G:A:V")
    p.add_argument("--pool")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("resolve", help="mediate a dependency tree")
    p.add_argument("--tree", required=True)
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("stitch", help="stitch a full CG for a dependency set")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tree")
    group.add_argument("--set", dest="set", help="flat pre-mediated list, one coordinate per line")
    p.add_argument("--pool")
    p.add_argument("--repo", help="artifact repository directory or base URL")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--fast-path", action="store_true",
                   help="reuse pooled internal edges where provably sound")
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("bench", help="phase-timing benchmark over tree files")
    p.add_argument("--trees", nargs="+", required=True)
    p.add_argument("--pool")
    p.add_argument("--repo")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("pool-stats", help="print pool statistics")
    p.add_argument("--pool")
    p.set_defaults(func=cmd_pool_stats)

    p = sub.add_parser("serve", help="run the HTTP stitching service")
    p.add_argument("--listen", default="127.0.0.1:8000", metavar="HOST:PORT")
    p.add_argument("--pool")
    p.add_argument("--repo")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        _diag("usage error: %s" % exc)
        return EXIT_USAGE
    except MalformedCoordinate as exc:
        _diag("usage error: %s" % exc)
        return EXIT_USAGE
    except depset.ArtifactNotFound as exc:
        _diag(str(exc))
        return EXIT_NOT_FOUND
    except (FileNotFoundError, depset.MalformedTree, depset.TransportError,
            classfile.NotAZip, classfile.NotAClassFile,
            classfile.TruncatedClassFile, classfile.MalformedConstantPool,
            jsonio.SchemaError, CorruptEntry) as exc:
        _diag("input error: %s" % exc)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        _diag("internal error: %s: %s" % (type(exc).__name__, exc))
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
