"""The end-to-end stitch pipeline shared by the CLI and the HTTP service:
ensure every coordinate in the pool, build the UCH, stitch."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

from .classfile import read_jar
from .depset import fetch_jar
from .hierarchy import UCH, build_uch
from .model import MavenCoordinate
from .partial import PartialCG, build_partial_cg
from .pool import CgPool
from .stitch import FullCG, PhaseStats, stitch


def jar_generator(
    repo: Union[str, Path], cache_dir: Optional[Union[str, Path]] = None
):
    """Pool generator: fetch the JAR, parse its classes, build the
    partial CG."""

    def generate(coordinate: MavenCoordinate) -> PartialCG:
        data = fetch_jar(coordinate, repo, cache_dir=cache_dir)
        entries, _ = read_jar(data)
        return build_partial_cg(coordinate, [summary for _, summary in entries])

    return generate


@dataclass(frozen=True)
class StitchRun:
    cg: FullCG
    uch: UCH
    generations: int  # generations performed by this run


def run_stitch(
    coordinates: Sequence[MavenCoordinate],
    pool: CgPool,
    repo: Optional[Union[str, Path]] = None,
    cache_dir: Optional[Union[str, Path]] = None,
    jobs: int = 1,
    use_internal_fast_path: bool = False,
) -> StitchRun:
    """Stitch a full CG for an ordered (classpath-order) coordinate list.

    Missing pool entries are generated from ``repo``; with no repo, a
    missing entry surfaces as ArtifactNotFound via the generator.
    """
    generator = jar_generator(repo if repo is not None else ".", cache_dir)
    generations_before = pool.stats().generations

    t0 = time.perf_counter()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            parts = list(executor.map(
                lambda c: pool.ensure(c, generator), coordinates
            ))
    else:
        parts = [pool.ensure(c, generator) for c in coordinates]
    t1 = time.perf_counter()
    uch = build_uch(parts)
    t2 = time.perf_counter()
    cg = stitch(uch, parts, use_internal_fast_path=use_internal_fast_path)
    t3 = time.perf_counter()

    stats = PhaseStats(
        pool_ms=(t1 - t0) * 1000.0,
        uch_ms=(t2 - t1) * 1000.0,
        stitch_ms=(t3 - t2) * 1000.0,
    )
    cg = FullCG(
        nodes=cg.nodes,
        edges=cg.edges,
        unresolved=cg.unresolved,
        dynamic=cg.dynamic,
        skipped=cg.skipped,
        phase_stats=stats,
    )
    return StitchRun(
        cg=cg, uch=uch,
        generations=pool.stats().generations - generations_before,
    )
