"""The CG pool: a persistent, coordinate-indexed store of partial call
graphs, with generation statistics and single-flight deduplication of
concurrent generation."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional

from . import jsonio
from .model import MavenCoordinate
from .partial import FORMAT_VERSION, PartialCG

log = logging.getLogger(__name__)

ENTRY_FILENAME = "partial-cg.json"
STATS_FILENAME = "pool-stats.json"


class CorruptEntry(ValueError):
    """A pool entry exists but violates the schema or its invariants.
    Reported distinctly from an absent entry."""


@dataclass(frozen=True)
class PoolStats:
    requests: int
    hits: int
    misses: int
    generations: int

    @property
    def avoided(self) -> int:
        return self.requests - self.generations


def entry_path(root: Path, coordinate: MavenCoordinate) -> Path:
    # Maven repository path convention
    return (
        root
        / Path(*coordinate.group_id.split("."))
        / coordinate.artifact_id
        / coordinate.version
        / ENTRY_FILENAME
    )


class _Flight:
    def __init__(self):
        self.done = threading.Event()
        self.result: Optional[PartialCG] = None
        self.error: Optional[BaseException] = None


class CgPool:
    """Filesystem-backed pool. Thread-safe; writes are atomic
    (temp file + rename), so cross-process readers never observe a
    half-written entry."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._counter_lock = threading.Lock()
        self._requests = 0
        self._hits = 0
        self._misses = 0
        self._generations = 0
        self._flight_lock = threading.Lock()
        self._flights: Dict[MavenCoordinate, _Flight] = {}

    def put(self, pcg: PartialCG) -> None:
        path = entry_path(self.root, pcg.coordinate)
        path.parent.mkdir(parents=True, exist_ok=True)
        text = jsonio.partial_cg_dumps(pcg)
        fd, tmp = tempfile.mkstemp(
            dir=path.parent, prefix=ENTRY_FILENAME + ".", suffix=".tmp"
        )
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise

    def _read(self, coordinate: MavenCoordinate) -> Optional[PartialCG]:
        path = entry_path(self.root, coordinate)
        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        try:
            pcg = jsonio.partial_cg_loads(text)
        except jsonio.SchemaError as exc:
            raise CorruptEntry("%s: %s" % (path, exc)) from exc
        if pcg.format_version != FORMAT_VERSION:
            # forward-compatible pool upgrade: treat as a miss
            log.warning(
                "pool entry %s has formatVersion %d (expected %d); ignoring",
                path, pcg.format_version, FORMAT_VERSION,
            )
            return None
        if pcg.coordinate != coordinate:
            raise CorruptEntry(
                "%s: coordinate %s does not match its path" % (path, pcg.coordinate)
            )
        return pcg

    def get(self, coordinate: MavenCoordinate) -> Optional[PartialCG]:
        pcg = self._read(coordinate)
        with self._counter_lock:
            self._requests += 1
            if pcg is None:
                self._misses += 1
            else:
                self._hits += 1
        return pcg

    def ensure(
        self,
        coordinate: MavenCoordinate,
        generator: Callable[[MavenCoordinate], PartialCG],
    ) -> PartialCG:
        """Return the pooled entry, generating it at most once per
        coordinate even under concurrent callers. All waiters of a flight
        share its result; a failed flight is not cached and the next call
        retries."""
        existing = self.get(coordinate)
        if existing is not None:
            return existing
        with self._flight_lock:
            flight = self._flights.get(coordinate)
            leader = flight is None
            if leader:
                flight = _Flight()
                self._flights[coordinate] = flight
        if not leader:
            flight.done.wait()
            if flight.error is not None:
                raise flight.error
            return flight.result
        try:
            # a finished flight may have stored the entry after our miss
            pcg = self._read(coordinate)
            if pcg is None:
                pcg = generator(coordinate)
                if pcg.coordinate != coordinate:
                    raise ValueError(
                        "generator produced %s for requested %s"
                        % (pcg.coordinate, coordinate)
                    )
                self.put(pcg)
                with self._counter_lock:
                    self._generations += 1
            flight.result = pcg
            return pcg
        except BaseException as exc:
            flight.error = exc
            raise
        finally:
            with self._flight_lock:
                del self._flights[coordinate]
            flight.done.set()

    def ingest(self, pcg: PartialCG) -> None:
        """Store an externally generated entry, accounted as one
        miss-and-generate request (it overwrites any existing entry)."""
        self.put(pcg)
        with self._counter_lock:
            self._requests += 1
            self._misses += 1
            self._generations += 1

    def stats(self) -> PoolStats:
        with self._counter_lock:
            return PoolStats(
                requests=self._requests,
                hits=self._hits,
                misses=self._misses,
                generations=self._generations,
            )

    # -- counter persistence, used by the one-shot CLI so statistics
    # accumulate across invocations; the long-running service keeps its
    # counters in memory

    def _stats_path(self) -> Path:
        return self.root / STATS_FILENAME

    def load_stats(self) -> None:
        try:
            obj = json.loads(self._stats_path().read_text(encoding="utf-8"))
        except (FileNotFoundError, json.JSONDecodeError):
            return
        with self._counter_lock:
            self._requests = int(obj.get("requests", 0))
            self._hits = int(obj.get("hits", 0))
            self._misses = int(obj.get("misses", 0))
            self._generations = int(obj.get("generations", 0))

    def save_stats(self) -> None:
        snapshot = self.stats()
        obj = {
            "requests": snapshot.requests,
            "hits": snapshot.hits,
            "misses": snapshot.misses,
            "generations": snapshot.generations,
        }
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(obj, fh)
            os.replace(tmp, self._stats_path())
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
