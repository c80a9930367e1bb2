"""Dependency sets: nearest-wins mediation over a pre-resolved dependency
tree, and artifact fetching from a Maven repository layout.

The input is a dependency tree that some external resolver already built;
POM parsing, version ranges, scopes and exclusions are out of scope.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

from .model import MalformedCoordinate, MavenCoordinate

log = logging.getLogger(__name__)

# packaging tokens recognized by the lenient 4-part coordinate parser
_PACKAGINGS = frozenset(
    {"jar", "war", "ear", "pom", "aar", "ejb", "bundle", "zip", "test-jar",
     "maven-plugin", "rar"}
)


class MalformedTree(ValueError):
    pass


class ArtifactNotFound(Exception):
    def __init__(self, coordinate: MavenCoordinate, detail: str = ""):
        super().__init__(
            "artifact not found: %s%s" % (coordinate, " (%s)" % detail if detail else "")
        )
        self.coordinate = coordinate


class TransportError(Exception):
    pass


def parse_coordinate_lenient(text: str) -> MavenCoordinate:
    """Accepts ``g:a:v`` and the 4-part ``g:a:<packaging>:v`` form, with
    the packaging token stripped."""
    parts = text.split(":")
    if len(parts) == 4 and parts[2] in _PACKAGINGS:
        parts = [parts[0], parts[1], parts[3]]
    if len(parts) != 3:
        raise MalformedCoordinate("cannot parse coordinate %r" % (text,))
    return MavenCoordinate(*parts)


@dataclass(frozen=True)
class TreeNode:
    coordinate: MavenCoordinate
    children: Tuple["TreeNode", ...] = ()


@dataclass(frozen=True)
class DependencyTree:
    root: TreeNode


@dataclass(frozen=True)
class MediationRecord:
    group_id: str
    artifact_id: str
    winner_version: str
    losers: Tuple[Tuple[str, int], ...]  # (version, depth)


@dataclass(frozen=True)
class ResolvedSet:
    """Classpath-ordered winners plus the mediation log."""

    order: Tuple[MavenCoordinate, ...]
    mediation_log: Tuple[MediationRecord, ...]


def _node_from_obj(o) -> TreeNode:
    if not isinstance(o, dict) or "coordinate" not in o:
        raise MalformedTree("tree node must be an object with 'coordinate'")
    try:
        coordinate = parse_coordinate_lenient(o["coordinate"])
    except MalformedCoordinate as exc:
        raise MalformedTree(str(exc)) from exc
    children = o.get("children", [])
    if not isinstance(children, list):
        raise MalformedTree("'children' must be a list")
    return TreeNode(coordinate, tuple(_node_from_obj(c) for c in children))


def tree_from_obj(obj) -> DependencyTree:
    return DependencyTree(_node_from_obj(obj))


def parse_tree(text: str) -> DependencyTree:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedTree("not JSON: %s" % exc) from exc
    return tree_from_obj(obj)


def mediate(tree: DependencyTree) -> ResolvedSet:
    """Nearest-wins version mediation: breadth-first from the root, the
    first encountered version of each (group, artifact) wins; equal-depth
    ties fall to the leftmost declaration."""
    winners: dict = {}  # (g, a) -> coordinate
    order: List[MavenCoordinate] = []
    losers: dict = {}  # (g, a) -> [(version, depth)]
    queue = deque([(tree.root, 0)])
    while queue:
        node, depth = queue.popleft()
        coordinate = node.coordinate
        key = (coordinate.group_id, coordinate.artifact_id)
        winner = winners.get(key)
        if winner is None:
            winners[key] = coordinate
            order.append(coordinate)
        elif coordinate.version != winner.version:
            losers.setdefault(key, []).append((coordinate.version, depth))
        for child in node.children:
            queue.append((child, depth + 1))
    records = tuple(
        MediationRecord(key[0], key[1], winners[key].version, tuple(lost))
        for key, lost in losers.items()
    )
    return ResolvedSet(tuple(order), records)


def artifact_rel_path(coordinate: MavenCoordinate) -> Path:
    return (
        Path(*coordinate.group_id.split("."))
        / coordinate.artifact_id
        / coordinate.version
        / ("%s-%s.jar" % (coordinate.artifact_id, coordinate.version))
    )


def _http_get(url: str, timeout: float) -> Optional[bytes]:
    """Returns the body, None for 404, raises TransportError otherwise."""
    import requests

    try:
        response = requests.get(url, timeout=timeout)
    except requests.RequestException as exc:
        raise TransportError("%s: %s" % (url, exc)) from exc
    if response.status_code == 404:
        return None
    if response.status_code != 200:
        raise TransportError("%s: HTTP %d" % (url, response.status_code))
    return response.content


def fetch_jar(
    coordinate: MavenCoordinate,
    source: Union[str, Path],
    cache_dir: Optional[Union[str, Path]] = None,
    timeout: float = 30.0,
    retries: int = 2,
    transport: Optional[Callable[[str, float], Optional[bytes]]] = None,
) -> bytes:
    """Read an artifact JAR from a local repository directory or a remote
    base URL. Remote fetches retry up to ``retries`` times on transient
    failure and are cached under ``cache_dir`` with atomic renames."""
    rel = artifact_rel_path(coordinate)

    if cache_dir is not None:
        cached = Path(cache_dir) / rel
        if cached.exists():
            return cached.read_bytes()

    source_text = str(source)
    if source_text.startswith(("http://", "https://")):
        url = source_text.rstrip("/") + "/" + rel.as_posix()
        get = transport or _http_get
        data = None
        last_error: Optional[Exception] = None
        for attempt in range(retries + 1):
            try:
                data = get(url, timeout)
                last_error = None
                break
            except TransportError as exc:
                last_error = exc
                if attempt < retries:
                    time.sleep(min(0.2 * (attempt + 1), 1.0))
        if last_error is not None:
            raise last_error
        if data is None:
            raise ArtifactNotFound(coordinate, url)
    else:
        path = Path(source) / rel
        try:
            data = path.read_bytes()
        except FileNotFoundError:
            raise ArtifactNotFound(coordinate, str(path)) from None

    if cache_dir is not None:
        cached = Path(cache_dir) / rel
        cached.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=cached.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, cached)
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise
    return data
