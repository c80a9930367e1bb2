"""Stitching: re-resolve every pooled call site against the UCH into a
full call graph, plus the independent monolithic CHA baseline used as the
equivalence oracle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .classfile import ClassSummary
from .hierarchy import UCH, HierarchyCycle
from .model import CallKind, Edge, GlobalMethodId, MavenCoordinate
from .partial import PartialCG
from .resolution import DynamicSite, MethodResolution, UnresolvedSite, resolve_site


class PartsMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SkippedSite:
    """A call site of a shadowed class; its code is not on the effective
    classpath, so it contributes nothing to the graph."""

    caller_owner: str
    caller_name: str
    caller_descriptor: str
    pc: int
    coordinate: MavenCoordinate


@dataclass(frozen=True)
class PhaseStats:
    pool_ms: float = 0.0
    uch_ms: float = 0.0
    stitch_ms: float = 0.0


@dataclass(frozen=True)
class FullCG:
    nodes: FrozenSet[GlobalMethodId]
    edges: FrozenSet[Edge]
    unresolved: Tuple[UnresolvedSite, ...]
    dynamic: Tuple[DynamicSite, ...]
    skipped: Tuple[SkippedSite, ...] = ()
    phase_stats: Optional[PhaseStats] = None

    def site_accounting(self) -> Tuple[int, int, int]:
        """(non-dynamic sites resolved to >=1 edge, unresolved, dynamic) —
        counted from the graph itself."""
        resolved = {(e.source, e.site_pc) for e in self.edges}
        return len(resolved), len(self.unresolved), len(self.dynamic)


def _sorted_unresolved(items: List[UnresolvedSite]) -> Tuple[UnresolvedSite, ...]:
    return tuple(sorted(items, key=lambda u: (u.caller.render(), u.pc, u.kind.value)))


def _sorted_dynamic(items: List[DynamicSite]) -> Tuple[DynamicSite, ...]:
    return tuple(sorted(items, key=lambda d: (d.caller.render(), d.pc)))


def stitch(
    uch: UCH,
    parts: Sequence[PartialCG],
    use_internal_fast_path: bool = False,
    phase_stats: Optional[PhaseStats] = None,
) -> FullCG:
    """Resolve every call site of every part against the UCH.

    The cached internal edges are consulted only when
    ``use_internal_fast_path`` is set and the site's resolution provably
    cannot be affected by the rest of the dependency set.
    """
    for part in parts:
        if part.classes and not any(name in uch.classes for name in part.classes):
            raise PartsMismatch(
                "no class of %s is present in the UCH" % part.coordinate
            )

    nodes: Set[GlobalMethodId] = set()
    for name, (coordinate, record) in uch.classes.items():
        for info in record.methods.values():
            nodes.add(GlobalMethodId(coordinate, name, info.name, info.descriptor))

    edges: Set[Edge] = set()
    unresolved: List[UnresolvedSite] = []
    dynamic: List[DynamicSite] = []
    skipped: List[SkippedSite] = []

    # the fast path is only sound when no class anywhere is shadowed
    fast = use_internal_fast_path and not uch.shadow_diagnostics

    for part in parts:
        cached: Dict[tuple, List[Edge]] = {}
        if fast:
            for e in part.internal_edges:
                key = (e.source.owner, e.source.name, e.source.descriptor, e.site_pc)
                cached.setdefault(key, []).append(e)
        for sr in part.call_sites:
            entry = uch.classes.get(sr.caller_owner)
            if entry is None or entry[0] != part.coordinate:
                skipped.append(SkippedSite(
                    sr.caller_owner, sr.caller_name, sr.caller_descriptor,
                    sr.site.pc, part.coordinate,
                ))
                continue
            caller = GlobalMethodId(
                part.coordinate, sr.caller_owner, sr.caller_name, sr.caller_descriptor
            )
            if fast and sr.site.kind is not CallKind.DYNAMIC:
                hit = cached.get(
                    (sr.caller_owner, sr.caller_name, sr.caller_descriptor, sr.site.pc)
                )
                if hit and _fast_path_sound(uch, part, sr.site.kind,
                                            sr.site.declared_target.owner):
                    edges.update(hit)
                    continue
            outcome = resolve_site(caller, sr.site, uch)
            edges.update(outcome.edges)
            if outcome.unresolved is not None:
                unresolved.append(outcome.unresolved)
            if outcome.dynamic is not None:
                dynamic.append(outcome.dynamic)

    for e in edges:
        nodes.add(e.source)
        nodes.add(e.target)

    return FullCG(
        nodes=frozenset(nodes),
        edges=frozenset(edges),
        unresolved=_sorted_unresolved(unresolved),
        dynamic=_sorted_dynamic(dynamic),
        skipped=tuple(skipped),
        phase_stats=phase_stats,
    )


def _fast_path_sound(uch: UCH, part: PartialCG, kind: CallKind, owner: str) -> bool:
    # static/special: the package-local chain walk that produced the cached
    # edge is identical in an unshadowed UCH
    if kind in (CallKind.STATIC, CallKind.SPECIAL):
        return True
    # virtual/interface: only a final, childless, package-owned receiver
    # has a provably closed subtype frontier
    entry = uch.classes.get(owner)
    return (
        entry is not None
        and entry[0] == part.coordinate
        and entry[1].is_final
        and not uch.children.get(owner)
    )


class _NaiveHierarchy:
    """Deliberately simple whole-program hierarchy used by the oracle.
    Shares no construction code with UCH; only the per-kind edge rules
    are common."""

    def __init__(self, effective: Dict[str, Tuple[MavenCoordinate, ClassSummary]]):
        self._effective = effective

    def _method(self, summary: ClassSummary, name: str, descriptor: str):
        for m in summary.methods:
            if m.name == name and m.descriptor == descriptor:
                return m
        return None

    def resolve_method(self, class_name: str, name: str, descriptor: str) -> MethodResolution:
        chain = []
        saw_phantom = False
        current = class_name
        while current is not None:
            entry = self._effective.get(current)
            if entry is None:
                saw_phantom = True
                break
            coordinate, summary = entry
            m = self._method(summary, name, descriptor)
            if m is not None:
                return MethodResolution.found(current, coordinate, m)
            chain.append(summary)
            current = summary.super_name
        pending = [i for s in chain for i in s.interfaces]
        visited = set()
        while pending:
            iface, pending = pending[0], pending[1:]
            if iface in visited:
                continue
            visited.add(iface)
            entry = self._effective.get(iface)
            if entry is None:
                saw_phantom = True
                continue
            coordinate, summary = entry
            m = self._method(summary, name, descriptor)
            if m is not None and not m.is_static:
                return MethodResolution.found(iface, coordinate, m)
            pending = pending + list(summary.interfaces)
        return MethodResolution.phantom_boundary() if saw_phantom else MethodResolution.missing()

    def subtypes(self, class_name: str):
        # brute-force fixed point, recomputed on every query; an undefined
        # receiver has an unknown subtree and keeps only itself
        if class_name not in self._effective:
            return {class_name}
        result = {class_name}
        changed = True
        while changed:
            changed = False
            for name, (_, summary) in self._effective.items():
                if name in result:
                    continue
                if summary.super_name in result or any(
                    i in result for i in summary.interfaces
                ):
                    result.add(name)
                    changed = True
        return result

    def lookup_method(self, class_name: str, name: str, descriptor: str):
        entry = self._effective.get(class_name)
        if entry is None:
            return None
        coordinate, summary = entry
        m = self._method(summary, name, descriptor)
        return (coordinate, m) if m is not None else None


def _check_naive_acyclic(effective: Dict[str, Tuple[MavenCoordinate, ClassSummary]]) -> None:
    for start in effective:
        seen = [start]
        current = start
        while True:
            entry = effective.get(current)
            if entry is None or entry[1].super_name is None:
                break
            current = entry[1].super_name
            if current in seen:
                raise HierarchyCycle(seen[seen.index(current):] + [current])
            seen.append(current)


def monolithic_cha(
    classes: Sequence[Tuple[MavenCoordinate, ClassSummary]]
) -> FullCG:
    """Whole-program CHA over all classes at once: the in-repo baseline
    that stitched output must match exactly."""
    effective: Dict[str, Tuple[MavenCoordinate, ClassSummary]] = {}
    for coordinate, summary in classes:
        if summary.name not in effective:
            effective[summary.name] = (coordinate, summary)
    _check_naive_acyclic(effective)

    hq = _NaiveHierarchy(effective)
    nodes: Set[GlobalMethodId] = set()
    edges: Set[Edge] = set()
    unresolved: List[UnresolvedSite] = []
    dynamic: List[DynamicSite] = []

    for name, (coordinate, summary) in effective.items():
        for m in summary.methods:
            nodes.add(GlobalMethodId(coordinate, name, m.name, m.descriptor))
            for site in m.call_sites:
                caller = GlobalMethodId(coordinate, name, m.name, m.descriptor)
                outcome = resolve_site(caller, site, hq)
                edges.update(outcome.edges)
                if outcome.unresolved is not None:
                    unresolved.append(outcome.unresolved)
                if outcome.dynamic is not None:
                    dynamic.append(outcome.dynamic)

    for e in edges:
        nodes.add(e.source)
        nodes.add(e.target)

    return FullCG(
        nodes=frozenset(nodes),
        edges=frozenset(edges),
        unresolved=_sorted_unresolved(unresolved),
        dynamic=_sorted_dynamic(dynamic),
    )
