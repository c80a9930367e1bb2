"""Universal Class Hierarchy: the merged hierarchy of one resolved
dependency set, answering subtype and method-resolution queries."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .model import MavenCoordinate
from .partial import ClassRecord, MethodInfo, PartialCG
from .resolution import MethodResolution


class HierarchyCycle(ValueError):
    def __init__(self, cycle: Sequence[str]):
        super().__init__("class hierarchy cycle: " + " -> ".join(cycle))
        self.cycle = tuple(cycle)


@dataclass(frozen=True)
class ShadowDiagnostic:
    """Two packages defined the same class; the first on the classpath wins."""

    class_name: str
    winner: MavenCoordinate
    loser: MavenCoordinate


class UCH:
    """Immutable after construction; queries are safe to run in parallel."""

    def __init__(
        self,
        classes: Dict[str, Tuple[MavenCoordinate, ClassRecord]],
        children: Dict[str, Set[str]],
        phantoms: FrozenSet[str],
        shadow_diagnostics: Tuple[ShadowDiagnostic, ...],
    ):
        self.classes = classes
        self.children = children
        self.phantoms = phantoms
        self.shadow_diagnostics = shadow_diagnostics
        self._subtype_cache: Dict[str, FrozenSet[str]] = {}

    def defining_coordinate(self, class_name: str) -> Optional[MavenCoordinate]:
        entry = self.classes.get(class_name)
        return entry[0] if entry else None

    def subtypes(self, class_name: str) -> FrozenSet[str]:
        """Reflexive-transitive closure over extends/implements children.
        Phantom or unknown classes have only themselves."""
        cached = self._subtype_cache.get(class_name)
        if cached is not None:
            return cached
        result = {class_name}
        stack = [class_name]
        while stack:
            for child in self.children.get(stack.pop(), ()):
                if child not in result:
                    result.add(child)
                    stack.append(child)
        frozen = frozenset(result)
        self._subtype_cache[class_name] = frozen
        return frozen

    def lookup_method(
        self, class_name: str, name: str, descriptor: str
    ) -> Optional[Tuple[MavenCoordinate, MethodInfo]]:
        entry = self.classes.get(class_name)
        if entry is None:
            return None
        coordinate, record = entry
        info = record.methods.get((name, descriptor))
        return (coordinate, info) if info is not None else None

    def resolve_method(self, class_name: str, name: str, descriptor: str) -> MethodResolution:
        """Upward method resolution: the receiver class, then its superclass
        chain, then superinterfaces breadth-first in declaration order.
        A chain that exits into a phantom stops climbing (the phantom's
        ancestry is unknown); interfaces collected so far are still
        searched, and an unmatched search that touched a phantom reports
        the phantom boundary rather than a plain miss."""
        key = (name, descriptor)
        chain: List[ClassRecord] = []
        hit_phantom = False
        current: Optional[str] = class_name
        while current is not None:
            entry = self.classes.get(current)
            if entry is None:
                # unknown ancestry; fall through to the interfaces already seen
                hit_phantom = True
                break
            coordinate, record = entry
            info = record.methods.get(key)
            if info is not None:
                return MethodResolution.found(current, coordinate, info)
            chain.append(record)
            current = record.super_name

        queue: List[str] = []
        for record in chain:
            queue.extend(record.interfaces)
        seen: Set[str] = set()
        i = 0
        while i < len(queue):
            iface = queue[i]
            i += 1
            if iface in seen:
                continue
            seen.add(iface)
            entry = self.classes.get(iface)
            if entry is None:
                hit_phantom = True
                continue
            coordinate, record = entry
            info = record.methods.get(key)
            if info is not None and not info.is_static:
                return MethodResolution.found(iface, coordinate, info)
            queue.extend(record.interfaces)
        if hit_phantom:
            return MethodResolution.phantom_boundary()
        return MethodResolution.missing()

    def resolve_upwards(
        self, class_name: str, name: str, descriptor: str
    ) -> Optional[Tuple[str, bool]]:
        res = self.resolve_method(class_name, name, descriptor)
        if res.status != "found":
            return None
        return res.owner, res.method.is_abstract


def _check_acyclic(classes: Dict[str, Tuple[MavenCoordinate, ClassRecord]]) -> None:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in classes}

    def parents(name: str) -> Iterable[str]:
        record = classes[name][1]
        if record.super_name is not None and record.super_name in classes:
            yield record.super_name
        for iface in record.interfaces:
            if iface in classes:
                yield iface

    for start in classes:
        if color[start] != WHITE:
            continue
        stack: List[Tuple[str, Iterable[str]]] = [(start, iter(parents(start)))]
        color[start] = GREY
        path = [start]
        while stack:
            name, it = stack[-1]
            advanced = False
            for parent in it:
                if color[parent] == GREY:
                    cycle_start = path.index(parent)
                    raise HierarchyCycle(path[cycle_start:] + [parent])
                if color[parent] == WHITE:
                    color[parent] = GREY
                    path.append(parent)
                    stack.append((parent, iter(parents(parent))))
                    advanced = True
                    break
            if not advanced:
                color[name] = BLACK
                path.pop()
                stack.pop()


def build_uch(parts: Sequence[PartialCG]) -> UCH:
    """Merge partial CGs (in classpath order) into one hierarchy.

    On duplicate class names the first definition wins and the shadowing
    is recorded. Every referenced-but-undefined class becomes a phantom.
    """
    classes: Dict[str, Tuple[MavenCoordinate, ClassRecord]] = {}
    shadows: List[ShadowDiagnostic] = []
    referenced: Set[str] = set()

    for part in parts:
        for name, record in part.classes.items():
            existing = classes.get(name)
            if existing is not None:
                shadows.append(ShadowDiagnostic(name, existing[0], part.coordinate))
                continue
            classes[name] = (part.coordinate, record)
        for record in part.classes.values():
            if record.super_name is not None:
                referenced.add(record.super_name)
            referenced.update(record.interfaces)
        for sr in part.call_sites:
            if sr.site.declared_target is not None:
                referenced.add(sr.site.declared_target.owner)

    _check_acyclic(classes)

    children: Dict[str, Set[str]] = {}
    for name, (_, record) in classes.items():
        supers = list(record.interfaces)
        if record.super_name is not None:
            supers.append(record.super_name)
        for parent in supers:
            if parent in classes:
                children.setdefault(parent, set()).add(name)

    phantoms = frozenset(referenced - classes.keys())
    return UCH(classes, children, phantoms, tuple(shadows))
