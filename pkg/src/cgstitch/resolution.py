"""Per-invocation-kind edge resolution rules.

These rules are shared between on-line stitching and the monolithic
whole-program baseline; each side supplies its own hierarchy backend
through the small query surface below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Protocol, Tuple

from .classfile import CallSite
from .model import (
    PHANTOM,
    CallKind,
    Coordinate,
    Edge,
    GlobalMethodId,
    MethodRef,
)

REASON_NO_DEFINITION = "no-definition"
REASON_PHANTOM_OWNER = "phantom-owner"


@dataclass(frozen=True)
class MethodResolution:
    """Outcome of upward method resolution.

    status is one of:
      found    — a defining class was located
      phantom  — the search exited into a phantom class (ancestry unknown)
      missing  — the defined hierarchy was searched exhaustively, no match
    """

    status: str
    owner: Optional[str] = None
    coordinate: Optional[Coordinate] = None
    method: Optional[object] = None  # MethodInfo or MethodSummary

    @classmethod
    def found(cls, owner, coordinate, method) -> "MethodResolution":
        return cls("found", owner, coordinate, method)

    @classmethod
    def phantom_boundary(cls) -> "MethodResolution":
        return cls("phantom")

    @classmethod
    def missing(cls) -> "MethodResolution":
        return cls("missing")


class HierarchyQuery(Protocol):
    def resolve_method(self, class_name: str, name: str, descriptor: str) -> MethodResolution: ...

    def subtypes(self, class_name: str): ...

    def lookup_method(self, class_name: str, name: str, descriptor: str): ...


@dataclass(frozen=True)
class UnresolvedSite:
    caller: GlobalMethodId
    pc: int
    kind: CallKind
    declared_target: MethodRef
    reason: str


@dataclass(frozen=True)
class DynamicSite:
    caller: GlobalMethodId
    pc: int


@dataclass(frozen=True)
class SiteOutcome:
    edges: Tuple[Edge, ...] = ()
    unresolved: Optional[UnresolvedSite] = None
    dynamic: Optional[DynamicSite] = None


def resolve_site(caller: GlobalMethodId, site: CallSite, hq: HierarchyQuery) -> SiteOutcome:
    """Resolve one call site against a hierarchy, per its invocation kind."""
    if site.kind is CallKind.DYNAMIC:
        return SiteOutcome(dynamic=DynamicSite(caller, site.pc))

    target = site.declared_target
    res = hq.resolve_method(target.owner, target.name, target.descriptor)

    if site.kind in (CallKind.STATIC, CallKind.SPECIAL):
        # exact single-target resolution; a phantom boundary yields a
        # soundness-placeholder edge to the declared target
        if res.status == "found":
            node = GlobalMethodId(res.coordinate, res.owner, target.name, target.descriptor)
            return SiteOutcome(edges=(Edge(caller, node, site.kind, site.pc),))
        if res.status == "phantom":
            node = GlobalMethodId(PHANTOM, target.owner, target.name, target.descriptor)
            return SiteOutcome(edges=(Edge(caller, node, site.kind, site.pc),))
        return SiteOutcome(unresolved=UnresolvedSite(
            caller, site.pc, site.kind, target, REASON_NO_DEFINITION))

    # VIRTUAL / INTERFACE: the upward resolution plus every subtype of the
    # declared owner providing a concrete override
    edges: List[Edge] = []
    if res.status == "found":
        node = GlobalMethodId(res.coordinate, res.owner, target.name, target.descriptor)
        edges.append(Edge(caller, node, site.kind, site.pc))
    for sub in hq.subtypes(target.owner):
        if sub == target.owner:
            continue
        hit = hq.lookup_method(sub, target.name, target.descriptor)
        if hit is None:
            continue
        coordinate, info = hit
        if info.is_abstract or info.is_static or info.is_private:
            continue
        node = GlobalMethodId(coordinate, sub, target.name, target.descriptor)
        edges.append(Edge(caller, node, site.kind, site.pc))
    if edges:
        return SiteOutcome(edges=tuple(edges))
    reason = REASON_PHANTOM_OWNER if res.status == "phantom" else REASON_NO_DEFINITION
    return SiteOutcome(unresolved=UnresolvedSite(
        caller, site.pc, site.kind, target, reason))
