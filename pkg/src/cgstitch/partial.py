"""Per-package partial call graphs, the unit stored in the CG pool.

A partial CG is built from a package's classes alone, with no dependency
information: the full hierarchy fragment, every call site verbatim, and
the edges that are resolvable against the package-local hierarchy only.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

from .classfile import CallSite, ClassSummary
from .model import Edge, MavenCoordinate

FORMAT_VERSION = 1


class DuplicateClassInPackage(ValueError):
    pass


@dataclass(frozen=True)
class MethodInfo:
    name: str
    descriptor: str
    is_static: bool
    is_abstract: bool
    is_private: bool
    is_final: bool


@dataclass(frozen=True)
class ClassRecord:
    """Hierarchy facts and method table of one class, without call sites."""

    super_name: Optional[str]
    interfaces: Tuple[str, ...]
    is_interface: bool
    is_abstract: bool
    is_final: bool
    methods: Mapping[Tuple[str, str], MethodInfo]


@dataclass(frozen=True)
class SiteRecord:
    """A call site tagged with its caller method."""

    caller_owner: str
    caller_name: str
    caller_descriptor: str
    site: CallSite


@dataclass(frozen=True)
class PartialCG:
    coordinate: MavenCoordinate
    classes: Dict[str, ClassRecord] = field(default_factory=dict)
    call_sites: Tuple[SiteRecord, ...] = ()
    internal_edges: Tuple[Edge, ...] = ()
    format_version: int = FORMAT_VERSION


def class_record(summary: ClassSummary) -> ClassRecord:
    methods = {}
    for m in summary.methods:
        methods[(m.name, m.descriptor)] = MethodInfo(
            name=m.name,
            descriptor=m.descriptor,
            is_static=m.is_static,
            is_abstract=m.is_abstract,
            is_private=m.is_private,
            is_final=m.is_final,
        )
    return ClassRecord(
        super_name=summary.super_name,
        interfaces=summary.interfaces,
        is_interface=summary.is_interface,
        is_abstract=summary.is_abstract,
        is_final=summary.is_final,
        methods=methods,
    )


def build_partial_cg(
    coordinate: MavenCoordinate, classes: Sequence[ClassSummary]
) -> PartialCG:
    """Build a package's partial CG from its class summaries.

    All call sites are retained verbatim; they are the re-resolution input
    for stitching. internal_edges holds only the edges resolvable against
    the package-local hierarchy (both endpoints inside the package); they
    serve as a fast path and a test oracle, not as authoritative output.
    """
    records: Dict[str, ClassRecord] = {}
    for summary in classes:
        if summary.name in records:
            raise DuplicateClassInPackage(summary.name)
        records[summary.name] = class_record(summary)

    sites = []
    for summary in classes:
        for m in summary.methods:
            for site in m.call_sites:
                sites.append(SiteRecord(summary.name, m.name, m.descriptor, site))

    pcg = PartialCG(
        coordinate=coordinate,
        classes=records,
        call_sites=tuple(sites),
        internal_edges=(),
    )

    # function-level imports: hierarchy/stitch consume PartialCG
    from .hierarchy import build_uch
    from .stitch import stitch

    local = stitch(build_uch([pcg]), [pcg])
    internal = tuple(
        e for e in sorted(local.edges, key=Edge.sort_key)
        if e.source.coordinate == coordinate and e.target.coordinate == coordinate
    )
    return dataclasses.replace(pcg, internal_edges=internal)
