"""Core identifiers and graph vocabulary shared by every other module."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional, Union


class MalformedCoordinate(ValueError):
    """Raised when a Maven coordinate string cannot be parsed."""


_COORD_PART = re.compile(r"^[^\s:]+$")

# JVM method descriptor: "(" ParamType* ")" ReturnType
_FIELD_TYPE = r"\[*(?:[BCDFIJSZ]|L[^;.\[]+;)"
_METHOD_DESC = re.compile(r"^\((?:%s)*\)(?:%s|V)$" % (_FIELD_TYPE, _FIELD_TYPE))


@dataclass(frozen=True, order=True)
class MavenCoordinate:
    """Unique package identity ``groupId:artifactId:version``."""

    group_id: str
    artifact_id: str
    version: str

    def __post_init__(self):
        for part in (self.group_id, self.artifact_id, self.version):
            if not part or not _COORD_PART.match(part):
                raise MalformedCoordinate(
                    "coordinate parts must be non-empty and contain no ':' or "
                    "whitespace: %r" % (part,)
                )

    def render(self) -> str:
        return "%s:%s:%s" % (self.group_id, self.artifact_id, self.version)

    def __str__(self) -> str:
        return self.render()


def parse_coordinate(text: str) -> MavenCoordinate:
    """Parse the canonical 3-part ``groupId:artifactId:version`` form.

    The 4-part form with a packaging token is rejected here; a lenient
    parser lives in the dependency-set module.
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise MalformedCoordinate(
            "expected groupId:artifactId:version, got %r" % (text,)
        )
    return MavenCoordinate(*parts)


class _PhantomCoordinate:
    """Sentinel coordinate for classes referenced but not defined anywhere
    in the dependency set. A distinguished object, not a string, so it can
    never collide with a real coordinate."""

    _instance: Optional["_PhantomCoordinate"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def render(self) -> str:
        return "!phantom!"

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return "PHANTOM"


PHANTOM = _PhantomCoordinate()

Coordinate = Union[MavenCoordinate, _PhantomCoordinate]


def is_valid_internal_name(name: str) -> bool:
    """JVM internal binary name: '/'-separated, no '.', no edge slashes.

    Array descriptors (``[Lfoo;``) occasionally appear as declared owners
    of calls like ``clone()``; they are accepted as opaque names.
    """
    if not name or "." in name:
        return False
    if name.startswith("["):
        return True
    return not name.startswith("/") and not name.endswith("/")


def is_valid_method_descriptor(descriptor: str) -> bool:
    return bool(_METHOD_DESC.match(descriptor))


def is_valid_method_name(name: str) -> bool:
    if name in ("<init>", "<clinit>"):
        return True
    return bool(name) and not any(c in name for c in ".;[/<>")


@dataclass(frozen=True)
class MethodRef:
    """A declared call target: owning class, method name, descriptor."""

    owner: str
    name: str
    descriptor: str

    def __post_init__(self):
        if not is_valid_internal_name(self.owner):
            raise ValueError("bad internal class name: %r" % (self.owner,))
        if not is_valid_method_name(self.name):
            raise ValueError("bad method name: %r" % (self.name,))
        if not is_valid_method_descriptor(self.descriptor):
            raise ValueError("bad method descriptor: %r" % (self.descriptor,))


class CallKind(enum.Enum):
    """The five JVM invocation instructions."""

    STATIC = "STATIC"
    VIRTUAL = "VIRTUAL"
    INTERFACE = "INTERFACE"
    SPECIAL = "SPECIAL"
    DYNAMIC = "DYNAMIC"


OPCODE_TO_KIND = {
    0xB6: CallKind.VIRTUAL,
    0xB7: CallKind.SPECIAL,
    0xB8: CallKind.STATIC,
    0xB9: CallKind.INTERFACE,
    0xBA: CallKind.DYNAMIC,
}


@dataclass(frozen=True)
class GlobalMethodId:
    """Node identity in the stitched call graph: a method qualified by the
    coordinate of the package that defines its owner class."""

    coordinate: Coordinate
    owner: str
    name: str
    descriptor: str

    def render(self) -> str:
        return "%s!%s.%s%s" % (
            self.coordinate.render(), self.owner, self.name, self.descriptor,
        )

    def __str__(self) -> str:
        return self.render()

    def sort_key(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Edge:
    """A kind-tagged call edge with call-site provenance (bytecode offset)."""

    source: GlobalMethodId
    target: GlobalMethodId
    kind: CallKind
    site_pc: int

    def __post_init__(self):
        # dynamic sites never produce edges; they are recorded separately
        if self.kind is CallKind.DYNAMIC:
            raise ValueError("DYNAMIC call sites do not produce edges")

    def sort_key(self):
        return (
            self.source.render(), self.target.render(),
            self.kind.value, self.site_pc,
        )
