"""Incremental CHA call-graph construction for Maven artifacts.

Per-package partial call graphs are built once, stored in a
coordinate-indexed pool, and stitched on demand over any resolved
dependency set into a full call graph equivalent to whole-program
analysis.
"""

from .classfile import ClassSummary, parse_class, read_jar
from .depset import DependencyTree, ResolvedSet, fetch_jar, mediate, parse_tree
from .hierarchy import UCH, build_uch
from .model import (
    PHANTOM,
    CallKind,
    Edge,
    GlobalMethodId,
    MavenCoordinate,
    MethodRef,
    parse_coordinate,
)
from .partial import PartialCG, build_partial_cg
from .pool import CgPool, PoolStats
from .stitch import FullCG, monolithic_cha, stitch

__all__ = [
    "PHANTOM",
    "CallKind",
    "CgPool",
    "ClassSummary",
    "DependencyTree",
    "Edge",
    "FullCG",
    "GlobalMethodId",
    "MavenCoordinate",
    "MethodRef",
    "PartialCG",
    "PoolStats",
    "ResolvedSet",
    "UCH",
    "build_partial_cg",
    "build_uch",
    "fetch_jar",
    "mediate",
    "monolithic_cha",
    "parse_class",
    "parse_coordinate",
    "parse_tree",
    "read_jar",
    "stitch",
]

__version__ = "0.1.0"
