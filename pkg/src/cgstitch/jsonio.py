"""Canonical JSON wire formats.

All identities use their canonical text forms. Serialization is
deterministic: object keys sorted, order-free lists sorted by the text
form of their identity, no floats. Byte-identical output enables
determinism tests and content hashing.
"""

from __future__ import annotations

import json
from typing import Dict

from .classfile import CallSite
from .model import (
    PHANTOM,
    CallKind,
    Coordinate,
    Edge,
    GlobalMethodId,
    MethodRef,
    parse_coordinate,
)
from .partial import ClassRecord, MethodInfo, PartialCG, SiteRecord
from .stitch import FullCG


class SchemaError(ValueError):
    pass


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _method_ref_obj(ref: MethodRef) -> dict:
    return {"owner": ref.owner, "name": ref.name, "descriptor": ref.descriptor}


def _method_ref_from(obj: dict) -> MethodRef:
    try:
        return MethodRef(obj["owner"], obj["name"], obj["descriptor"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("bad method reference: %s" % exc) from exc


def _gmid_render(g: GlobalMethodId) -> str:
    return g.render()


def _gmid_parse(text: str) -> GlobalMethodId:
    if text.startswith("!phantom!!"):
        coord: Coordinate = PHANTOM
        rest = text[len("!phantom!!"):]
    else:
        coord_text, _, rest = text.partition("!")
        coord = parse_coordinate(coord_text)
    owner, _, sig = rest.partition(".")
    paren = sig.index("(")
    return GlobalMethodId(coord, owner, sig[:paren], sig[paren:])


def _edge_obj(e: Edge) -> dict:
    return {
        "source": e.source.render(),
        "target": e.target.render(),
        "kind": e.kind.value,
        "pc": e.site_pc,
    }


def partial_cg_to_obj(pcg: PartialCG) -> dict:
    classes: Dict[str, dict] = {}
    for name, rec in pcg.classes.items():
        classes[name] = {
            "super": rec.super_name,
            "interfaces": list(rec.interfaces),
            "flags": {
                "interface": rec.is_interface,
                "abstract": rec.is_abstract,
                "final": rec.is_final,
            },
            "methods": [
                {
                    "name": m.name,
                    "descriptor": m.descriptor,
                    "flags": {
                        "static": m.is_static,
                        "abstract": m.is_abstract,
                        "private": m.is_private,
                        "final": m.is_final,
                    },
                }
                for m in sorted(
                    rec.methods.values(), key=lambda m: (m.name, m.descriptor)
                )
            ],
        }
    call_sites = [
        {
            "caller": {
                "owner": sr.caller_owner,
                "name": sr.caller_name,
                "descriptor": sr.caller_descriptor,
            },
            "pc": sr.site.pc,
            "kind": sr.site.kind.value,
            "target": (
                _method_ref_obj(sr.site.declared_target)
                if sr.site.declared_target is not None
                else None
            ),
        }
        for sr in sorted(
            pcg.call_sites,
            key=lambda sr: (
                sr.caller_owner, sr.caller_name, sr.caller_descriptor, sr.site.pc,
            ),
        )
    ]
    internal_edges = [
        {
            "source": _method_ref_obj(
                MethodRef(e.source.owner, e.source.name, e.source.descriptor)
            ),
            "target": _method_ref_obj(
                MethodRef(e.target.owner, e.target.name, e.target.descriptor)
            ),
            "kind": e.kind.value,
            "pc": e.site_pc,
        }
        for e in sorted(pcg.internal_edges, key=Edge.sort_key)
    ]
    return {
        "formatVersion": pcg.format_version,
        "coordinate": pcg.coordinate.render(),
        "classes": classes,
        "callSites": call_sites,
        "internalEdges": internal_edges,
    }


def partial_cg_dumps(pcg: PartialCG) -> str:
    return canonical_dumps(partial_cg_to_obj(pcg))


def partial_cg_from_obj(obj: dict) -> PartialCG:
    try:
        coordinate = parse_coordinate(obj["coordinate"])
        classes: Dict[str, ClassRecord] = {}
        for name, c in obj["classes"].items():
            methods = {}
            for m in c["methods"]:
                flags = m["flags"]
                info = MethodInfo(
                    name=m["name"],
                    descriptor=m["descriptor"],
                    is_static=flags["static"],
                    is_abstract=flags["abstract"],
                    is_private=flags["private"],
                    is_final=flags["final"],
                )
                methods[(info.name, info.descriptor)] = info
            flags = c["flags"]
            classes[name] = ClassRecord(
                super_name=c["super"],
                interfaces=tuple(c["interfaces"]),
                is_interface=flags["interface"],
                is_abstract=flags["abstract"],
                is_final=flags["final"],
                methods=methods,
            )
        sites = []
        for s in obj["callSites"]:
            kind = CallKind(s["kind"])
            target = (
                _method_ref_from(s["target"]) if s["target"] is not None else None
            )
            caller = s["caller"]
            sites.append(SiteRecord(
                caller["owner"], caller["name"], caller["descriptor"],
                CallSite(s["pc"], kind, target),
            ))
        edges = []
        for e in obj["internalEdges"]:
            src = e["source"]
            dst = e["target"]
            edges.append(Edge(
                GlobalMethodId(coordinate, src["owner"], src["name"], src["descriptor"]),
                GlobalMethodId(coordinate, dst["owner"], dst["name"], dst["descriptor"]),
                CallKind(e["kind"]),
                e["pc"],
            ))
        pcg = PartialCG(
            coordinate=coordinate,
            classes=classes,
            call_sites=tuple(sites),
            internal_edges=tuple(edges),
            format_version=obj["formatVersion"],
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise SchemaError("malformed partial CG document: %s" % exc) from exc
    _validate_partial(pcg)
    return pcg


def partial_cg_loads(text: str) -> PartialCG:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("not JSON: %s" % exc) from exc
    if not isinstance(obj, dict):
        raise SchemaError("top-level value must be an object")
    return partial_cg_from_obj(obj)


def _validate_partial(pcg: PartialCG) -> None:
    for sr in pcg.call_sites:
        rec = pcg.classes.get(sr.caller_owner)
        if rec is None:
            raise SchemaError("call site caller class %s undefined" % sr.caller_owner)
        info = rec.methods.get((sr.caller_name, sr.caller_descriptor))
        if info is None or info.is_abstract:
            raise SchemaError(
                "call site caller %s.%s%s missing or abstract"
                % (sr.caller_owner, sr.caller_name, sr.caller_descriptor)
            )
    for e in pcg.internal_edges:
        if e.source.owner not in pcg.classes or e.target.owner not in pcg.classes:
            raise SchemaError("internal edge endpoint outside the package")


def full_cg_to_obj(cg: FullCG, include_stats: bool = False) -> dict:
    obj = {
        "nodes": sorted(n.render() for n in cg.nodes),
        "edges": [_edge_obj(e) for e in sorted(cg.edges, key=Edge.sort_key)],
        "unresolved": [
            {
                "caller": u.caller.render(),
                "pc": u.pc,
                "kind": u.kind.value,
                "target": _method_ref_obj(u.declared_target),
                "reason": u.reason,
            }
            for u in cg.unresolved
        ],
        "dynamic": [
            {"caller": d.caller.render(), "pc": d.pc} for d in cg.dynamic
        ],
    }
    if include_stats and cg.phase_stats is not None:
        obj["stats"] = {
            "poolMs": int(cg.phase_stats.pool_ms),
            "uchMs": int(cg.phase_stats.uch_ms),
            "stitchMs": int(cg.phase_stats.stitch_ms),
        }
    return obj


def full_cg_dumps(cg: FullCG, include_stats: bool = False) -> str:
    return canonical_dumps(full_cg_to_obj(cg, include_stats=include_stats))
