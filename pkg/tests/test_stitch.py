import random

import pytest

from cgstitch.hierarchy import build_uch
from cgstitch.jsonio import full_cg_dumps
from cgstitch.model import PHANTOM, CallKind
from cgstitch.partial import build_partial_cg
from cgstitch.resolution import REASON_NO_DEFINITION, REASON_PHANTOM_OWNER
from cgstitch.stitch import PartsMismatch, monolithic_cha, stitch

from support.progs import CORPUS, I, S, V, call, cls, coord, m, random_split


def build(program):
    parts = program.partial_cgs()
    return stitch(build_uch(parts), parts), parts


def edge_set(cg):
    return {(e.source.render(), e.target.render(), e.kind.value, e.site_pc)
            for e in cg.edges}


def test_direct_static_cross_package():
    program = CORPUS[0]  # static_chain
    cg, _ = build(program)
    assert ("com.x:app:1.0!app/Main.main([Ljava/lang/String;)V",
            "com.x:lib:1.0!lib/Util.max(II)I", "STATIC", 0) in edge_set(cg)


def shape_parts(include_circle=True):
    shapes = build_partial_cg(coord("com.x:shapes:1.0"), [
        cls("shapes/Shape", iface=True, methods=[m("area", "()D", abstract=True)]),
    ])
    circle = build_partial_cg(coord("com.x:circle:1.0"), [
        cls("shapes/Circle", interfaces=["shapes/Shape"],
            methods=[m("area", "()D")]),
    ])
    app = build_partial_cg(coord("com.x:app:1.0"), [
        cls("app/Main", methods=[
            m("main", static=True, calls=[call(I, "shapes/Shape", "area", "()D")]),
        ]),
    ])
    parts = [app, shapes] + ([circle] if include_circle else [])
    return parts


def test_interface_call_reaches_abstract_declaration_and_implementer():
    parts = shape_parts()
    cg = stitch(build_uch(parts), parts)
    assert edge_set(cg) == {
        ("com.x:app:1.0!app/Main.main()V",
         "com.x:shapes:1.0!shapes/Shape.area()D", "INTERFACE", 0),
        ("com.x:app:1.0!app/Main.main()V",
         "com.x:circle:1.0!shapes/Circle.area()D", "INTERFACE", 0),
    }


def test_dropping_the_implementer_package_drops_its_edge():
    parts = shape_parts(include_circle=False)
    cg = stitch(build_uch(parts), parts)
    assert edge_set(cg) == {
        ("com.x:app:1.0!app/Main.main()V",
         "com.x:shapes:1.0!shapes/Shape.area()D", "INTERFACE", 0),
    }


def test_static_call_into_phantom_owner_gets_phantom_node():
    parts = [build_partial_cg(coord("g:a:1"), [
        cls("A", methods=[m("f", calls=[call(S, "ext/Lib", "go")])]),
    ])]
    cg = stitch(build_uch(parts), parts)
    (edge,) = cg.edges
    assert edge.target.coordinate is PHANTOM
    assert edge.target.owner == "ext/Lib"
    assert edge.target in cg.nodes


def test_virtual_call_on_phantom_owner_is_unresolved():
    parts = [build_partial_cg(coord("g:a:1"), [
        cls("A", methods=[m("f", calls=[call(V, "ext/Lib", "go")])]),
    ])]
    cg = stitch(build_uch(parts), parts)
    assert cg.edges == frozenset()
    (u,) = cg.unresolved
    assert u.reason == REASON_PHANTOM_OWNER


def test_missing_method_in_defined_hierarchy_is_unresolved():
    parts = [build_partial_cg(coord("g:a:1"), [
        cls("A", methods=[m("f", calls=[call(S, "B", "nope")])]),
        cls("B"),
    ])]
    cg = stitch(build_uch(parts), parts)
    (u,) = cg.unresolved
    assert u.reason == REASON_NO_DEFINITION


def test_shadowed_class_sites_are_skipped_with_diagnostic():
    program = next(p for p in CORPUS if p.name == "shadowed_dup")
    cg, _ = build(program)
    assert any(s.coordinate == coord("com.x:second:2.0") for s in cg.skipped)
    # the loser's method bodies contribute no edges
    assert not any("second" in e.source.coordinate.render() for e in cg.edges)


def test_dynamic_sites_recorded_not_resolved():
    program = next(p for p in CORPUS if p.name == "dynamic_sites")
    cg, _ = build(program)
    assert len(cg.dynamic) == 2
    assert all(e.kind is not CallKind.DYNAMIC for e in cg.edges)


def test_parts_mismatch():
    part = build_partial_cg(coord("g:a:1"), [cls("A")])
    stranger = build_partial_cg(coord("g:b:1"), [cls("B")])
    uch = build_uch([part])
    with pytest.raises(PartsMismatch):
        stitch(uch, [part, stranger])


@pytest.mark.parametrize("program", CORPUS, ids=lambda p: p.name)
def test_monolithic_equals_stitched_on_canonical_split(program):
    cg, parts = build(program)
    mono = monolithic_cha(program.all_classes())
    assert cg.nodes == mono.nodes
    assert cg.edges == mono.edges
    assert cg.unresolved == mono.unresolved
    assert cg.dynamic == mono.dynamic


@pytest.mark.parametrize("program", CORPUS, ids=lambda p: p.name)
def test_monolithic_equals_stitched_on_random_splits(program):
    rng = random.Random(hash(program.name) & 0xFFFF)
    for _ in range(5):
        parts, mono_input = random_split(program, rng)
        cg = stitch(build_uch(parts), parts)
        mono = monolithic_cha(mono_input)
        assert cg.nodes == mono.nodes
        assert cg.edges == mono.edges


def test_single_package_stitch_degenerates_to_monolithic():
    part = build_partial_cg(coord("g:a:1"), [
        cls("A", methods=[m("f", calls=[call(S, "A", "g")]), m("g", static=True)]),
    ])
    cg = stitch(build_uch([part]), [part])
    mono = monolithic_cha([(coord("g:a:1"), c) for c in [
        cls("A", methods=[m("f", calls=[call(S, "A", "g")]), m("g", static=True)]),
    ]])
    assert cg.edges == mono.edges and cg.nodes == mono.nodes


def test_empty_input_gives_empty_graph():
    cg = monolithic_cha([])
    assert cg.nodes == frozenset() and cg.edges == frozenset()
    assert cg.unresolved == () and cg.dynamic == ()
    st = stitch(build_uch([]), [])
    assert st.nodes == frozenset() and st.edges == frozenset()


@pytest.mark.parametrize("program", CORPUS, ids=lambda p: p.name)
def test_monotonicity_under_package_addition(program):
    # dropping the last package never adds STATIC/SPECIAL edges, and with
    # no shadowing the smaller edge set is contained in the bigger one
    parts = program.partial_cgs()
    if len(parts) < 2:
        pytest.skip("single-package program")
    smaller = parts[:-1]
    small_cg = stitch(build_uch(smaller), smaller)
    big_cg = stitch(build_uch(parts), parts)
    if not build_uch(parts).shadow_diagnostics:
        non_phantom = {
            e for e in small_cg.edges
            if e.kind in (CallKind.STATIC, CallKind.SPECIAL)
            and e.target.coordinate is not PHANTOM
        }
        assert non_phantom <= big_cg.edges


@pytest.mark.parametrize("program", CORPUS, ids=lambda p: p.name)
def test_total_accounting(program):
    cg, parts = build(program)
    skipped = {(s.coordinate, s.caller_owner, s.caller_name,
                s.caller_descriptor, s.pc) for s in cg.skipped}
    non_dynamic = sum(
        1 for p in parts for sr in p.call_sites
        if sr.site.kind is not CallKind.DYNAMIC
        and (p.coordinate, sr.caller_owner, sr.caller_name,
             sr.caller_descriptor, sr.site.pc) not in skipped
    )
    resolved, unresolved, _dynamic = cg.site_accounting()
    assert non_dynamic == resolved + unresolved


@pytest.mark.parametrize("program", CORPUS, ids=lambda p: p.name)
def test_internal_fast_path_changes_nothing(program):
    parts = program.partial_cgs()
    uch = build_uch(parts)
    plain = stitch(uch, parts, use_internal_fast_path=False)
    fast = stitch(uch, parts, use_internal_fast_path=True)
    assert plain.edges == fast.edges
    assert plain.nodes == fast.nodes
    assert plain.unresolved == fast.unresolved


def test_serialization_is_canonical_and_order_independent():
    program = next(p for p in CORPUS if p.name == "mixed_big")
    cg1, parts = build(program)
    cg2 = stitch(build_uch(parts), parts)
    assert full_cg_dumps(cg1) == full_cg_dumps(cg2)


def test_abstract_target_edge_is_kept_for_soundness():
    program = next(p for p in CORPUS if p.name == "abstract_classes")
    cg, _ = build(program)
    targets = {e.target.render() for e in cg.edges}
    assert "com.x:core:1.0!a/Task.step()V" in targets  # abstract declaration
    assert "com.x:impl1:1.0!a/Quick.step()V" in targets
    assert "com.x:impl2:1.0!a/Slow.step()V" in targets
