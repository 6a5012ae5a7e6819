import json

import pytest
from hypothesis import given, settings, strategies as st

from hochblocks import cutgraph as cg
from hochblocks import lego
from hochblocks.cutgraph import CutGraph


def test_legal_colorings_and_fibers():
    assert len(lego.legal_colorings(cg.torus(True))) == 1
    assert len(lego.legal_colorings(cg.one_holed_torus(True))) == 2
    assert len(lego.legal_colorings(cg.genus2_two_cut())) == 3
    assert len(lego.legal_colorings(cg.genus2_theta())) == 7
    init, rep = lego.fiber_initial(cg.genus2_theta(("a",)))
    assert rep.passed
    assert init.colored == {"a", "b", "c"}


def test_fbar_then_split_returns_the_system():
    t = cg.genus2_theta(("b", "c"))
    merged = lego.apply_fbar(t, "a")
    assert len(merged.pieces) == 1 and merged.pieces[0].n == 4
    pid, legs = lego.splits(merged)[0]
    assert lego.isomorphic(lego.split_piece(merged, pid, legs), t)


def test_fbar_refuses_colored_cut():
    with pytest.raises(lego.AdmissibilityError):
        lego.apply_fbar(cg.genus2_theta(), "a")


def test_sbar_is_an_involution_up_to_isomorphism():
    oh = cg.one_holed_torus(False)
    once = lego.apply_sbar(oh, "h")
    assert [c.id for c in once.cuts] == ["h'"]
    assert lego.isomorphic(lego.apply_sbar(once, "h'"), oh)


def test_sbar_needs_a_handle_cut():
    with pytest.raises(lego.MoveNotApplicable):
        lego.sbar_region(cg.genus2_theta(), "a")


def test_lift_of_colored_move_projects_back():
    lift = lego.lift_move(cg.genus2_theta(), lego.Move("F", "a"))
    assert lego.verify_lift(lift).passed
    assert [m.to_json() for m in lego.project(lift)] == [lego.Move("F", "a").to_json()]


def test_recoloring_zigzag():
    u = cg.genus2_separated(False, False).with_colors({"h1"})
    lift = lego.lift_move(u, lego.Move("S", "h1"))
    assert lego.verify_lift(lift).passed
    assert len(lift.zigzag) == 2


def test_relations_near_theta():
    rep = lego.check_relations([cg.genus2_theta()], 2)
    assert rep.passed, rep.failures()


def test_lifts_and_fibers_in_a_small_neighborhood():
    systems = lego.neighborhood([cg.one_holed_torus(), cg.genus2_two_cut()], 2)
    assert lego.check_lifts(systems).passed
    assert lego.check_fibers(systems).passed


def test_theta_reaches_separating():
    r = lego.reachability(cg.genus2_theta(), cg.genus2_separated(True, True), 4)
    assert r.found and r.length == 2


def test_isomorphism_ignores_names_but_not_colors():
    t = cg.genus2_theta()
    renamed = t.relabel({"P1": "X", "P2": "Y"}, {"a": "u", "b": "v", "c": "w"})
    assert lego.isomorphic(t, renamed)
    assert lego.canonical_hash(t) == lego.canonical_hash(renamed)
    assert not lego.isomorphic(t, cg.genus2_theta(("a",)))
    assert lego.isomorphic(t, cg.genus2_theta(("a",)), colors=False)


@given(st.permutations(["a", "b", "c"]), st.sets(st.sampled_from(["a", "b", "c"]), min_size=1))
@settings(max_examples=25, deadline=None)
def test_hash_is_invariant_under_cut_renaming(perm, colored):
    t = cg.genus2_theta(tuple(sorted(colored)))
    renamed = t.relabel(cut_map=dict(zip(["a", "b", "c"], perm)))
    assert lego.canonical_hash(t) == lego.canonical_hash(renamed)


@pytest.mark.parametrize("g", [cg.torus(True), cg.one_holed_torus(True, mult=2), cg.genus2_theta(),
                               cg.pants_pair_genus2()[0], cg.closed_genus(3)])
def test_cut_graph_json_roundtrip(g):
    back = CutGraph.from_json(json.loads(g.dumps()))
    assert back == g
    assert back.total_genus() == g.total_genus()


def test_sew_and_unsew():
    cyl = cg.cylinder()
    torus = cyl.sew(("C", 1), ("C", 0), "t")
    assert torus.total_genus() == 1 and torus.boundary_count() == 0
    back = torus.unsew("t")
    assert back.cuts == cyl.cuts and set(back.boundary) == set(cyl.boundary)


def test_uncoloring_last_cut_of_closed_component_raises():
    with pytest.raises(cg.ColoringError):
        cg.torus(True).uncolor({"h"})


def test_bad_json_raises_schema_error():
    with pytest.raises(cg.CutGraphError):
        CutGraph.from_json({"pieces": [{"id": "P", "legs": [{"eps": 2}]}], "cuts": [], "boundary": []})
