import numpy as np
import pytest

from hochblocks import blocks, cutgraph
from hochblocks.blocks import (fs_compatibility, move_iso_B, move_iso_F, move_iso_S, move_iso_Z, monodromy_map,
                               twist_map)
from hochblocks.cutgraph import Boundary, ColoringError, Cut, CutGraph, Piece
from hochblocks.dworacle import bundle_groupoid, mcg_action_torus
from hochblocks.exactla import Mat, rank
from hochblocks.groups import builtin_group
from hochblocks.homcx import is_quasi_iso, regular_bimodule
from hochblocks.hopfcat import drinfeld_double, mg_bimodule

# torus blocks, frozen from the bundle-groupoid nerve (dworacle), truncation 3
FROZEN_TORUS = {
    ("Z2", 2): [4, 4, 4, 4],
    ("Z2", 3): [4, 0, 0, 0],
    ("S3", 5): [8, 0, 0, 0],
}


@pytest.fixture(scope="module")
def dz2():
    return drinfeld_double(builtin_group("Z2"), 2)


@pytest.fixture(scope="module")
def dz2_3():
    return drinfeld_double(builtin_group("Z2"), 3)


@pytest.fixture(scope="module")
def ds3():
    return drinfeld_double(builtin_group("S3"), 5)


def _eye(h, n):
    return Mat.identity(h.field, n)


@pytest.mark.parametrize("g,p", sorted(FROZEN_TORUS))
def test_torus_block_matches_frozen_groupoid_homology(g, p):
    h = drinfeld_double(builtin_group(g), p)
    assert blocks.marked_block(cutgraph.torus(True), h, 3).betti() == FROZEN_TORUS[g, p]


def test_closed_component_needs_a_colored_cut(dz2):
    with pytest.raises(ColoringError):
        blocks.marked_block(cutgraph.torus(False), dz2, 1)


def test_genus_zero_blocks(dz2_3):
    # hom(1, A^{⊗n}) has dimension dim(A)^{n-1}
    for n in (1, 2, 3):
        assert blocks.genus_zero_block(dz2_3, [1] * n, [1] * n).cols == 4 ** (n - 1)


def test_excision_on_cylinder(dz2):
    rep = blocks.excision_check(cutgraph.cylinder(), ("C", 1), ("C", 0), dz2, 2)
    assert rep.passed, rep.failures()


def test_h0_agreement_one_holed_torus(dz2):
    rep = blocks.h0_agreement(cutgraph.one_holed_torus(True), dz2, 2)
    assert rep.passed
    assert rep.info["betti"][1:] == [0, 0]


@pytest.mark.parametrize("colored,subset", [(("a", "b"), ["a"]), (("a", "b", "c"), ["a", "b"])])
def test_uncoloring_is_surjective_quasi_iso(dz2, colored, subset):
    f, src, tgt = blocks.uncoloring_map(cutgraph.genus2_theta(colored), subset, dz2, 2)
    assert f.is_chain_map()
    assert blocks.is_degreewise_surjective(f)
    assert is_quasi_iso(f, 2).passed


def test_uncoloring_the_last_colored_cut_is_refused(dz2):
    with pytest.raises(ColoringError):
        blocks.uncoloring_map(cutgraph.torus(True), ["h"], dz2, 1)


def test_closed_genus_two_paths(dz2):
    rep = blocks.compare_block_paths(dz2, 2, 2)
    assert rep.passed, rep.info


def test_tensor_permutation_composes(dz2):
    dims = [2, 3, 2]
    p = blocks.tensor_permutation(dz2.field, dims, [1, 2, 0])
    q = blocks.tensor_permutation(dz2.field, [dims[i] for i in (1, 2, 0)], [2, 0, 1])
    assert q @ p == _eye(dz2, 12)


@pytest.mark.parametrize("name", ["dz2_3", "ds3"])
def test_z_cubed_is_identity(name, request):
    h = request.getfixturevalue(name)
    cur, acc = cutgraph.sphere((1, 1, -1)), None
    for _ in range(3):
        z, cur, _, _ = move_iso_Z(cur, h, "S")
        acc = z if acc is None else z @ acc
    assert acc == _eye(h, acc.rows)


def test_braiding_squared_is_monodromy(ds3, dz2_3):
    for h, trivial in ((dz2_3, True), (ds3, False)):
        g = cutgraph.sphere((1, 1))
        b1, g1, _, _ = move_iso_B(g, h, "S", 0)
        b2, _, _, _ = move_iso_B(g1, h, "S", 0)
        assert b2 @ b1 == monodromy_map(g, h, "S", 0)
        assert (b2 @ b1 == _eye(h, b1.rows)) is trivial


def test_twist_powers_cancel(ds3):
    g = cutgraph.sphere((1, 1))
    t = twist_map(g, ds3, "S", 0)
    assert t @ twist_map(g, ds3, "S", 0, power=-1) == _eye(ds3, t.rows)


def test_f_move_is_invertible(dz2_3):
    four = CutGraph((Piece("P1", (1, 1, 1)), Piece("P2", (-1, 1, 1))), (Cut("c", ("P1", 2), ("P2", 0), False),),
                    (Boundary(("P1", 0)), Boundary(("P1", 1)), Boundary(("P2", 1)), Boundary(("P2", 2))), 0,
                    "four-holed")
    fm, merged, src, tgt = move_iso_F(four, dz2_3, "c")
    assert fm.rows == fm.cols == src.dim == tgt.dim
    assert rank(fm) == fm.rows
    assert len(merged.pieces) == 1


def test_one_holed_torus_s_relations(ds3):
    oh = cutgraph.one_holed_torus(False)
    s, _ = move_iso_S(oh, ds3, "h")
    t, _ = move_iso_S(oh, ds3, "h", variant="T")
    s2 = s @ s
    st = s @ t
    assert st @ st @ st == s2
    # S^4 is the inverse twist of the boundary, not a scalar
    piece = oh.pieces[0].id
    pos = oh.boundary[0].leg[1]
    assert s2 @ s2 == twist_map(oh, ds3, piece, pos, power=-1)
    assert s2 @ s2 != _eye(ds3, s.rows)


@pytest.mark.parametrize("g,p", [("Z2", 3), ("Z2", 2), ("Z3", 2)])
def test_f_and_s_compatibility(g, p):
    rep = fs_compatibility(drinfeld_double(builtin_group(g), p))
    assert rep.passed, rep.failures()


@pytest.mark.parametrize("g,p", [("Z2", 3), ("S3", 5)])
def test_torus_sl2z_against_bundle_permutations(g, p):
    h = drinfeld_double(builtin_group(g), p)
    d = blocks.torus_sl2z(h)
    assert d.report.passed
    assert d.report.info["lambda1"] == d.report.info["lambda2"] == 1
    mcg = mcg_action_torus(builtin_group(g))
    reps = d.orbit_basis
    t = np.zeros((len(reps), len(reps)), dtype=np.int64)
    for i, r in enumerate(reps):
        t[reps.index(mcg.info["T"][r]), i] = 1
    assert np.array_equal(d.T.dense(), t)
    assert len(reps) == len(bundle_groupoid(builtin_group(g), 1).orbits)


def test_skeleton_invariance(dz2):
    m = mg_bimodule(dz2, 1)
    assert blocks.skeleton_betti(dz2, m, 2, sizes=(1,)) == blocks.skeleton_betti(dz2, m, 2, sizes=(1, 2))
    a = regular_bimodule(dz2)
    assert blocks.skeleton_betti(dz2, a, 2, sizes=(1, 2)) == [4, 4, 4]


def test_matrix_algebra_dimension(dz2):
    assert blocks.matrix_algebra(dz2, 2).dim == 4 * dz2.dim
