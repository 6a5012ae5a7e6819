import pytest
from hypothesis import given, settings, strategies as st

from hochblocks.dworacle import (bundle_groupoid, compare_dw, group_homology, groupoid_homology, mcg_action_torus,
                                 orbit_representatives)
from hochblocks.groups import builtin_group, cyclic

# H_n(G; F_p) for n = 0..4, standard values
GROUP_HOMOLOGY = {
    ("Z2", 2): [1, 1, 1, 1, 1],
    ("Z3", 2): [1, 0, 0, 0, 0],
    ("Z3", 3): [1, 1, 1, 1, 1],
    ("S3", 2): [1, 1, 1, 1, 1],
    ("S3", 3): [1, 0, 0, 1, 1],
    ("S3", 5): [1, 0, 0, 0, 0],
}

# genus-1 bundle groupoids; the nerve and the orbit-wise sum must agree
TORUS = {
    ("Z2", 2): [4, 4, 4, 4],
    ("Z2", 3): [4, 0, 0, 0],
    ("S3", 2): [8, 4, 4, 4],
    ("S3", 3): [8, 4, 4, 5],
    ("S3", 5): [8, 0, 0, 0],
}


@pytest.mark.parametrize("g,p", sorted(GROUP_HOMOLOGY))
def test_group_homology(g, p):
    assert group_homology(builtin_group(g), p, 4) == GROUP_HOMOLOGY[g, p]


@pytest.mark.parametrize("g,p", sorted(TORUS))
def test_torus_groupoid(g, p):
    b = groupoid_homology(bundle_groupoid(builtin_group(g), 1), p, 3)
    assert b == TORUS[g, p]
    assert b.provenance["orbit sum"] == TORUS[g, p]


def test_genus_two_z2():
    grpd = bundle_groupoid(builtin_group("Z2"), 2)
    assert len(grpd.objects) == 16
    assert groupoid_homology(grpd, 2, 2) == [16, 16, 16]


def test_genus_zero_is_a_point():
    grpd = bundle_groupoid(builtin_group("S3"), 0)
    assert len(grpd.objects) == 1
    assert groupoid_homology(grpd, 3, 3) == GROUP_HOMOLOGY["S3", 3][:4]


def test_negative_genus_rejected():
    with pytest.raises(ValueError):
        bundle_groupoid(builtin_group("Z2"), -1)


@given(st.integers(1, 6))
@settings(max_examples=6, deadline=None)
def test_abelian_torus_counts(n):
    g = cyclic(n)
    grpd = bundle_groupoid(g, 1)
    assert len(grpd.objects) == n * n == len(grpd.orbits)
    assert all(len(s) == n for s in grpd.stabilizers)


@pytest.mark.parametrize("g", ["Z2", "Z3", "S3", "Q8"])
def test_torus_mapping_class_relations(g):
    rep = mcg_action_torus(builtin_group(g))
    assert rep.passed, rep.failures()
    assert rep.info["orbits"] == len(set(orbit_representatives(builtin_group(g)).values()))


@pytest.mark.parametrize("g,p", [("Z2", 2), ("S3", 5)])
def test_block_route_matches_groupoid(g, p):
    assert compare_dw(builtin_group(g), p, 1, 3).passed
