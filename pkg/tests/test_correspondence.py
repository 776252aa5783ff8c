import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import built
from vquad.correspondence import (
    cone,
    cone_checks,
    graph_isomorphic,
    point_opposition,
    point_opposition_literal,
    polar_to_veldkamp,
    roundtrip_check,
    veldkamp_to_polar,
    verify_cone_quotient,
)
from vquad.errors import InputError
from vquad.polar import LineSpace
from vquad.veldkamp import VeldkampGraph


def relabel(g, perm):
    """Copy of g with vertex v renamed perm[v]."""
    inv = np.argsort(perm)
    adj = [[int(perm[u]) for u in g.neighbors(inv[w])] for w in range(g.n)]
    opp = [None if g.triv[inv[w]] else g.opp_matrix(inv[w]) for w in range(g.n)]
    return VeldkampGraph(g.kinds[inv], adj, opp, g.gon)


@pytest.mark.parametrize("name", ["w3", "q5plus3", "h34", "sp63"])
def test_bitset_opposition_matches_spans(name):
    S = built(name)[2]
    for a in range(0, S.n, max(1, S.n // 12)):
        assert np.array_equal(point_opposition(S, a), point_opposition_literal(S, a))


@pytest.mark.parametrize("name", ["w3", "q5plus3", "h34", "grid", "sp63", "q4_2"])
def test_roundtrip(name):
    assert roundtrip_check(built(name)[2])


def test_graph_to_space_and_back():
    S, g = built("q5plus3")[2:]
    T = veldkamp_to_polar(g)
    assert T == S
    assert polar_to_veldkamp(T) == g


def test_non_flat_graph_has_no_polar_space():
    S, g = built("q5plus3")[2:]
    with pytest.raises(InputError):
        veldkamp_to_polar(cone(S, 0, g)[0])


def test_cone_needs_rank_three():
    with pytest.raises(InputError):
        cone(built("w3")[2], 0)


def test_polar_to_veldkamp_rejects_lineless_space():
    with pytest.raises(InputError):
        polar_to_veldkamp(LineSpace(3, []))


@pytest.mark.parametrize("name,size", [("q5plus3", (48, 72)), ("sp63", (120, 360)), ("h54", (180, 432))])
def test_cone_sizes_and_op_class_law(name, size):
    S, g = built(name)[2:]
    for d in (0, S.n // 2, S.n - 1):
        omega, origin = cone(S, d, g)
        assert (len(omega.points), len(omega.lines)) == size
        rep = cone_checks(S, d, omega, origin)
        assert rep["plump2"].passed == (name != "q5plus3")


@settings(max_examples=15)
@given(st.randoms(use_true_random=False))
def test_isomorphism_found_under_relabeling(rnd):
    g = built("w3")[3]
    perm = list(range(g.n))
    rnd.shuffle(perm)
    h = relabel(g, np.array(perm))
    iso = graph_isomorphic(g, h)
    assert iso is not None
    assert relabel(g, iso) == h


def test_isomorphism_of_non_flat_graph():
    S, g = built("q5plus2")[2:]
    omega = cone(S, 0, g)[0]
    perm = np.random.default_rng(7).permutation(omega.n)
    assert graph_isomorphic(omega, relabel(omega, perm)) is not None


def test_dual_quadrangles_are_not_isomorphic():
    # W(3) and Q(4,3) have the same sizes but swap the roles of points and lines
    g1, g2 = built("w3")[3], built("q4_3")[3]
    assert g1.n == g2.n
    assert graph_isomorphic(g1, g2) is None


def test_isomorphism_respects_opposition():
    S, g = built("q5plus2")[2:]
    omega = cone(S, 0, g)[0]
    a = int(omega.points[0])
    opp = [None if omega.triv[u] else omega.opp_matrix(u) for u in range(omega.n)]
    M = opp[a].copy()
    i, j = np.argwhere(~M & ~np.eye(len(M), dtype=bool))[0]
    M[i, j] = M[j, i] = True
    opp[a] = M
    changed = VeldkampGraph(omega.kinds, omega.adjacency(), opp, 4)
    assert graph_isomorphic(omega, changed) is None


@pytest.mark.parametrize("name,target", [("q5plus3", 16), ("sp63", 40)])
def test_cone_quotient_is_the_perp_polar(name, target):
    S, g = built(name)[2:]
    e = next(e for e in range(S.n) if not S.perp_bits[0] >> e & 1)
    out = verify_cone_quotient(S, 0, e, g)
    assert out["target_points"] == out["quotient_points"] == target
    assert out["canonical_map"]


def test_cone_quotient_rejects_collinear_pair():
    S, g = built("q5plus3")[2:]
    e = int(np.nonzero([S.perp_bits[0] >> p & 1 for p in range(1, S.n)])[0][0]) + 1
    with pytest.raises(InputError):
        verify_cone_quotient(S, 0, e, g)
