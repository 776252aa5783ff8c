from collections import deque

import numpy as np
import pytest

from conftest import built
from vquad.correspondence import cone
from vquad.errors import InputError
from vquad.quotient import UnionFind, find_weeds, flat_quotient, line_classes, phi, point_classes, weed_propositions
from vquad.veldkamp import POINT, VeldkampGraph, check_axioms, is_flat, is_green


def bfs_dist(g, s):
    d = {s: 0}
    q = deque([s])
    while q:
        v = q.popleft()
        for u in g.neighbors(v):
            u = int(u)
            if u not in d:
                d[u] = d[v] + 1
                q.append(u)
    return d


def weeds_by_hand(g):
    """Non-straight 4-paths a, x, b, y, c through points a, b, c with dist(a, c) = 4."""
    dist = {a: bfs_dist(g, a) for a in g.points.tolist()}
    out = []
    for b in g.points.tolist():
        for x in g.neighbors(b).tolist():
            for y in g.neighbors(b).tolist():
                if x == y:
                    continue
                for a in g.neighbors(x).tolist():
                    for c in g.neighbors(y).tolist():
                        if a == b or c == b or dist[a].get(c) != 4:
                            continue
                        if not g.is_straight([a, x, b, y, c]):
                            out.append((a, x, b, y, c))
    return sorted(out)


@pytest.fixture(scope="module")
def q5cone():
    S, g = built("q5plus3")[2:]
    return cone(S, 0, g)[0]


@pytest.fixture(scope="module")
def small_cone():
    S, g = built("q5plus2")[2:]
    return cone(S, 0, g)[0]


def test_weeds_match_brute_force(small_cone, q5cone):
    for g in (small_cone, q5cone):
        W = find_weeds(g)
        assert [tuple(w) for w in W.tolist()] == weeds_by_hand(g)
        assert len(W) > 0


def test_flat_graph_has_no_weeds_and_identity_quotient():
    g = built("w3")[3]
    assert len(find_weeds(g)) == 0
    res = flat_quotient(g)
    assert res.pi.tolist() == list(range(g.n))
    assert res.graph == g
    assert res.report.passed


@pytest.mark.parametrize("name,points,lines", [("q5plus3", {"3": 16}, {"9": 8}), ("sp63", {"3": 40}, {"9": 40})])
def test_cone_quotient_histogram(name, points, lines):
    S, g = built(name)[2:]
    omega = cone(S, 0, g)[0]
    res = flat_quotient(omega)
    assert res.histogram() == {"points": points, "lines": lines}
    assert res.report.passed, res.report.failures()
    q = res.graph
    assert is_flat(q) and is_green(q)
    assert all(check_axioms(q)[k].passed for k in ("VP1", "VP2", "VP3"))


def test_classes_are_op_set_classes(q5cone):
    W = find_weeds(q5cone)
    for classes in (point_classes(q5cone, W), line_classes(q5cone, W)):
        for cls in classes:
            rows = {q5cone.op_bits[v].tobytes() for v in cls}
            assert len(rows) == 1


def test_phi_is_a_bijection_fixing_the_meet(q5cone):
    W = find_weeds(q5cone)
    seen = set()
    for _, x, b, y, _ in W.tolist():
        if (x, y) in seen:
            continue
        seen.add((x, y))
        m = phi(q5cone, x, y, W)
        assert m[b] == b
        assert sorted(m) == sorted(q5cone.neighbors(x).tolist())
        assert sorted(m.values()) == sorted(q5cone.neighbors(y).tolist())
        back = phi(q5cone, y, x, W)
        assert all(back[m[a]] == a for a in m)
        if len(seen) > 40:
            break


def test_phi_on_unrelated_lines(q5cone):
    W = find_weeds(q5cone)
    related = {(x, y) for x, y in W[:, [1, 3]].tolist()}
    lines = q5cone.lines.tolist()
    x, y = next((x, y) for x in lines for y in lines if x != y and (x, y) not in related)
    with pytest.raises(InputError):
        phi(q5cone, x, y, W)


def test_weed_propositions(q5cone):
    assert weed_propositions(q5cone).passed
    assert weed_propositions(built("w3")[3]).passed


def test_non_green_input_rejected():
    # a generalized triangle is a Veldkamp 3-gon, not a quadrangle
    from test_veldkamp import fano_graph

    with pytest.raises(InputError):
        flat_quotient(fano_graph())


def test_quadrangle_with_nontrivial_lines_rejected():
    g = built("w3")[3]
    opp = [None if g.triv[u] else g.opp_matrix(u) for u in range(g.n)]
    line = int(g.lines[0])
    d = g.degree(line)
    M = ~np.eye(d, dtype=bool)
    M[0, 1] = M[1, 0] = False
    opp[line] = M
    h = VeldkampGraph(g.kinds, g.adjacency(), opp, 4)
    assert not is_green(h)
    with pytest.raises(InputError):
        flat_quotient(h)


def test_quotient_json_is_deterministic(q5cone):
    a = flat_quotient(q5cone).to_json()
    b = flat_quotient(q5cone).to_json()
    assert a == b
    assert sorted(a) == ["classes", "histogram", "pi", "report"]


def test_union_find_classes_sorted():
    uf = UnionFind(range(6))
    uf.union(4, 1)
    uf.union(5, 3)
    uf.union(3, 1)
    assert uf.classes() == [[0], [1, 3, 4, 5], [2]]


def test_point_kinds_of_classes(q5cone):
    res = flat_quotient(q5cone)
    assert all(q5cone.kinds[c[0]] == POINT for c in res.point_classes)
    assert len(res.point_classes) == 16 and len(res.line_classes) == 8
