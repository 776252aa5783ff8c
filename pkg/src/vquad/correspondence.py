"""Polar spaces to Veldkamp quadrangles and back, cones, and isomorphism search."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .errors import InputError, TheoremViolation
from .polar import LineSpace, members
from .quotient import flat_quotient
from .veldkamp import LINE, POINT, VeldkampGraph, check_axioms, is_flat, is_generalized_polygon, is_green


def _line_perps(S):
    return [S.perp_of_set(ln) for ln in S.lines]


def point_opposition(S, a, lperp=None):
    """Opposition at point a: lines x, y through a with a non-singular span."""
    lperp = _line_perps(S) if lperp is None else lperp
    ls = S.point_lines[a]
    d = len(ls)
    M = np.zeros((d, d), dtype=bool)
    for i in range(d):
        xb = S.line_bits[ls[i]]
        for j in range(i + 1, d):
            # two lines on a common point span a singular plane iff one is perp to the other
            if xb & ~lperp[ls[j]]:
                M[i, j] = M[j, i] = True
    return M


def point_opposition_literal(S, a):
    """Same relation, evaluated by forming the span (slow reference)."""
    ls = S.point_lines[a]
    d = len(ls)
    M = np.zeros((d, d), dtype=bool)
    for i in range(d):
        for j in range(i + 1, d):
            span = S.span_bits(S.line_bits[ls[i]] | S.line_bits[ls[j]])
            M[i, j] = M[j, i] = not S.is_singular(span)
    return M


def polar_to_veldkamp(S, check=True):
    """Incidence graph of S: points 0..n-1, then line k as vertex n+k."""
    S.require_polar()
    if not S.lines:
        raise InputError("polar space has no lines")
    n = S.n
    lperp = _line_perps(S)
    adj, opp, kinds = [], [], []
    for a in range(n):
        adj.append([n + k for k in S.point_lines[a]])
        opp.append(point_opposition(S, a, lperp))
        kinds.append(POINT)
    for ln in S.lines:
        adj.append(list(ln))
        opp.append(None)
        kinds.append(LINE)
    g = VeldkampGraph(kinds, adj, opp, 4)
    if check:
        rep = check_axioms(g)
        vp_ok = all(rep[k].passed for k in ("VP1", "VP2", "VP3"))
        if not vp_ok or not is_flat(g) or not is_green(g):
            raise TheoremViolation("incidence graph of a polar space is not a flat green quadrangle", rep.to_json())
    return g


def veldkamp_to_polar(g, check=True):
    """Points of g with the point sets of its lines."""
    if not is_green(g):
        raise InputError("graph is not green")
    if not is_flat(g):
        raise InputError("graph is not flat")
    P = g.points
    new_id = np.full(g.n, -1, dtype=np.int64)
    new_id[P] = np.arange(len(P))
    S = LineSpace(len(P), [new_id[g.neighbors(x)].tolist() for x in g.lines])
    if check:
        if not S.lines or not (S.is_thick() and S.check_BS() and S.is_nondegenerate()):
            raise TheoremViolation("point-line space of a flat green quadrangle is not a thick non-degenerate polar space")
    return S


def roundtrip_check(S):
    g = polar_to_veldkamp(S)
    S2 = veldkamp_to_polar(g)
    if S2 != S or S2.canonical() != S.canonical():
        raise TheoremViolation("polar space does not survive the round trip")
    if polar_to_veldkamp(S2) != g:
        raise TheoremViolation("graph does not survive the round trip")
    gp = is_generalized_polygon(g)
    if gp != (S.rank() == 2):
        raise TheoremViolation("generalized quadrangle test disagrees with rank 2", gp)
    return True


def cone(S, d, g=None):
    """Subgraph of the incidence graph on d^perp minus d and the lines inside it.

    Returns (graph, origin) where origin[i] is the vertex of the full graph."""
    if S.rank() < 3:
        raise InputError("cones need rank at least 3")
    g = polar_to_veldkamp(S, check=False) if g is None else g
    P1 = S.perp_bits[d] & ~(1 << d)
    L1 = [k for k, lb in enumerate(S.line_bits) if lb & P1 == lb]
    verts = members(P1) + [S.n + k for k in L1]
    omega, origin = g.induced(verts)
    return omega, origin


def cone_checks(S, d, omega, origin):
    """VP1-VP3, green, not flat, and the op-class law: a^op = b^op iff a, b, d collinear.

    Returns the axiom report, whose plump2 entry is left to the caller."""
    rep = check_axioms(omega)
    if not all(rep[k].passed for k in ("VP1", "VP2", "VP3")):
        raise TheoremViolation("cone is not a Veldkamp quadrangle", rep.to_json())
    if not is_green(omega) or is_flat(omega):
        raise TheoremViolation("cone must be green and not flat", d)
    P = omega.points
    orig = np.asarray(origin)[P]
    lab = {}
    cls = np.array([lab.setdefault(omega.op_bits[v].tobytes(), len(lab)) for v in P])
    same = cls[:, None] == cls[None, :]
    ld = S.join[d, orig]
    collinear_d = ld[:, None] == ld[None, :]
    if not np.array_equal(same, collinear_d):
        i, j = np.argwhere(same != collinear_d)[0]
        raise TheoremViolation("op-class law fails in the cone", (int(orig[i]), int(orig[j])))
    return rep


# --- isomorphism ------------------------------------------------------------------


def _invariants(g):
    opdeg = [int(g.opp_matrix(v).sum()) for v in range(g.n)]
    return [(int(g.kinds[v]), g.degree(v), opdeg[v]) for v in range(g.n)]


def _refine(graphs, colors):
    """Joint colour refinement that also sees local opposition.

    Colours are renumbered in a shared sorted order so the two lists stay comparable."""
    cols = [np.asarray(c, dtype=np.uint64) for c in colors]
    count = len(np.unique(np.concatenate(cols)))
    while True:
        hashed = [K.refine_hash(g.indptr, g.indices, g.triv, g.opp_ptr, g.opp_data, c, g.n) for g, c in zip(graphs, cols)]
        _, dense = np.unique(np.concatenate(hashed), return_inverse=True)
        cols = np.split(dense.astype(np.uint64), [graphs[0].n])
        new_count = int(dense.max()) + 1
        if new_count == count:
            return [c.astype(np.int64).tolist() for c in cols]
        count = new_count


def _is_iso(g1, g2, perm):
    if not np.array_equal(g1.kinds, g2.kinds[perm]):
        return False
    for v in range(g1.n):
        nb = g1.neighbors(v)
        img = perm[nb]
        order = np.argsort(img)
        if not np.array_equal(img[order], g2.neighbors(perm[v])):
            return False
        if not np.array_equal(g1.opp_matrix(v)[np.ix_(order, order)], g2.opp_matrix(perm[v])):
            return False
    return True


def graph_isomorphic(g1, g2, hint=None):
    """Vertex bijection g1 -> g2 preserving kinds, edges and opposition, or None."""
    if g1.n != g2.n or sorted(_invariants(g1)) != sorted(_invariants(g2)):
        return None
    if hint is not None:
        perm = np.asarray(hint, dtype=np.int64)
        if sorted(perm.tolist()) == list(range(g1.n)) and _is_iso(g1, g2, perm):
            return perm
    inv1, inv2 = _invariants(g1), _invariants(g2)
    keys = {k: i for i, k in enumerate(sorted(set(inv1)))}
    start = [[keys[k] for k in inv1], [keys.get(k, -1) for k in inv2]]

    def search(c1, c2):
        c1, c2 = _refine((g1, g2), (c1, c2))
        if sorted(c1) != sorted(c2):
            return None
        cells = {}
        for v, c in enumerate(c1):
            cells.setdefault(c, []).append(v)
        if all(len(m) == 1 for m in cells.values()):
            where = {c: v for v, c in enumerate(c2)}
            perm = np.array([where[c] for c in c1], dtype=np.int64)
            return perm if _is_iso(g1, g2, perm) else None
        target = min((m for m in cells.values() if len(m) > 1), key=lambda m: (len(m), m[0]))
        v = target[0]
        col = c1[v]
        fresh = max(max(c1), max(c2)) + 1
        for w in [u for u, c in enumerate(c2) if c == col]:
            n1, n2 = list(c1), list(c2)
            n1[v] = fresh
            n2[w] = fresh
            found = search(n1, n2)
            if found is not None:
                return found
        return None

    return search(*start)


def verify_cone_quotient(S, d, e, g=None):
    """Quotient of the cone at d is isomorphic to the incidence graph of e^perp within it.

    Returns a dict with the sizes and whether the canonical map worked."""
    if S.perp_bits[d] >> e & 1:
        raise InputError(f"points {d} and {e} are collinear")
    g = polar_to_veldkamp(S, check=False) if g is None else g
    omega, origin = cone(S, d, g)
    cone_rep = cone_checks(S, d, omega, origin)
    S2, p2 = S.perp_polar(d, e)
    if not S2.lines:
        raise TheoremViolation("e^perp inside the cone has no lines", (d, e))
    g2 = polar_to_veldkamp(S2)
    res = flat_quotient(omega)
    q = res.graph
    # canonical candidate: [a] goes to the point of line ad inside e^perp
    p2_id = {p: i for i, p in enumerate(p2)}
    J = S.join
    hint = np.full(q.n, -1, dtype=np.int64)
    for cls in res.classes:
        v0 = cls[0]
        qv = int(res.pi[v0])
        if omega.kinds[v0] == POINT:
            a = origin[v0]
            line = S.lines[J[d, a]]
            hits = [p2_id[p] for p in line if p in p2_id]
            if len(hits) != 1:
                raise TheoremViolation("line through d meets e^perp badly", (d, a))
            hint[qv] = hits[0]
        else:
            pts = set()
            for u in omega.neighbors(v0):
                a = origin[u]
                pts.update(p2_id[p] for p in S.lines[J[d, a]] if p in p2_id)
            pts = sorted(pts)
            k = S2.join[pts[0], pts[1]] if len(pts) >= 2 else -1
            hint[qv] = S2.n + k if k >= 0 else -1
    canonical_ok = (hint >= 0).all() and len(set(hint.tolist())) == q.n and _is_iso(q, g2, hint)
    iso = hint if canonical_ok else graph_isomorphic(q, g2)
    if iso is None:
        raise TheoremViolation("flat quotient of the cone is not isomorphic to the expected graph", (d, e))
    return {
        "d": int(d),
        "e": int(e),
        "cone_points": int(len(omega.points)),
        "cone_lines": int(len(omega.lines)),
        "quotient_points": int(len(q.points)),
        "quotient_lines": int(len(q.lines)),
        "target_points": int(S2.n),
        "cone_plump2": bool(cone_rep["plump2"].passed),
        "canonical_map": bool(canonical_ok),
        "isomorphism": [int(x) for x in iso],
    }
