"""Weeds, the point and line equivalences they generate, and the flat quotient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import InputError, TheoremViolation
from .veldkamp import LINE, POINT, Report, VeldkampGraph, check_axioms, check_plump, is_flat, is_green


def _require_green_quadrangle(g):
    if g.gon != 4:
        raise InputError("quotients are defined for quadrangles only")
    if not is_green(g):
        raise InputError("graph is not green")
    # plumpness is reported by the caller; the construction only needs VP1-VP3
    rep = check_axioms(g)
    bad = [c.name for c in rep.failures() if c.name != "plump2"]
    if bad:
        raise InputError(f"graph violates {', '.join(bad)}")
    return rep


def find_weeds(g, checked=False):
    """All weeds (a, x, b, y, c) as an (m, 5) int array, lexicographically sorted."""
    if not checked:
        _require_green_quadrangle(g)
    is_point = g.kinds == POINT
    W = K.find_weeds(g.indptr, g.indices, g.triv, g.opp_ptr, g.opp_data, is_point, g.dist, g.n)
    if len(W):
        W = W[np.lexsort(W.T[::-1])]
    return W


class UnionFind:
    def __init__(self, items):
        self.parent = {v: v for v in items}

    def find(self, v):
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra

    def classes(self):
        out = {}
        for v in self.parent:
            out.setdefault(self.find(v), []).append(v)
        return sorted(sorted(c) for c in out.values())


def _op_partition(g, vertices):
    groups = {}
    for v in vertices:
        groups.setdefault(g.op_bits[v].tobytes(), []).append(int(v))
    return sorted(sorted(c) for c in groups.values())


def point_classes(g, weeds=None):
    """Classes of weed-connectedness on points, checked against equal op-sets."""
    W = find_weeds(g) if weeds is None else weeds
    pts = [int(v) for v in g.points]
    uf = UnionFind(pts)
    for a, c in W[:, [0, 4]]:
        uf.union(int(a), int(c))
    classes = uf.classes()
    if classes != _op_partition(g, pts):
        raise TheoremViolation("weed classes of points differ from the op-set partition", classes)
    return classes


def line_classes(g, weeds=None):
    """Classes of the closure of the weed relation on lines, checked against op-sets."""
    W = find_weeds(g) if weeds is None else weeds
    lns = [int(v) for v in g.lines]
    uf = UnionFind(lns)
    for x, y in W[:, [1, 3]]:
        uf.union(int(x), int(y))
    classes = uf.classes()
    if classes != _op_partition(g, lns):
        raise TheoremViolation("closure classes of lines differ from the op-set partition", classes)
    return classes


def _common_neighbor(g, x, y):
    common = np.intersect1d(g.neighbors(x), g.neighbors(y))
    return [int(v) for v in common]


def phi(g, x, y, weeds=None):
    """The map Gamma_x -> Gamma_y fixing x ^ y and sending a to the end of the weed (a, x, b, y, .)."""
    if x == y:
        return {int(a): int(a) for a in g.neighbors(x)}
    W = find_weeds(g) if weeds is None else weeds
    sel = W[(W[:, 1] == x) & (W[:, 3] == y)]
    if not len(sel):
        raise InputError(f"lines {x} and {y} lie on no common weed")
    common = _common_neighbor(g, x, y)
    if len(common) != 1:
        raise TheoremViolation("related lines do not meet in exactly one point", (x, y, common))
    b = common[0]
    out = {b: b}
    for a, _, mid, _, c in sel.tolist():
        if mid != b:
            raise TheoremViolation("weed middle point is not the meet of its lines", (x, y, mid))
        if out.get(a, c) != c:
            raise TheoremViolation("weed end is not determined by its start", (a, x, b, y))
        out[a] = c
    if set(out) != {int(v) for v in g.neighbors(x)} or sorted(out.values()) != sorted(int(v) for v in g.neighbors(y)):
        raise TheoremViolation("weed map is not a bijection of the two neighborhoods", (x, y))
    return out


@dataclass
class QuotientResult:
    graph: VeldkampGraph
    pi: np.ndarray
    classes: list
    report: Report

    @property
    def point_classes(self):
        return [c for c in self.classes if self.graph.kinds[self.pi[c[0]]] == POINT]

    @property
    def line_classes(self):
        return [c for c in self.classes if self.graph.kinds[self.pi[c[0]]] == LINE]

    def histogram(self):
        hist = {}
        for kind, name in ((POINT, "points"), (LINE, "lines")):
            sizes = {}
            for c in self.classes:
                if self.graph.kinds[self.pi[c[0]]] == kind:
                    sizes[len(c)] = sizes.get(len(c), 0) + 1
            hist[name] = {str(k): v for k, v in sorted(sizes.items())}
        return hist

    def to_json(self):
        return {
            "pi": self.pi.tolist(),
            "classes": self.classes,
            "histogram": self.histogram(),
            "report": self.report.to_json(),
        }


def _build_quotient(g, pclasses, lclasses):
    classes = sorted(pclasses + lclasses, key=lambda c: c[0])
    pi = np.empty(g.n, dtype=np.int64)
    for i, c in enumerate(classes):
        pi[c] = i
    m = len(classes)
    kinds = [int(g.kinds[c[0]]) for c in classes]
    adj = [set() for _ in range(m)]
    for v in range(g.n):
        for u in g.neighbors(v):
            adj[pi[v]].add(int(pi[u]))
    adj = [sorted(s) for s in adj]
    opp = []
    for i, c in enumerate(classes):
        if kinds[i] == LINE:
            opp.append(None)
            continue
        nb = adj[i]
        pos = {u: k for k, u in enumerate(nb)}
        M = np.zeros((len(nb), len(nb)), dtype=bool)
        for b in c:
            # group Gamma_b by quotient class, then test all-vs-all opposition
            nbr = g.neighbors(b)
            local = g.opp_matrix(b)
            groups = {}
            for k, u in enumerate(nbr):
                groups.setdefault(int(pi[u]), []).append(k)
            keys = sorted(groups)
            for s, X in enumerate(keys):
                for Y in keys[s + 1 :]:
                    if local[np.ix_(groups[X], groups[Y])].all():
                        M[pos[X], pos[Y]] = M[pos[Y], pos[X]] = True
        opp.append(M)
    return VeldkampGraph(kinds, adj, opp, g.gon), pi, classes


def flat_quotient(g, strict=True):
    """The flat quotient with projection pi; every structural claim is checked."""
    g_rep = _require_green_quadrangle(g)
    W = find_weeds(g, checked=True)
    pcl = point_classes(g, W)
    lcl = line_classes(g, W)
    q, pi, classes = _build_quotient(g, pcl, lcl)
    rep = quotient_checks(g, q, pi, W, g_rep["plump2"].passed)
    if strict and not rep.passed:
        bad = rep.failures()[0]
        raise TheoremViolation(f"flat quotient check {bad.name} failed", bad.witness)
    return QuotientResult(q, pi, classes, rep)


def quotient_checks(g, q, pi, W, g_plump2=True):
    rep = Report()
    qa = check_axioms(q)
    vp_ok = all(qa[k].passed for k in ("VP1", "VP2", "VP3"))
    rep.add("quotient_axioms", vp_ok, [c.name for c in qa.failures()] or None)
    # 2-plumpness passes to the quotient; without it in g there is nothing to inherit
    rep.add("plump2_inherited", qa["plump2"].passed or not g_plump2)
    rep.add("quotient_green", is_green(q))
    rep.add("quotient_flat", vp_ok and is_flat(q))
    g_flat = not len(W)
    rep.add("flat_iff_no_weeds", is_flat(g) == g_flat)

    # weed pairs plus the diagonal are exactly the points with equal op-sets
    P = g.points
    labels = {}
    lab = np.array([labels.setdefault(g.op_bits[v].tobytes(), len(labels)) for v in P])
    same = lab[:, None] == lab[None, :]
    idx = np.full(g.n, -1, dtype=np.int64)
    idx[P] = np.arange(len(P))
    weedrel = np.eye(len(P), dtype=bool)
    if len(W):
        weedrel[idx[W[:, 0]], idx[W[:, 4]]] = True
    rep.add("weed_relation_is_equal_op", np.array_equal(weedrel, same))
    g2 = g.dist[np.ix_(P, P)] == 2
    bad = [(int(P[i]), int(P[j])) for i, j in np.argwhere(same) if not np.array_equal(g2[i], g2[j])]
    rep.add("weed_related_share_distance2", not bad, bad[0] if bad else None)

    # middle point depends only on the two lines
    mids = {}
    clash = None
    for a, x, b, y, c in W.tolist():
        if mids.setdefault((x, y), b) != b:
            clash = (x, y)
            break
    rep.add("weed_middle_unique", clash is None, clash)

    sim = {(x, y) for x, y in W[:, [1, 3]].tolist()}
    fail11 = None
    fail7 = None
    for a in P:
        nb = [int(u) for u in g.neighbors(a)]
        M = g.opp_matrix(a)
        for i, x in enumerate(nb):
            for j, y in enumerate(nb):
                if i != j and ((x, y) in sim) != (pi[x] == pi[y]) and fail7 is None:
                    fail7 = (int(a), x, y)
                if not M[i, j]:
                    continue
                for k, z in enumerate(nb):
                    if (y, z) in sim and not M[i, k] and fail11 is None:
                        fail11 = (int(a), x, y, z)
    rep.add("opposition_respects_weed_lines", fail11 is None, fail11)
    rep.add("local_closure_is_weed_relation", fail7 is None, fail7)

    # pi on edges, local surjectivity, bijectivity at lines, injectivity at points iff flat
    fail_surj = fail_line = None
    injective_everywhere = True
    for v in range(g.n):
        img = pi[g.neighbors(v)]
        qnb = q.neighbors(pi[v])
        if not np.array_equal(np.unique(img), qnb) and fail_surj is None:
            fail_surj = v
        if len(np.unique(img)) != len(img):
            if g.kinds[v] == LINE and fail_line is None:
                fail_line = v
            injective_everywhere = False
    rep.add("pi_locally_surjective", fail_surj is None, fail_surj)
    rep.add("pi_bijective_at_lines", fail_line is None, fail_line)
    rep.add("pi_injective_at_points_iff_flat", injective_everywhere == g_flat)

    # straightness of every 2-path is reflected and preserved
    fail_str = None
    for v in range(g.n):
        nb = g.neighbors(v)
        M = g.opp_matrix(v)
        pv = pi[v]
        QM = q.opp_matrix(pv)
        qi = np.searchsorted(q.neighbors(pv), pi[nb])
        for i in range(len(nb)):
            for j in range(len(nb)):
                if i == j:
                    continue
                is_path = pi[nb[i]] != pi[nb[j]]
                image_straight = is_path and bool(QM[qi[i], qi[j]])
                if bool(M[i, j]) != image_straight:
                    fail_str = (int(nb[i]), v, int(nb[j]))
                    break
            if fail_str:
                break
        if fail_str:
            break
    rep.add("pi_straightness", fail_str is None, fail_str)

    if check_plump(g, 3):
        rep.add("plump3_inherited", check_plump(q, 3))
    return rep


def weed_propositions(g):
    """Weed-based checks: flat iff no weeds, weed classes equal op-set classes on points and lines."""
    _require_green_quadrangle(g)
    W = find_weeds(g, checked=True)
    rep = Report()
    rep.add("flat_iff_no_weeds", is_flat(g) == (len(W) == 0), None, f"{len(W)} weeds")
    for name, fn in (("point_classes_equal_op", point_classes), ("line_classes_equal_op", line_classes)):
        try:
            fn(g, W)
            rep.add(name, True)
        except TheoremViolation as exc:
            rep.add(name, False, exc.witness)
    return rep
