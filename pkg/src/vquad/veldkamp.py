"""Bipartite graphs with local opposition relations, and the Veldkamp axioms.

Vertices carry a kind (0 = point, 1 = line). The opposition relation at v lives
on the sorted neighbor list of v: either the trivial relation (every two
distinct neighbors opposite) or an explicit symmetric boolean matrix.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _kernels as K
from .errors import InputError, TheoremViolation

POINT, LINE = 0, 1


@dataclass
class Check:
    name: str
    passed: bool
    witness: object = None
    detail: str = ""

    def to_json(self):
        out = {"name": self.name, "passed": bool(self.passed)}
        if self.witness is not None:
            out["witness"] = _plain(self.witness)
        if self.detail:
            out["detail"] = self.detail
        return out


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (list, tuple)):
        return [_plain(y) for y in x]
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    return x


@dataclass
class Report:
    checks: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)

    def skip(self, name, reason, witness=None):
        """Record a check whose hypotheses do not hold on this input."""
        self.skipped[name] = Check(name, True, witness, reason)

    def add(self, name, passed, witness=None, detail=""):
        self.checks[name] = Check(name, bool(passed), witness, detail)
        return self.checks[name]

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())

    def __getitem__(self, name):
        return self.checks[name]

    def failures(self):
        return [c for c in self.checks.values() if not c.passed]

    def to_json(self):
        out = {"passed": self.passed, "checks": {k: c.to_json() for k, c in sorted(self.checks.items())}}
        if self.skipped:
            out["skipped"] = {k: c.to_json() for k, c in sorted(self.skipped.items())}
        return out


class VeldkampGraph:
    """Immutable bipartite graph with an opposition relation at every vertex.

    ``opposition[v]`` is None for the trivial relation, otherwise a square
    boolean array indexed like ``adj[v]`` as given.
    """

    def __init__(self, kinds, adj, opposition=None, gon=4):
        n = len(adj)
        if len(kinds) != n:
            raise InputError("partition and adjacency disagree on the vertex count")
        self.n = n
        self.gon = int(gon)
        self.kinds = np.asarray(kinds, dtype=np.uint8)
        if n and self.kinds.max(initial=0) > 1:
            raise InputError("partition entries must be 0 (point) or 1 (line)")
        opposition = [None] * n if opposition is None else list(opposition)
        if len(opposition) != n:
            raise InputError("opposition table has the wrong length")
        indptr = np.zeros(n + 1, dtype=np.int64)
        rows, triv, blocks = [], np.zeros(n, dtype=np.bool_), []
        for v, nb in enumerate(adj):
            nb = [int(u) for u in nb]
            order = np.argsort(nb, kind="stable")
            srt = [nb[i] for i in order]
            if len(set(srt)) != len(srt):
                raise InputError(f"repeated neighbor at vertex {v}")
            if v in srt:
                raise InputError(f"self-loop at vertex {v}")
            if srt and (srt[0] < 0 or srt[-1] >= n):
                raise InputError(f"neighbor out of range at vertex {v}")
            rows.append(srt)
            indptr[v + 1] = indptr[v] + len(srt)
            M = opposition[v]
            if M is None:
                triv[v] = True
                blocks.append(None)
                continue
            M = np.asarray(M, dtype=bool)
            if M.shape != (len(srt), len(srt)):
                raise InputError(f"opposition matrix at {v} has the wrong shape")
            M = M[np.ix_(order, order)]
            if not np.array_equal(M, M.T) or M.diagonal().any():
                raise InputError(f"opposition at {v} is not symmetric and anti-reflexive")
            blocks.append(M)
        self.indptr = indptr
        self.indices = np.array([u for r in rows for u in r], dtype=np.int64)
        for v, r in enumerate(rows):
            for u in r:
                if v not in rows[u]:
                    raise InputError(f"adjacency is not symmetric at ({v}, {u})")
        opp_ptr = np.zeros(n + 1, dtype=np.int64)
        for v in range(n):
            d = len(rows[v])
            opp_ptr[v + 1] = opp_ptr[v] + (0 if blocks[v] is None else d * d)
        data = np.zeros(opp_ptr[-1], dtype=np.uint8)
        for v in range(n):
            if blocks[v] is not None:
                data[opp_ptr[v] : opp_ptr[v + 1]] = blocks[v].astype(np.uint8).ravel()
        self.triv = triv
        self.opp_ptr = opp_ptr
        self.opp_data = data
        # rev[k] = CSR position of the reverse edge
        src = np.repeat(np.arange(n, dtype=np.int64), np.diff(indptr))
        code = src * n + self.indices
        back = self.indices * n + src
        self.rev = np.searchsorted(code, back).astype(np.int64)
        for arr in (self.kinds, self.indptr, self.indices, self.triv, self.opp_ptr, self.opp_data, self.rev):
            arr.setflags(write=False)

    # --- access ---------------------------------------------------------------

    @property
    def points(self):
        return np.nonzero(self.kinds == POINT)[0]

    @property
    def lines(self):
        return np.nonzero(self.kinds == LINE)[0]

    def neighbors(self, v):
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def degree(self, v):
        return int(self.indptr[v + 1] - self.indptr[v])

    def nbr_index(self, v, u):
        nb = self.neighbors(v)
        i = int(np.searchsorted(nb, u))
        if i == len(nb) or nb[i] != u:
            raise InputError(f"{u} is not adjacent to {v}")
        return i

    def opp_matrix(self, v):
        d = self.degree(v)
        if self.triv[v]:
            return ~np.eye(d, dtype=bool)
        return self.opp_data[self.opp_ptr[v] : self.opp_ptr[v + 1]].reshape(d, d).astype(bool)

    def opposite_at(self, v, x, y):
        i, j = self.nbr_index(v, x), self.nbr_index(v, y)
        if i == j:
            return False
        return bool(self.triv[v]) or bool(self.opp_data[self.opp_ptr[v] + i * self.degree(v) + j])

    @cached_property
    def effectively_trivial(self):
        out = self.triv.copy()
        for v in np.nonzero(~self.triv)[0]:
            M = self.opp_matrix(v)
            out[v] = bool(M.sum() == M.size - len(M))
        return out

    def _kernel_args(self):
        return self.indptr, self.indices, self.rev, self.triv, self.opp_ptr, self.opp_data

    # --- paths ----------------------------------------------------------------

    def is_path(self, path):
        for i in range(1, len(path)):
            u, v = int(path[i - 1]), int(path[i])
            if not (0 <= u < self.n and 0 <= v < self.n):
                return False
            nb = self.neighbors(v)
            j = np.searchsorted(nb, u)
            if j == len(nb) or nb[j] != u:
                return False
            if i >= 2 and path[i - 2] == path[i]:
                return False
        return True

    def is_straight(self, path):
        if not self.is_path(path):
            raise InputError(f"{list(path)!r} is not a path")
        return all(self.opposite_at(path[i], path[i - 1], path[i + 1]) for i in range(1, len(path) - 1))

    # --- cached global data ---------------------------------------------------

    @cached_property
    def dist(self):
        return K.all_distances(self.indptr, self.indices, self.n)

    @cached_property
    def walk(self):
        """(op matrix, counters, witnesses) from the straight-path kernel."""
        return K.straight_walk(*self._kernel_args(), self.n, self.gon, True)

    @property
    def op(self):
        return self.walk[0]

    @cached_property
    def op_bits(self):
        packed = np.packbits(self.op, axis=1)
        pad = (-packed.shape[1]) % 8
        if pad:
            packed = np.pad(packed, ((0, 0), (0, pad)))
        return np.ascontiguousarray(packed).view(np.uint64)

    # --- derived graphs and IO ------------------------------------------------

    def induced(self, vertices):
        """Subgraph spanned by ``vertices`` with restricted oppositions."""
        keep = sorted({int(v) for v in vertices})
        new_id = {v: i for i, v in enumerate(keep)}
        adj, opp = [], []
        for v in keep:
            nb = self.neighbors(v)
            sel = [i for i, u in enumerate(nb) if int(u) in new_id]
            adj.append([new_id[int(nb[i])] for i in sel])
            opp.append(None if self.triv[v] else self.opp_matrix(v)[np.ix_(sel, sel)])
        g = VeldkampGraph(self.kinds[keep], adj, opp, self.gon)
        return g, keep

    def adjacency(self):
        return [self.neighbors(v).tolist() for v in range(self.n)]

    def to_json(self):
        opp = {}
        for v in range(self.n):
            if self.triv[v]:
                opp[str(v)] = "trivial"
            else:
                M = self.opp_matrix(v)
                opp[str(v)] = [[int(i), int(j)] for i, j in zip(*np.nonzero(np.triu(M)))]
        return {
            "n": self.n,
            "gon": self.gon,
            "partition": self.kinds.tolist(),
            "adj": self.adjacency(),
            "opposition": opp,
        }

    @classmethod
    def from_json(cls, data):
        try:
            n = int(data["n"])
            adj = data["adj"]
            kinds = data["partition"]
            raw = data.get("opposition", {})
            gon = int(data.get("gon", 4))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed graph JSON: {exc}") from exc
        if len(adj) != n:
            raise InputError("adj length does not match n")
        opp = []
        for v in range(n):
            entry = raw.get(str(v), "trivial")
            if entry == "trivial":
                opp.append(None)
                continue
            d = len(adj[v])
            M = np.zeros((d, d), dtype=bool)
            srt = np.argsort([int(u) for u in adj[v]], kind="stable")
            # pairs refer to sorted neighbor positions; map back to the given order
            pos = np.empty(d, dtype=np.int64)
            pos[srt] = np.arange(d)
            inv = np.argsort(pos)
            try:
                for i, j in entry:
                    if i == j or not (0 <= i < d and 0 <= j < d):
                        raise InputError(f"bad opposition pair {(i, j)} at vertex {v}")
                    M[inv[i], inv[j]] = M[inv[j], inv[i]] = True
            except (TypeError, ValueError) as exc:
                raise InputError(f"bad opposition entry at vertex {v}") from exc
            opp.append(M)
        return cls(kinds, adj, opp, gon)

    def to_dot(self, names=None):
        """DOT text: points as circles, lines as boxes, non-opposite pairs at points dashed."""
        lines = ["graph veldkamp {"]
        for v in range(self.n):
            shape = "circle" if self.kinds[v] == POINT else "box"
            label = names[v] if names else str(v)
            lines.append(f'  v{v} [shape={shape}, label="{label}"];')
        for v in range(self.n):
            for u in self.neighbors(v):
                if v < u:
                    lines.append(f"  v{v} -- v{u};")
        for a in self.points:
            if self.triv[a]:
                continue
            M = self.opp_matrix(a)
            nb = self.neighbors(a)
            for i, j in zip(*np.nonzero(np.triu(~M, 1))):
                lines.append(f'  v{nb[i]} -- v{nb[j]} [style=dashed, constraint=false, label="{a}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        if not isinstance(other, VeldkampGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.gon == other.gon
            and np.array_equal(self.kinds, other.kinds)
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and all(np.array_equal(self.opp_matrix(v), other.opp_matrix(v)) for v in range(self.n))
        )

    __hash__ = None

    def __repr__(self):
        return f"VeldkampGraph(points={len(self.points)}, lines={len(self.lines)}, gon={self.gon})"


def dumps(obj):
    """Canonical JSON used for every artifact."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


# --- operations -------------------------------------------------------------------


def is_straight(g, path):
    return g.is_straight(path)


def plump_failure(g, k):
    """First vertex whose relation is not k-plump, or None."""
    if k < 1:
        raise InputError("k must be at least 1")
    if k <= 3:
        v = int(K.plump_check(g.indptr, g.triv, g.opp_ptr, g.opp_data, g.n, k))
        return None if v < 0 else v
    for v in range(g.n):
        M = g.opp_matrix(v)
        d = len(M)
        for size in range(1, k + 1):
            for S in itertools.combinations_with_replacement(range(d), size):
                if not M[list(S)].all(axis=0).any():
                    return v
    return None


def check_plump(g, k):
    return plump_failure(g, k) is None


def check_axioms(g, naive=False):
    """(VP1), (VP2), (VP3) and 2-plumpness, with witnesses on failure."""
    rep = Report()
    if g.n == 0:
        rep.add("VP1", False, detail="empty graph")
        return rep
    conn = bool((g.dist[0] >= 0).all())
    src = np.repeat(np.arange(g.n), np.diff(g.indptr))
    bad = np.nonzero(g.kinds[src] == g.kinds[g.indices])[0]
    witness = None if not len(bad) else [int(src[bad[0]]), int(g.indices[bad[0]])]
    rep.add("VP1", conn and not len(bad), witness, "" if conn else "not connected")
    if naive:
        vp2, vp3 = _naive_vp(g)
        rep.add("VP2", vp2 is None, vp2)
        rep.add("VP3", vp3 is None, vp3)
    else:
        _, counts, wit = g.walk
        w2 = None
        if counts[0]:
            a = [int(x) for x in wit[0, : g.gon + 1] if x >= 0]
            b = [int(x) for x in wit[0, g.gon + 2 :] if x >= 0]
            w2 = [a, b]
        rep.add("VP2", counts[0] == 0, w2, f"{int(counts[0])} duplicate straight paths" if counts[0] else "")
        w3 = [int(x) for x in wit[1] if x >= 0] if counts[1] else None
        rep.add("VP3", counts[1] == 0, w3, f"{int(counts[1])} unclosable straight paths" if counts[1] else "")
    pf = plump_failure(g, 2)
    rep.add("plump2", pf is None, pf)
    return rep


def _straight_paths_naive(g, max_len):
    """Every straight path up to max_len, by plain recursion (test oracle)."""
    out = []

    def grow(path):
        out.append(tuple(path))
        if len(path) - 1 == max_len:
            return
        v = path[-1]
        for u in g.neighbors(v):
            u = int(u)
            if len(path) >= 2:
                if u == path[-2] or not g.opposite_at(v, path[-2], u):
                    continue
            grow(path + [u])

    for s in range(g.n):
        grow([s])
    return out


def _naive_vp(g):
    n = g.gon
    paths = _straight_paths_naive(g, n + 1)
    by_ends = {}
    for p in paths:
        if len(p) - 1 <= n - 1:
            by_ends.setdefault((p[0], p[-1]), []).append(p)
    vp2 = None
    for ps in by_ends.values():
        if len(ps) > 1:
            vp2 = [list(ps[0]), list(ps[1])]
            break
    vp3 = None
    for p in paths:
        if len(p) - 1 != n + 1:
            continue
        closers = [q for q in by_ends.get((p[-1], p[0]), []) if len(q) - 1 == n - 1]
        ok = any(g.opposite_at(p[-1], p[-2], q[1]) and g.opposite_at(p[0], q[-2], p[1]) for q in closers)
        if not ok:
            vp3 = list(p)
            break
    return vp2, vp3


def naive_opposite_sets(g):
    op = np.zeros((g.n, g.n), dtype=bool)
    for p in _straight_paths_naive(g, g.gon):
        if len(p) - 1 == g.gon:
            op[p[0], p[-1]] = True
    return op


def opposite_set(g, v):
    return [int(u) for u in np.nonzero(g.op[v])[0]]


def is_flat(g):
    packed = np.packbits(g.op, axis=1)
    return len(np.unique(packed, axis=0)) == g.n


def is_green(g):
    return bool(g.effectively_trivial[g.kinds == LINE].all())


def trivial_propagation_failure(g):
    """A vertex w at even distance from an effectively trivial v with w non-trivial."""
    et = g.effectively_trivial
    if et.all() or not et.any():
        return None
    even = (g.dist >= 0) & (g.dist % 2 == 0)
    reach = even[et].any(axis=0)
    bad = np.nonzero(reach & ~et)[0]
    return None if not len(bad) else int(bad[0])


def polygon_test(g):
    """(diam == n, no circuit shorter than 2n, degrees >= 2, thick) from the graph alone."""
    d = g.dist
    diam = int(d.max()) if (d >= 0).all() else -1
    gi = int(K.girth(g.indptr, g.indices, g.n))
    degs = np.diff(g.indptr)
    return {
        "diameter": diam,
        "girth": gi,
        "generalized": diam == g.gon and (gi < 0 or gi >= 2 * g.gon) and bool((degs >= 2).all()),
        "thick": bool((degs >= 3).all()),
    }


def is_generalized_polygon(g):
    """All local relations trivial; must agree with the diameter/girth test."""
    trivial = bool(g.effectively_trivial.all())
    pt = polygon_test(g)
    classical = pt["generalized"] and pt["thick"]
    if trivial != classical and check_axioms(g).passed:
        raise TheoremViolation("triviality and the diameter/girth test disagree", pt)
    return trivial


def check_propositions(g):
    """The structural consequences of the axioms, each exhaustive on g."""
    rep = Report()
    _, counts, wit = g.walk
    rep.add("unique_root", counts[2] == 0, wit[2, :2].tolist() if counts[2] else None)
    rep.add("end_opposition", counts[3] == 0, wit[3, :4].tolist() if counts[3] else None)
    cf = K.common_opposite_failure(g.op_bits, g.dist, g.n)
    if cf[0] < 0 or check_plump(g, 2):
        rep.add("common_opposite", cf[0] < 0, None if cf[0] < 0 else cf.tolist())
    else:
        # the argument chooses a common opposite of two neighbours, which needs 2-plumpness
        rep.skip("common_opposite", "graph is not 2-plump", cf.tolist())
    rep.add("plump1", check_plump(g, 1), plump_failure(g, 1))
    tp = trivial_propagation_failure(g)
    rep.add("trivial_propagation", tp is None, tp)
    if not is_green(g):
        return rep
    is_point = g.kinds == POINT
    fc = K.four_circuit(g.indptr, g.indices, g.n)
    rep.add("no_4_circuits", fc[0] < 0, None if fc[0] < 0 else fc.tolist())
    sh = K.straight_in_hexagon(g.indptr, g.indices, g.triv, g.opp_ptr, g.opp_data, is_point, g.dist, g.n)
    rep.add("no_straight_hexagon_corner", sh[0] < 0, None if sh[0] < 0 else sh.tolist())
    P = np.nonzero(is_point)[0]
    opP = g.op[np.ix_(P, P)]
    dP = g.dist[np.ix_(P, P)]
    bad = np.argwhere(opP & (dP != 4))
    rep.add("opposite_points_far", not len(bad), None if not len(bad) else P[bad[0]].tolist())
    diam = int(g.dist.max()) if (g.dist >= 0).all() else -1
    rep.add("diameter_4", diam == 4, diam)
    pairs = np.argwhere((dP == 4) & ~opP)
    ok = True
    witness = None
    if len(pairs):
        g2 = g.dist == 2
        a, b = P[pairs[:, 0]], P[pairs[:, 1]]
        same_op = (g.op_bits[a] == g.op_bits[b]).all(axis=1)
        same_g2 = (g2[a] == g2[b]).all(axis=1)
        badp = np.nonzero(~(same_op & same_g2))[0]
        if len(badp):
            ok = False
            witness = [int(a[badp[0]]), int(b[badp[0]])]
    rep.add("far_nonopposite_twins", ok, witness)
    if is_flat(g):
        mism = np.argwhere(opP != (dP == 4))
        rep.add("flat_opposite_iff_far", not len(mism), None if not len(mism) else P[mism[0]].tolist())
    return rep
