"""Explicit isometries, root groups, Moufang certification and commutator relations.

Matrices act on row vectors from the right and products compose left to right,
so ``mat_prod(F, g, h)`` is "first g, then h". Commutators are a^-1 b^-1 a b and
conjugates are g^-1 x g.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels as K
from .algebra import commutator, conjugate, identity, mat_inv, mat_prod, vec_scale, vec_sub
from .correspondence import polar_to_veldkamp
from .errors import InputError, TheoremViolation
from .polar import LineSpace
from .spaces import GroupT, apply_matrix_to_points, build_ambient, check_nondegenerate, enumerate_singular

# basis positions of x1, x1', x2, x2'
X1, X1P, X2, X2P = 0, 1, 2, 3


def _freeze(M):
    return tuple(tuple(int(x) for x in row) for row in M)


def _unit(n, i):
    return tuple(1 if k == i else 0 for k in range(n))


class GeneratorSet:
    """rho, tau and the four parametrized families, all checked to be isometries."""

    def __init__(self, lam, check=True):
        lam.validate()
        if not check_nondegenerate(lam):
            raise InputError("Lambda is degenerate")
        self.lam = lam
        self.field = lam.field
        self.forms = build_ambient(lam)
        self.T = GroupT(lam)
        self.n = 4 + lam.l_dim
        self.epsilon = lam.epsilon
        self.rho = self._rho()
        self.tau = self._tau()
        self.A = {v: self._alpha(v) for v in self.T}
        self.B = {v: self._beta(v) for v in self.T}
        self.C = {t: self._gamma(t) for t in self.field.elements()}
        self.D = {s: self._delta(s) for s in self.field.elements()}
        if check:
            self.check_isometries()

    def _base(self):
        return [list(r) for r in identity(self.n)]

    def _rho(self):
        n, e = self.n, self.epsilon
        M = [[0] * n for _ in range(n)]
        M[X1][X2P] = M[X2P][X1] = e
        M[X1P][X2] = M[X2][X1P] = 1
        for i in range(4, n):
            M[i][i] = 1
        return _freeze(M)

    def _tau(self):
        # x1 -> eps x1' and x1' -> x1; the image eps x1 of x1' is not an isometry when eps = -1
        e = self.epsilon
        M = self._base()
        M[X1] = [0] * self.n
        M[X1P] = [0] * self.n
        M[X1][X1P] = e
        M[X1P][X1] = 1
        return _freeze(M)

    def _l_rows(self, M, col, coef):
        lam = self.lam
        for i in range(lam.l_dim):
            M[4 + i][col] = coef(_unit(lam.l_dim, i))

    def _alpha(self, v):
        F, lam = self.field, self.lam
        M = self._base()
        if lam.case == "I":
            a = v
            M[X1P] = [F.neg(lam.q(a)), 1, 0, 0] + list(a)
            self._l_rows(M, X1, lambda u: F.neg(lam.f(u, a)))
        else:
            a, t = v
            M[X1P] = [t, 1, 0, 0] + list(a)
            self._l_rows(M, X1, lambda u: lam.f(a, u))
        return _freeze(M)

    def _beta(self, v):
        F, lam = self.field, self.lam
        M = self._base()
        if lam.case == "I":
            b = v
            M[X2] = [0, 0, 1, F.neg(lam.q(b))] + list(b)
            self._l_rows(M, X2P, lambda u: F.neg(lam.f(u, b)))
        else:
            b, s = v
            M[X2] = [0, 0, 1, F.neg(s)] + [F.neg(c) for c in b]
            self._l_rows(M, X2P, lambda u: lam.f(b, u))
        return _freeze(M)

    def _gamma(self, t):
        F = self.field
        M = self._base()
        if self.lam.case == "I":
            M[X1P][X2P] = F.neg(t)
            M[X2][X1] = t
        else:
            M[X1P][X2P] = F.sigma(t)
            M[X2][X1] = F.neg(t)
        return _freeze(M)

    def _delta(self, s):
        F = self.field
        M = self._base()
        if self.lam.case == "I":
            M[X1][X2P] = s
            M[X2][X1P] = F.neg(s)
        else:
            M[X1][X2P] = F.neg(F.sigma(s))
            M[X2][X1P] = F.neg(s)
        return _freeze(M)

    def all_matrices(self):
        yield "rho", None, self.rho
        yield "tau", None, self.tau
        for name, fam in (("alpha", self.A), ("beta", self.B), ("gamma", self.C), ("delta", self.D)):
            for k, M in fam.items():
                yield name, k, M

    def check_isometries(self):
        for name, k, M in self.all_matrices():
            if not self.forms.is_isometry(M):
                raise TheoremViolation(f"{name} is not an isometry", k)
        return True

    def family_homomorphism(self, fam, mul):
        """'hom' if v -> M_v is multiplicative, 'anti' if it reverses products; else raise."""
        F = self.field
        keys = list(fam)
        if len({fam[k] for k in keys}) != len(keys):
            raise TheoremViolation("parametrization is not injective")
        hom = anti = True
        for v in keys:
            for w in keys:
                prod = mat_prod(F, fam[v], fam[w])
                hom = hom and prod == fam[mul(v, w)]
                anti = anti and prod == fam[mul(w, v)]
        if hom:
            return "hom"
        if anti:
            return "anti"
        raise TheoremViolation("parametrization is neither a homomorphism nor an anti-homomorphism")


def build_generators(lam):
    return GeneratorSet(lam)


# --- action on the incidence graph ---------------------------------------------------


class GraphAction:
    """Catalog, incidence graph and induced permutations for a given Lambda."""

    def __init__(self, lam, cap=None):
        self.gens = GeneratorSet(lam)
        self.catalog = enumerate_singular(self.gens.forms) if cap is None else enumerate_singular(self.gens.forms, cap)
        cat = self.catalog
        self.space = LineSpace(len(cat.points), cat.lines)
        self.graph = polar_to_veldkamp(self.space)
        self.n_points = len(cat.points)
        self._lines = np.array(cat.lines, dtype=np.int64)
        self._line_index = {ln: k for k, ln in enumerate(cat.lines)}

    def induce(self, M):
        """Vertex permutation of the incidence graph induced by the isometry M."""
        pos, ok = apply_matrix_to_points(self.catalog, M)
        if not ok.all():
            raise TheoremViolation("image of a singular point is not in the catalog", int(np.nonzero(~ok)[0][0]))
        img = np.sort(pos[self._lines], axis=1)
        perm = np.empty(self.graph.n, dtype=np.int64)
        perm[: self.n_points] = pos
        for k, row in enumerate(img):
            j = self._line_index.get(tuple(int(x) for x in row))
            if j is None:
                raise TheoremViolation("image of a singular line is not in the catalog", k)
            perm[self.n_points + k] = self.n_points + j
        if len(np.unique(perm)) != len(perm):
            raise TheoremViolation("induced map is not a permutation")
        return perm

    def check_automorphism(self, perm):
        g = self.graph
        return int(K.check_automorphism(g.indptr, g.indices, g.triv, g.opp_ptr, g.opp_data, perm, g.n)) < 0

    def point(self, i):
        return self.catalog.point_id(_unit(self.gens.n, i))

    def line(self, i, j):
        k = self.catalog.line_through(self.point(i), self.point(j))
        if k is None:
            raise TheoremViolation("apartment line is missing", (i, j))
        return self.n_points + k

    @cached_property
    def apartment(self):
        """Named vertices of the standard 8-circuit."""
        return {
            "x1": self.point(X1),
            "x1'": self.point(X1P),
            "x2": self.point(X2),
            "x2'": self.point(X2P),
            "x1x2": self.line(X1, X2),
            "x1x2'": self.line(X1, X2P),
            "x1'x2": self.line(X1P, X2),
            "x1'x2'": self.line(X1P, X2P),
        }

    @cached_property
    def perms(self):
        G = self.gens
        out = {"rho": self.induce(G.rho), "tau": self.induce(G.tau)}
        for name, fam in (("A", G.A), ("B", G.B), ("C", G.C), ("D", G.D)):
            out[name] = {k: self.induce(M) for k, M in fam.items()}
        return out

    def root(self, *names):
        return tuple(self.apartment[x] for x in names)


ROOTS = {
    "alpha": ("x2'", "x1x2'", "x1", "x1x2", "x2"),
    "beta": ("x1'", "x1'x2'", "x2'", "x1x2'", "x1"),
    "gamma": ("x1'x2'", "x2'", "x1x2'", "x1", "x1x2"),
    "delta": ("x1'x2", "x1'", "x1'x2'", "x2'", "x1x2'"),
}

# group, (end vertex, excluded neighbour) for each transitivity claim
TARGETS = {
    "A": [("x2", "x1x2"), ("x2'", "x1x2'")],
    "B": [("x1", "x1x2'"), ("x1'", "x1'x2'")],
    "C": [("x1x2", "x1"), ("x1'x2'", "x2'")],
    "D": [("x1x2'", "x2'"), ("x1'x2", "x1'")],
}


def _vertex_orbit(start, gens):
    seen = {int(start)}
    todo = [int(start)]
    while todo:
        v = todo.pop()
        for p in gens:
            w = int(p[v])
            if w not in seen:
                seen.add(w)
                todo.append(w)
    return seen


def _opposite_targets(g, end, prev):
    nb = g.neighbors(end)
    i = g.nbr_index(end, prev)
    M = g.opp_matrix(end)
    return {int(nb[j]) for j in np.nonzero(M[i])[0]}


def edge_orbit_size(g, gens, start):
    """Size of the orbit of the edge (point, line) = start under the permutations gens."""
    nP = int((g.kinds == 0).sum())
    if not np.array_equal(g.points, np.arange(nP)):
        raise InputError("points must come first")
    nL = g.n - nP
    eid = np.full((nP, nL), -1, dtype=np.int64)
    src = np.repeat(np.arange(nP), np.diff(g.indptr[: nP + 1]))
    dst = g.indices[: g.indptr[nP]] - nP
    eid[src, dst] = np.arange(len(src))
    seen = np.zeros(len(src), dtype=bool)
    a, x = start
    first = eid[a, x - nP]
    seen[first] = True
    frontier = np.array([first])
    while len(frontier):
        A, X = src[frontier], dst[frontier] + nP
        nxt = []
        for p in gens:
            ids = eid[p[A], p[X] - nP]
            if (ids < 0).any():
                raise TheoremViolation("permutation does not map edges to edges")
            ids = np.unique(ids[~seen[ids]])
            seen[ids] = True
            nxt.append(ids)
        frontier = np.unique(np.concatenate(nxt)) if nxt else np.array([], dtype=np.int64)
    return int(seen.sum()), len(src)


def roots_from(g, u, v):
    """All roots starting with the edge (u, v)."""
    out = []

    def grow(path):
        if len(path) == 5:
            out.append(tuple(path))
            return
        w = path[-1]
        nb = g.neighbors(w)
        M = g.opp_matrix(w)
        i = g.nbr_index(w, path[-2])
        for j in np.nonzero(M[i])[0]:
            grow(path + [int(nb[j])])

    grow([int(u), int(v)])
    return out


def _root_orbit(root, gens):
    seen = {root}
    todo = [root]
    while todo:
        r = todo.pop()
        for p in gens:
            s = tuple(int(p[v]) for v in r)
            if s not in seen:
                seen.add(s)
                todo.append(s)
    return seen


def certify_moufang(lam, cap=None):
    """Certificate that the incidence graph of the polar space of Lambda is Moufang.

    Raises TheoremViolation on the first failing step."""
    act = GraphAction(lam, cap)
    g = act.graph
    G = act.gens
    T = G.T
    F = lam.field
    perms = act.perms
    cert = {"points": act.n_points, "lines": g.n - act.n_points, "T": len(T), "K": F.order}

    every = [perms["rho"], perms["tau"]] + [p for name in "ABCD" for p in perms[name].values()]
    for p in every:
        if not act.check_automorphism(p):
            raise TheoremViolation("induced permutation is not an automorphism")
    cert["automorphisms_checked"] = len(every)

    homs = {
        "A": G.family_homomorphism(G.A, T.mul),
        "B": G.family_homomorphism(G.B, T.mul),
        "C": G.family_homomorphism(G.C, F.add),
        "D": G.family_homomorphism(G.D, F.add),
    }
    cert["parametrizations"] = homs
    cert["T_abelian"] = T.is_abelian()

    ap = act.apartment
    if perms["rho"][ap["x1x2'"]] != ap["x1x2'"] or perms["rho"][ap["x1'x2"]] != ap["x1'x2"]:
        raise TheoremViolation("rho does not fix x1x2' and x1'x2")
    if perms["tau"][ap["x2"]] != ap["x2"] or perms["tau"][ap["x2'"]] != ap["x2'"]:
        raise TheoremViolation("tau does not fix x2 and x2'")
    sigma = set(ap.values())
    for name in ("rho", "tau"):
        if {int(perms[name][v]) for v in sigma} != sigma:
            raise TheoremViolation(f"{name} does not stabilize the apartment")

    # each family fixes the three middle neighbourhoods of its root
    for fam, rname in zip("ABCD", ("alpha", "beta", "gamma", "delta")):
        r = act.root(*ROOTS[rname])
        fixed = np.unique(np.concatenate([g.neighbors(v) for v in r[1:4]]))
        for k, p in perms[fam].items():
            if not np.array_equal(p[fixed], fixed):
                raise TheoremViolation(f"{fam} element does not fix the middle of root {rname}", k)

    sizes = {}
    for fam, targets in TARGETS.items():
        group = list(perms[fam].values())
        expected = len(T) if fam in "AB" else F.order
        for end, prev in targets:
            tgt = _opposite_targets(g, ap[end], ap[prev])
            start = min(tgt)
            orbit = {int(p[start]) for p in group}
            if orbit != tgt or len(orbit) != len(group) or len(group) != expected:
                raise TheoremViolation(f"{fam} is not simply transitive opposite {prev} at {end}", (len(orbit), len(tgt)))
            sizes[f"{fam}:{end}"] = len(orbit)
    cert["root_group_orbits"] = sizes

    star = _vertex_orbit(int(g.neighbors(ap["x2'"])[0]), [perms["tau"]] + list(perms["A"].values()))
    if star != {int(v) for v in g.neighbors(ap["x2'"])}:
        raise TheoremViolation("<A, tau> is not transitive on the lines through x2'")
    # C fixes x1x2' pointwise; D is the group that moves its points
    star = _vertex_orbit(int(g.neighbors(ap["x1x2'"])[0]), [perms["rho"]] + list(perms["D"].values()))
    if star != {int(v) for v in g.neighbors(ap["x1x2'"])}:
        raise TheoremViolation("<D, rho> is not transitive on the points of x1x2'")

    orbit, total = edge_orbit_size(g, every, (ap["x2'"], ap["x1x2'"]))
    if orbit != total:
        raise TheoremViolation("M is not edge-transitive", (orbit, total))
    cert["edge_orbit"] = orbit
    cert["edges"] = total

    local = [p for name in "ABCD" for p in perms[name].values()]
    for (u, v), rname in (((ap["x2'"], ap["x1x2'"]), "alpha"), ((ap["x1x2'"], ap["x2'"]), "delta")):
        allr = set(roots_from(g, u, v))
        r0 = act.root(*ROOTS[rname])
        if rname == "delta":
            r0 = r0[::-1]
        if r0 not in allr:
            raise TheoremViolation(f"root {rname} is not among the roots it should start")
        orb = _root_orbit(r0, local)
        if orb != allr:
            raise TheoremViolation("<A, B, C, D> is not transitive on roots from an edge", (len(orb), len(allr)))
        cert[f"roots_from_{rname}_edge"] = len(allr)

    # the apartment's roots fall into the <rho, tau>-orbits of alpha and delta
    ring = ["x1", "x1x2'", "x2'", "x1'x2'", "x1'", "x1'x2", "x2", "x1x2"]
    sig_roots = set()
    for i in range(8):
        for step in (1, -1):
            sig_roots.add(tuple(ap[ring[(i + step * k) % 8]] for k in range(5)))
    rt = [perms["rho"], perms["tau"]]
    covered = _root_orbit(act.root(*ROOTS["alpha"]), rt) | _root_orbit(act.root(*ROOTS["delta"]), rt)
    if not sig_roots <= covered:
        raise TheoremViolation("apartment roots are not covered by the orbits of alpha and delta")
    cert["apartment_roots"] = len(sig_roots)
    cert["moufang"] = True
    return cert


# --- commutator relations -------------------------------------------------------------


class _Mats:
    """Matrix helpers with cached inverses."""

    def __init__(self, F):
        self.F = F
        self._inv = {}

    def inv(self, M):
        r = self._inv.get(M)
        if r is None:
            r = self._inv[M] = mat_inv(self.F, M)
        return r

    def prod(self, *Ms):
        return mat_prod(self.F, *Ms)

    def comm(self, a, b):
        return commutator(self.F, a, b, self.inv(a), self.inv(b))

    def conj(self, x, g):
        return conjugate(self.F, x, g, self.inv(g))


def _fail(family, args):
    raise TheoremViolation(f"commutator relation {family} fails", args)


def verify_commutators(lam):
    """Every commutator relation for the root groups of the standard coordinate system.

    Returns {family: number of tuples checked}."""
    G = GeneratorSet(lam)
    F = lam.field
    T = G.T
    mm = _Mats(F)
    Id = identity(G.n)
    Ks = list(F.elements())
    counts = {}

    def trivial(name, X, Y):
        c = 0
        for p in X:
            for q in Y:
                if mm.comm(X[p], Y[q]) != Id:
                    _fail(name, (p, q))
                c += 1
        counts[name] = c

    if lam.case == "I":
        x1, x2, x3, x4 = G.D, G.B, G.C, G.A
        c = 0
        for a in T:
            for b in T:
                if mm.comm(x2[a], mm.inv(x4[b])) != x3[lam.f(a, b)]:
                    _fail("[x2(a),x4(b)^-1]", (a, b))
                c += 1
        counts["[x2(a),x4(b)^-1]=x3(f(a,b))"] = c
        c = 0
        for t in Ks:
            for a in T:
                rhs = mm.prod(x2[vec_scale(F, a, t)], x3[F.mul(t, lam.q(a))])
                if mm.comm(x1[t], mm.inv(x4[a])) != rhs:
                    _fail("[x1(t),x4(a)^-1]", (t, a))
                c += 1
        counts["[x1(t),x4(a)^-1]=x2(ta)x3(tq(a))"] = c
        trivial("[U1,U3]=1", x1, x3)
    else:
        x1, x2, x3, x4 = G.A, G.C, G.B, G.D
        zero = (0,) * lam.l_dim
        c = 0
        for v in T:
            for w in T:
                if mm.comm(x1[v], mm.inv(x3[w])) != x2[lam.f(v[0], w[0])]:
                    _fail("[x1(a,t),x3(b,s)^-1]", (v, w))
                c += 1
        counts["[x1(a,t),x3(b,s)^-1]=x2(f(a,b))"] = c
        c = 0
        for v in Ks:
            for w in Ks:
                t = F.add(F.mul(F.sigma(v), w), F.mul(F.sigma(w), v))
                if mm.comm(x2[v], mm.inv(x4[w])) != x3[(zero, t)]:
                    _fail("[x2(v),x4(w)^-1]", (v, w))
                c += 1
        counts["[x2(v),x4(w)^-1]=x3(0,v^s w+w^s v)"] = c
        c = 0
        for a, t in T:
            for v in Ks:
                rhs = mm.prod(x2[F.mul(t, v)], x3[(vec_scale(F, a, v), F.mul(F.mul(F.sigma(v), t), v))])
                if mm.comm(x1[(a, t)], mm.inv(x4[v])) != rhs:
                    _fail("[x1(a,t),x4(v)^-1]", ((a, t), v))
                c += 1
        counts["[x1(a,t),x4(v)^-1]=x2(tv)x3(av,v^s tv)"] = c
    trivial("[U1,U2]=1", x1, x2)
    trivial("[U2,U3]=1", x2, x3)
    trivial("[U3,U4]=1", x3, x4)
    return counts


# --- the D3 quadrangle ------------------------------------------------------------------

# frame found by derive_d3_frame: conjugating word in rho, tau, the GL2 twist of x0, the scale of x5
D3_WORD = "rtrt"
D3_X0_TWIST = (1, 0, 0, 1)
D3_X5_SCALE = 1

# Case I coordinate frame w1..w8 as pairs of basis indices (one index for a point)
FRAME = ((X1P, X2), (X1P,), (X1P, X2P), (X2P,), (X1, X2P), (X1,), (X1, X2), (X2,))


def _rref(F, vectors):
    M = [list(v) for v in vectors]
    n = len(M[0])
    r = 0
    for c in range(n):
        k = next((i for i in range(r, len(M)) if M[i][c]), None)
        if k is None:
            continue
        M[r], M[k] = M[k], M[r]
        M[r] = list(vec_scale(F, M[r], F.inv(M[r][c])))
        for i in range(len(M)):
            if i != r and M[i][c]:
                M[i] = list(vec_sub(F, M[i], vec_scale(F, M[r], M[i][c])))
        r += 1
    return tuple(tuple(x) for x in M[:r])


class D3Frame:
    """Root group parametrizations x0..x5 of the D3 quadrangle over a prime field."""

    def __init__(self, lam, word=D3_WORD, twist=D3_X0_TWIST, scale=D3_X5_SCALE, gens=None, mats=None):
        if lam.case != "I" or lam.l_dim != 2 or lam.field.d != 1 or lam.field.p == 2:
            raise InputError("D3 frames need a hyperbolic plane over a prime field of odd characteristic")
        self.lam = lam
        self.G = GeneratorSet(lam) if gens is None else gens
        self.F = F = lam.field
        self.mm = _Mats(F) if mats is None else mats
        self.w = self.word_matrix(word)
        self.twist = twist
        self.scale = scale
        self.K = list(F.elements())
        n = self.G.n
        self.frame = [_rref(F, [_unit(n, i) for i in idx]) for idx in FRAME]

    def word_matrix(self, word):
        mats = {"r": self.G.rho, "t": self.G.tau}
        return self.mm.prod(identity(self.G.n), *[mats[c] for c in word])

    def x1(self, u):
        return self.G.D[u]

    def x2(self, s, t):
        return self.G.B[(s, t)]

    def x3(self, u):
        return self.G.C[u]

    def x4(self, s, t):
        return self.G.A[(s, t)]

    def x0(self, s, t):
        F, m = self.F, self.twist
        s2 = F.add(F.mul(m[0], s), F.mul(m[1], t))
        t2 = F.add(F.mul(m[2], s), F.mul(m[3], t))
        return self.mm.conj(self.x4(s2, t2), self.w)

    def x5(self, u):
        return self.mm.conj(self.x1(self.F.mul(self.scale, u)), self.w)

    def act(self, S, M):
        return _rref(self.F, [tuple(int(x) for x in np.asarray(v)) for v in _rows_times(self.F, S, M)])

    def stabilizes_frame(self, M):
        fr = set(self.frame)
        return {self.act(S, M) for S in fr} == fr


def _rows_times(F, rows, M):
    from .algebra import vec_mat

    return [vec_mat(F, v, M) for v in rows]


def _d3_relations(fr):
    """Commutator relations of the D3 frame, including x0 and x5; returns counts, raises on failure."""
    F, mm, K_ = fr.F, fr.mm, fr.K
    mul, add = F.mul, F.add
    Id = identity(fr.G.n)
    counts = {}
    c = 0
    for u, s, t in itertools.product(K_, repeat=3):
        lhs = mm.comm(fr.x1(u), mm.inv(fr.x4(s, t)))
        if lhs != mm.prod(fr.x2(mul(s, u), mul(u, t)), fr.x3(mul(mul(s, u), t))):
            _fail("[x1(u),x4(s,t)^-1]", (u, s, t))
        c += 1
    counts["[x1(u),x4(s,t)^-1]=x2(su,ut)x3(sut)"] = c
    c = 0
    for s, t, u, v in itertools.product(K_, repeat=4):
        if mm.comm(fr.x2(s, t), mm.inv(fr.x4(u, v))) != fr.x3(add(mul(u, t), mul(s, v))):
            _fail("[x2(s,t),x4(u,v)^-1]", (s, t, u, v))
        c += 1
    counts["[x2(s,t),x4(u,v)^-1]=x3(ut+sv)"] = c
    c = 0
    for s, t, u in itertools.product(K_, repeat=3):
        if mm.comm(fr.x0(s, t), mm.inv(fr.x3(u))) != mm.prod(fr.x1(mul(mul(t, u), s)), fr.x2(mul(u, s), mul(t, u))):
            _fail("[x0(s,t),x3(u)^-1]", (s, t, u))
        if mm.comm(fr.x2(s, t), mm.inv(fr.x5(u))) != mm.prod(fr.x3(mul(mul(s, u), t)), fr.x4(mul(s, u), mul(u, t))):
            _fail("[x2(s,t),x5(u)^-1]", (s, t, u))
        c += 1
    counts["[x0(s,t),x3(u)^-1]=x1(tus)x2(us,tu)"] = c
    counts["[x2(s,t),x5(u)^-1]=x3(sut)x4(su,ut)"] = c
    c = 0
    for s, t, u, v in itertools.product(K_, repeat=4):
        if mm.comm(fr.x0(s, t), mm.inv(fr.x2(u, v))) != fr.x1(add(mul(t, u), mul(v, s))):
            _fail("[x0(s,t),x2(u,v)^-1]", (s, t, u, v))
        c += 1
    counts["[x0(s,t),x2(u,v)^-1]=x1(tu+vs)"] = c
    pairs = {
        "[U1,U3]=1": ([(u,) for u in K_], fr.x1, [(u,) for u in K_], fr.x3),
        "[U1,U2]=1": ([(u,) for u in K_], fr.x1, list(itertools.product(K_, K_)), fr.x2),
        "[U2,U3]=1": (list(itertools.product(K_, K_)), fr.x2, [(u,) for u in K_], fr.x3),
        "[U3,U4]=1": ([(u,) for u in K_], fr.x3, list(itertools.product(K_, K_)), fr.x4),
    }
    for name, (P, f, Q, h) in pairs.items():
        for p in P:
            for q in Q:
                if mm.comm(f(*p), h(*q)) != Id:
                    _fail(name, (p, q))
        counts[name] = len(P) * len(Q)
    return counts


def _d3_mu_tables(fr):
    F, mm, K_ = fr.F, fr.mm, fr.K
    mul, neg, inv = F.mul, F.neg, F.inv
    c = 0
    for s, t in itertools.product(F.nonzero(), repeat=2):
        a = fr.x0(inv(t), inv(s))
        mu = mm.prod(a, fr.x4(s, t), a)
        if not fr.stabilizes_frame(mu):
            _fail("mu(x4(s,t)) stabilizes the frame", (s, t))
        for u in K_:
            if mm.conj(fr.x1(u), mu) != fr.x3(mul(mul(s, u), t)):
                _fail("mu4: x1", (s, t, u))
            if mm.conj(fr.x3(u), mu) != fr.x1(mul(mul(inv(s), u), inv(t))):
                _fail("mu4: x3", (s, t, u))
            for v in K_:
                if mm.conj(fr.x0(u, v), mu) != fr.x4(mul(mul(s, v), s), mul(mul(t, u), t)):
                    _fail("mu4: x0", (s, t, u, v))
                if mm.conj(fr.x2(u, v), mu) != fr.x2(neg(mul(mul(s, v), inv(t))), neg(mul(mul(inv(s), u), t))):
                    _fail("mu4: x2", (s, t, u, v))
                if mm.conj(fr.x4(u, v), mu) != fr.x0(mul(mul(inv(t), v), inv(t)), mul(mul(inv(s), u), inv(s))):
                    _fail("mu4: x4", (s, t, u, v))
                c += 3
            c += 2
    counts = {"mu(x4(s,t)) conjugations": c}
    c = 0
    for u in F.nonzero():
        a = fr.x5(inv(u))
        mu = mm.prod(a, fr.x1(u), a)
        if not fr.stabilizes_frame(mu):
            _fail("mu(x1(u)) stabilizes the frame", u)
        for s in K_:
            if mm.conj(fr.x1(s), mu) != fr.x5(mul(mul(inv(u), s), inv(u))):
                _fail("mu1: x1", (u, s))
            if mm.conj(fr.x3(s), mu) != fr.x3(s):
                _fail("mu1: x3", (u, s))
            if mm.conj(fr.x5(s), mu) != fr.x1(mul(mul(u, s), u)):
                _fail("mu1: x5", (u, s))
            for t in K_:
                if mm.conj(fr.x2(s, t), mu) != fr.x4(neg(mul(s, inv(u))), neg(mul(inv(u), t))):
                    _fail("mu1: x2", (u, s, t))
                if mm.conj(fr.x4(s, t), mu) != fr.x2(mul(s, u), mul(u, t)):
                    _fail("mu1: x4", (u, s, t))
                c += 2
            c += 3
    counts["mu(x1(u)) conjugations"] = c
    return counts


def _sharp_set(fr, x, opposite):
    """Parameters p of x(p) != 1 for which some a x(p) b with a, b in the opposite group
    stabilizes the frame."""
    out = set()
    for p, X in x.items():
        if X == identity(fr.G.n):
            continue
        if any(fr.stabilizes_frame(fr.mm.prod(a, X, b)) for a in opposite for b in opposite):
            out.add(p)
    return out


def _d3_razor(fr):
    F, mm, K_ = fr.F, fr.mm, fr.K
    mul = F.mul
    U4 = {(s, t): fr.x4(s, t) for s, t in itertools.product(K_, K_)}
    U0 = [fr.x0(s, t) for s, t in itertools.product(K_, K_)]
    sharp4 = _sharp_set(fr, U4, U0)
    expected4 = {(s, t) for s, t in U4 if mul(s, t) != 0}
    if sharp4 != expected4:
        raise TheoremViolation("U4 sharp set is not {x4(s,t) : st != 0}", sorted(sharp4 ^ expected4))
    U1 = {u: fr.x1(u) for u in K_}
    U5 = [fr.x5(u) for u in K_]
    sharp1 = _sharp_set(fr, U1, U5)
    if sharp1 != set(F.nonzero()):
        raise TheoremViolation("U1 sharp set is not {x1(u) : u != 0}", sorted(sharp1))
    mus = []
    for s, t in sorted(expected4):
        a = fr.x0(F.inv(t), F.inv(s))
        mus.append(mm.prod(a, fr.x4(s, t), a))
    sub = {fr.x4(u, 0): u for u in K_}
    checked = 0
    for m1 in mus:
        for m2 in mus:
            h = mm.prod(m1, m2)
            for X in sub:
                if mm.conj(X, h) not in sub:
                    raise TheoremViolation("{x4(u,0)} is not H4-invariant")
                checked += 1
    if any((u, 0) in sharp4 for u in K_):
        raise TheoremViolation("{x4(u,0)} meets the sharp set")
    return {
        "U4_sharp": len(sharp4),
        "U1_sharp": len(sharp1),
        "H4_generators": len(mus) ** 2,
        "H4_invariance_checks": checked,
        "witness_subgroup_order": len(sub),
        "razor_sharp": False,
    }


def verify_d3(lam, frame=None):
    """All D3 relations, the mu tables and the failure of razor-sharpness."""
    fr = D3Frame(lam) if frame is None else frame
    counts = _d3_relations(fr)
    counts.update(_d3_mu_tables(fr))
    counts["witness"] = _d3_razor(fr)
    return counts


def derive_d3_frame(lam):
    """Recompute the frozen frame: the first word in rho, tau (breadth-first, rho before tau)
    carrying the root of U4 to the root of U0, the GL2 twist that makes
    [x0(s,t),x2(u,v)^-1] = x1(tu+vs) hold, and the x5 scale from its relation."""
    base = D3Frame(lam, word="", twist=(1, 0, 0, 1), scale=1)
    F, mm, K_ = base.F, base.mm, base.K
    n = base.G.n
    root = lambda i: tuple(base.frame[(j - 1) % 8] for j in range(i, i + 5))
    words = {identity(n): ""}
    frontier = [identity(n)]
    while frontier:
        nxt = []
        for h in frontier:
            for c, s in (("r", base.G.rho), ("t", base.G.tau)):
                k = mm.prod(h, s)
                if k not in words:
                    words[k] = words[h] + c
                    nxt.append(k)
        frontier = nxt
    ordered = sorted(words.items(), key=lambda kv: (len(kv[1]), kv[1]))
    mapping = lambda h, i, j: tuple(base.act(S, h) for S in root(i)) == root(j)
    word = next(wd for h, wd in ordered if mapping(h, 4, 0))
    word5 = next(wd for h, wd in ordered if mapping(h, 1, 5))
    if word5 != word:
        raise TheoremViolation("U0 and U5 need different conjugating words", (word, word5))
    GL = [m for m in itertools.product(K_, repeat=4) if F.sub(F.mul(m[0], m[3]), F.mul(m[1], m[2]))]
    twists = []
    for m in GL:
        fr = D3Frame(lam, word, m, 1, base.G, mm)
        if all(
            mm.comm(fr.x0(s, t), mm.inv(fr.x2(u, v))) == fr.x1(F.add(F.mul(t, u), F.mul(v, s)))
            for s, t, u, v in itertools.product(K_, repeat=4)
        ):
            twists.append(m)
    scales = []
    for c in F.nonzero():
        fr = D3Frame(lam, word, twists[0] if twists else (1, 0, 0, 1), c, base.G, mm)
        if all(
            mm.comm(fr.x2(s, t), mm.inv(fr.x5(u))) == mm.prod(fr.x3(F.mul(F.mul(s, u), t)), fr.x4(F.mul(s, u), F.mul(u, t)))
            for s, t, u in itertools.product(K_, repeat=3)
        ):
            scales.append(c)
    if len(twists) != 1 or len(scales) != 1:
        raise TheoremViolation("D3 frame is not uniquely determined", (twists, scales))
    return {"word": word, "twist": tuple(twists[0]), "scale": scales[0], "group_order": len(words)}
