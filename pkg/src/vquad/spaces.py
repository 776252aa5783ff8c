"""Quadratic, pseudo-quadratic and symplectic input spaces and their polar spaces.

A ``LambdaSpace`` describes L together with q, f (and K0 in Case II). From it we
build the ambient space V = K^4 + L with the forms Q, F, the parameter group T,
and the catalog of singular points (W1) and totally singular lines (W2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    Field,
    FormTables,
    all_vectors,
    field_matmul,
    normalize_rows,
    vec_add,
    vector_code,
)
from .errors import CapExceeded, InputError, TheoremViolation

DEFAULT_CAP = 10**7


def _scalar_from_json(F, x):
    if isinstance(x, int):
        if not 0 <= x < F.order:
            raise InputError(f"scalar code {x} out of range for {F!r}")
        return x
    if isinstance(x, (list, tuple)):
        return F.from_coeffs(x)
    raise InputError(f"cannot read scalar {x!r}")


def _scalar_to_json(F, x):
    return list(F.coeffs(x))


@dataclass(frozen=True)
class LambdaSpace:
    """The data (K, [K0, sigma,] L, q) with the Gram matrix of f on L.

    Case II sesquilinearity is f(a t, b s) = t^sigma f(a, b) s, so
    f(a, b) = sum sigma(a_i) G_ij b_j. Case I uses the identity for sigma.
    """

    case: str
    field: Field
    l_dim: int
    gram_f: tuple
    q_table: tuple
    k0: frozenset = frozenset({0})
    allow_trivial_l: bool = False
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.case not in ("I", "II"):
            raise InputError(f"case must be 'I' or 'II', not {self.case!r}")
        if len(self.gram_f) != self.l_dim or any(len(r) != self.l_dim for r in self.gram_f):
            raise InputError("gram_f must be dim(L) x dim(L)")
        if len(self.q_table) != self.field.order**self.l_dim:
            raise InputError("q_table must list q on every vector of L")
        if self.case == "I" and self.k0 != frozenset({0}):
            raise InputError("K0 only makes sense in Case II")

    @property
    def is_symplectic(self):
        return self.case == "II" and self.k0 == frozenset(self.field.elements())

    @property
    def case_tag(self):
        if self.case == "I":
            return "I"
        return "II-symplectic" if self.is_symplectic else "II"

    @property
    def epsilon(self):
        return 1 if self.case == "I" else self.field.neg(1)

    def l_vectors(self):
        return [tuple(r) for r in all_vectors(self.field, self.l_dim).tolist()]

    def q(self, a):
        return self.q_table[vector_code(self.field, a)]

    def f(self, a, b):
        F = self.field
        out = 0
        for i, x in enumerate(a):
            if not x:
                continue
            sx = F.sigma(x)
            for j, g in enumerate(self.gram_f[i]):
                if g and b[j]:
                    out = F.add(out, F.mul(F.mul(sx, g), b[j]))
        return out

    def in_k0(self, x):
        return x in self.k0

    def validate(self):
        """Structural checks on (K, K0, sigma, L, q, f); raises InputError."""
        F = self.field
        if self.case == "I":
            if self.l_dim == 0 and not self.allow_trivial_l:
                raise InputError("Case I needs L != 0")
            if F.involution:
                raise InputError("Case I uses the trivial involution")
            vecs = self.l_vectors()
            for a in vecs:
                for b in vecs:
                    pol = F.sub(F.sub(self.q(vec_add(F, a, b)), self.q(a)), self.q(b))
                    if pol != self.f(a, b):
                        raise InputError(f"f is not the polarization of q at {a}, {b}")
            return
        k0 = self.k0
        if 0 not in k0 or 1 not in k0:
            raise InputError("K0 must contain 0 and 1")
        if any(F.add(a, b) not in k0 for a in k0 for b in k0):
            raise InputError("K0 is not an additive subgroup")
        if not F.traces() <= k0:
            raise InputError("K0 must contain every t + t^sigma")
        if not k0 <= F.fixed_field():
            raise InputError("K0 must be fixed by sigma")
        if any(F.mul(F.mul(F.sigma(t), a), t) not in k0 for t in F.elements() for a in k0):
            raise InputError("K0 is not closed under a -> t^sigma a t")
        if self.is_symplectic and F.p == 2:
            raise InputError("the symplectic case needs char(K) != 2")
        vecs = self.l_vectors()
        for a in vecs:
            for b in vecs:
                fab, fba = self.f(a, b), self.f(b, a)
                if fba != F.neg(F.sigma(fab)):
                    raise InputError(f"f is not skew-hermitian at {a}, {b}")
                d = F.sub(F.sub(F.sub(self.q(vec_add(F, a, b)), self.q(a)), self.q(b)), fab)
                if d not in k0:
                    raise InputError(f"q(a+b) - q(a) - q(b) - f(a,b) not in K0 at {a}, {b}")
            qa = self.q(a)
            if self.f(a, a) != F.sub(qa, F.sigma(qa)):
                raise InputError(f"f(a,a) != q(a) - q(a)^sigma at {a}")

    # --- JSON ---------------------------------------------------------------

    def to_json(self):
        F = self.field
        return {
            "case": self.case,
            "field": F.to_json(),
            "K0": sorted(_scalar_to_json(F, x) for x in self.k0),
            "L": {
                "dim": self.l_dim,
                "gram_f": [[_scalar_to_json(F, x) for x in row] for row in self.gram_f],
                "q_table": [_scalar_to_json(F, x) for x in self.q_table],
            },
            "allow_trivial_l": self.allow_trivial_l,
            "name": self.name,
        }

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict):
            raise InputError("Lambda descriptor must be a JSON object")
        try:
            case = str(data["case"])
            if "field" in data:
                F = Field.from_json(data["field"])
            else:
                d = int(data.get("d", 1))
                sigma = data.get("sigma", "frobenius" if (case == "II" and d == 2) else "identity")
                F = Field.from_json({"p": data["p"], "d": d, "sigma": sigma})
            Ld = data.get("L", {"dim": 0}) or {"dim": 0}
            l_dim = int(Ld.get("dim", 0))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed Lambda descriptor: {exc}") from exc
        k0 = _read_k0(F, case, data.get("K0"))
        qc = None
        if "blocks" in Ld:
            qc = _blocks_to_coeffs(F, Ld["blocks"], l_dim)
        elif "q_coeffs" in Ld:
            qc = [[_scalar_from_json(F, x) for x in row] for row in Ld["q_coeffs"]]
        if "q_table" in Ld:
            q_table = tuple(_scalar_from_json(F, x) for x in Ld["q_table"])
            if len(q_table) != F.order**l_dim:
                raise InputError("q_table must list q on every vector of L")
        elif qc is not None:
            q_table = _q_table_from_coeffs(F, qc, l_dim)
        else:
            q_table = (0,) * (F.order**l_dim)
        if "gram_f" in Ld:
            gram = tuple(tuple(_scalar_from_json(F, x) for x in row) for row in Ld["gram_f"])
        elif qc is not None:
            gram = _gram_from_coeffs(F, qc, case)
        elif case == "I":
            gram = _polarize(F, q_table, l_dim)
        elif l_dim == 0:
            gram = ()
        else:
            raise InputError("Case II descriptors need gram_f, q_coeffs or blocks")
        return cls(
            case=case,
            field=F,
            l_dim=l_dim,
            gram_f=gram,
            q_table=q_table,
            k0=k0,
            allow_trivial_l=bool(data.get("allow_trivial_l", False)),
            name=str(data.get("name", "")),
        )


def _read_k0(F, case, desc):
    if case == "I":
        return frozenset({0})
    if desc is None or desc == "fixed":
        return F.fixed_field()
    if desc in ("K", "all"):
        return frozenset(F.elements())
    if desc == "trace":
        return F.traces()
    if isinstance(desc, list):
        return frozenset(_scalar_from_json(F, x) for x in desc)
    raise InputError(f"cannot read K0 descriptor {desc!r}")


def _blocks_to_coeffs(F, blocks, l_dim):
    qc = [[0] * l_dim for _ in range(l_dim)]
    pos = 0
    for b in blocks:
        kind = b.get("type") if isinstance(b, dict) else b
        if kind == "hyperbolic":
            if pos + 2 > l_dim:
                raise InputError("blocks overrun dim(L)")
            qc[pos][pos + 1] = 1
            pos += 2
        elif kind == "diagonal":
            if pos + 1 > l_dim:
                raise InputError("blocks overrun dim(L)")
            qc[pos][pos] = _scalar_from_json(F, b.get("c", 1)) if isinstance(b, dict) else 1
            pos += 1
        else:
            raise InputError(f"unknown block {b!r}")
    if pos != l_dim:
        raise InputError("blocks do not fill dim(L)")
    return qc


def _q_table_from_coeffs(F, qc, l_dim):
    """q(a) = sum_{i<=j} sigma(a_i) c_ij a_j."""
    out = []
    for a in itertools.product(range(F.order), repeat=l_dim):
        s = 0
        for i in range(l_dim):
            for j in range(i, l_dim):
                if qc[i][j]:
                    s = F.add(s, F.mul(F.mul(F.sigma(a[i]), qc[i][j]), a[j]))
        out.append(s)
    return tuple(out)


def _gram_from_coeffs(F, qc, case):
    n = len(qc)
    G = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            c = qc[i][j] if j >= i else 0
            ct = qc[j][i] if i >= j else 0
            if case == "I":
                G[i][j] = F.add(c, ct)
            else:
                G[i][j] = F.sub(c, F.sigma(ct))
    return tuple(tuple(r) for r in G)


def _polarize(F, q_table, l_dim):
    def q(a):
        return q_table[vector_code(F, a)]

    basis = [tuple(1 if k == i else 0 for k in range(l_dim)) for i in range(l_dim)]
    G = [[0] * l_dim for _ in range(l_dim)]
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            G[i][j] = F.sub(F.sub(q(vec_add(F, a, b)), q(a)), q(b))
    return tuple(tuple(r) for r in G)


# --- presets ----------------------------------------------------------------


def quadratic_space(p, kind="hyperbolic", name=""):
    """Case I over GF(p): L hyperbolic (q = a1 a2), anisotropic 1-dim (q = a^2), or 0."""
    F = Field.get(p)
    if kind == "hyperbolic":
        qc = [[0, 1], [0, 0]]
    elif kind == "anisotropic":
        qc = [[1]]
    elif kind == "none":
        qc = []
    else:
        raise InputError(f"unknown quadratic space kind {kind!r}")
    l_dim = len(qc)
    return LambdaSpace(
        case="I",
        field=F,
        l_dim=l_dim,
        gram_f=_gram_from_coeffs(F, qc, "I"),
        q_table=_q_table_from_coeffs(F, qc, l_dim),
        allow_trivial_l=(l_dim == 0),
        name=name,
    )


def symplectic_space(p, l_dim=0, name=""):
    """Case II with K0 = K, sigma = 1 and f alternating on L = K^l_dim."""
    F = Field.get(p)
    if l_dim % 2:
        raise InputError("alternating f needs even dim(L)")
    G = [[0] * l_dim for _ in range(l_dim)]
    for i in range(0, l_dim, 2):
        G[i][i + 1] = 1
        G[i + 1][i] = F.neg(1)
    return LambdaSpace(
        case="II",
        field=F,
        l_dim=l_dim,
        gram_f=tuple(tuple(r) for r in G),
        q_table=(0,) * (F.order**l_dim),
        k0=frozenset(F.elements()),
        name=name,
    )


def hermitian_space(p=2, kind="none", name=""):
    """Case II over GF(p^2) with Frobenius, K0 = fixed field; L = 0 or hermitian hyperbolic."""
    F = Field.get(p, 2, True)
    qc = {"none": [], "hyperbolic": [[0, 1], [0, 0]]}.get(kind)
    if qc is None:
        raise InputError(f"unknown hermitian space kind {kind!r}")
    l_dim = len(qc)
    return LambdaSpace(
        case="II",
        field=F,
        l_dim=l_dim,
        gram_f=_gram_from_coeffs(F, qc, "II"),
        q_table=_q_table_from_coeffs(F, qc, l_dim),
        k0=F.fixed_field(),
        name=name,
    )


PRESETS = {
    "w3": lambda: symplectic_space(3, 0, name="w3"),
    "sp63": lambda: symplectic_space(3, 2, name="sp63"),
    "q5plus3": lambda: quadratic_space(3, "hyperbolic", name="q5plus3"),
    "h34": lambda: hermitian_space(2, "none", name="h34"),
    "h54": lambda: hermitian_space(2, "hyperbolic", name="h54"),
    "grid": lambda: quadratic_space(3, "none", name="grid"),
    "q5plus2": lambda: quadratic_space(2, "hyperbolic", name="q5plus2"),
    "q4_2": lambda: quadratic_space(2, "anisotropic", name="q4_2"),
    "q4_3": lambda: quadratic_space(3, "anisotropic", name="q4_3"),
    "d3_3": lambda: quadratic_space(3, "hyperbolic", name="d3_3"),
    "d3_5": lambda: quadratic_space(5, "hyperbolic", name="d3_5"),
}

# the six instances the CLI and the acceptance suite treat as the catalog
CORE_PRESETS = ("w3", "q5plus3", "sp63", "h34", "h54", "grid")


def preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise InputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


# --- operations ---------------------------------------------------------------


def check_nondegenerate(lam):
    """No nonzero a in L with q(a) in K0 (Case I: q(a) = 0) and a in the radical of f."""
    F = lam.field
    for a in lam.l_vectors():
        if not any(a):
            continue
        if lam.q(a) not in lam.k0:
            continue
        if all(lam.f(a, b) == 0 for b in lam.l_vectors()):
            return False
    return True


def build_ambient(lam):
    """FormTables for V = K^4 + L with basis order (x1, x1', x2, x2', L-basis)."""
    lam.validate()
    if not check_nondegenerate(lam):
        raise InputError("Lambda is degenerate")
    F = lam.field
    n = 4 + lam.l_dim
    G = [[0] * n for _ in range(n)]
    if lam.case == "I":
        G[0][1] = G[1][0] = G[2][3] = G[3][2] = 1
    else:
        G[0][1] = G[2][3] = 1
        G[1][0] = G[3][2] = F.neg(1)
    for i in range(lam.l_dim):
        for j in range(lam.l_dim):
            G[4 + i][4 + j] = lam.gram_f[i][j]
    return FormTables(F, lam.case_tag, G, lam.q_table, lam.k0, lam.l_dim)


class GroupT:
    """The parameter group T: (L, +) in Case I, the pairs (a, t) in Case II."""

    def __init__(self, lam):
        self.lam = lam
        F = lam.field
        self.field = F
        if lam.case == "I":
            self.elements = tuple(lam.l_vectors())
            self.identity = (0,) * lam.l_dim
        else:
            elems = []
            for a in lam.l_vectors():
                qa = lam.q(a)
                for t in F.elements():
                    if F.sub(qa, t) in lam.k0:
                        elems.append((a, t))
            self.elements = tuple(elems)
            self.identity = ((0,) * lam.l_dim, 0)
        self.index = {e: i for i, e in enumerate(self.elements)}

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def mul(self, x, y):
        F = self.field
        if self.lam.case == "I":
            return vec_add(F, x, y)
        (a, t), (b, u) = x, y
        return (vec_add(F, a, b), F.add(F.add(t, u), self.lam.f(b, a)))

    def inv(self, x):
        F = self.field
        if self.lam.case == "I":
            return tuple(F.neg(c) for c in x)
        a, t = x
        return (tuple(F.neg(c) for c in a), F.neg(F.sigma(t)))

    def is_abelian(self):
        return all(self.mul(x, y) == self.mul(y, x) for x in self for y in self)

    def verify(self):
        """Closure, identity, inverses and associativity, exhaustively."""
        idx = self.index
        for x in self:
            if self.mul(self.identity, x) != x or self.mul(x, self.identity) != x:
                raise TheoremViolation("identity law fails in T", x)
            xi = self.inv(x)
            if xi not in idx or self.mul(x, xi) != self.identity or self.mul(xi, x) != self.identity:
                raise TheoremViolation("inverse law fails in T", x)
            for y in self:
                if self.mul(x, y) not in idx:
                    raise TheoremViolation("T is not closed", (x, y))
        table = {(x, y): self.mul(x, y) for x in self for y in self}
        for x in self:
            for y in self:
                xy = table[x, y]
                for z in self:
                    if table[xy, z] != table[x, table[y, z]]:
                        raise TheoremViolation("T is not associative", (x, y, z))
        return True


def build_T(lam):
    lam.validate()
    if not check_nondegenerate(lam):
        raise InputError("Lambda is degenerate")
    T = GroupT(lam)
    T.verify()
    return T


@dataclass(frozen=True)
class SingularCatalog:
    """W1 as normalized vectors, W2 as sorted tuples of W1 indices."""

    forms: FormTables
    points: tuple
    lines: tuple

    def __post_init__(self):
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.points)})
        object.__setattr__(self, "_line_index", {ln: i for i, ln in enumerate(self.lines)})

    @property
    def field(self):
        return self.forms.field

    def point_id(self, v):
        """Index of the point spanned by the (nonzero) vector v."""
        from .algebra import normalize

        return self._index[normalize(self.field, tuple(v))]

    def line_id(self, point_ids):
        return self._line_index[tuple(sorted(point_ids))]

    def line_through(self, i, j):
        """The line containing points i != j, or None."""
        for ln in self.lines_of_point(i):
            if j in self.lines[ln]:
                return ln
        return None

    def lines_of_point(self, i):
        cache = self.__dict__.get("_pl")
        if cache is None:
            cache = [[] for _ in self.points]
            for k, ln in enumerate(self.lines):
                for a in ln:
                    cache[a].append(k)
            object.__setattr__(self, "_pl", cache)
        return cache[i]

    def to_json(self):
        F = self.field
        return {
            "field": F.to_json(),
            "points": [[list(F.coeffs(x)) for x in v] for v in self.points],
            "lines": [list(ln) for ln in self.lines],
        }


def enumerate_singular(lam_or_forms, cap=DEFAULT_CAP):
    """All singular points and totally singular lines of V."""
    forms = lam_or_forms if isinstance(lam_or_forms, FormTables) else build_ambient(lam_or_forms)
    F = forms.field
    n = forms.dim
    if F.order**n > cap:
        raise CapExceeded(f"|V| = {F.order}^{n} exceeds the cap {cap}")
    V = all_vectors(F, n)
    lead = np.zeros(V.shape[0], dtype=np.int64)
    for j in range(n - 1, -1, -1):
        lead = np.where(V[:, j] != 0, V[:, j], lead)
    V = V[lead == 1]
    sing = forms.k0_mask[forms.Q_many(V)] & (forms.F_rows(V, V) == 0)
    P = V[sing]
    codes = np.zeros(P.shape[0], dtype=np.int64)
    for j in range(n):
        codes = codes * F.order + P[:, j]
    # rows of all_vectors are in code order, so P is already sorted
    FM = forms.F_matrix(P, P)
    N = P.shape[0]
    covered = np.eye(N, dtype=bool)
    lines = []
    for i in range(N):
        J = np.nonzero((FM[i] == 0) & ~covered[i])[0]
        J = J[J > i]
        if not len(J):
            continue
        members = [np.full(len(J), i), J]
        for a in range(1, F.order):
            W = F.ADD[F.MUL[P[i], a][None, :], P[J]]
            W = normalize_rows(F, W)
            wc = np.zeros(len(J), dtype=np.int64)
            for j in range(n):
                wc = wc * F.order + W[:, j]
            pos = np.searchsorted(codes, wc)
            ok = (pos < N) & (codes[np.minimum(pos, N - 1)] == wc)
            if not ok.all():
                bad = J[~ok][0]
                raise TheoremViolation("span of orthogonal singular points leaves W1", (i, int(bad)))
            members.append(pos)
        M = np.stack(members, axis=1)
        for row, j in zip(M, J):
            if covered[i, j]:
                continue
            pts = np.unique(row)
            if len(pts) != F.order + 1:
                raise TheoremViolation("line does not have |K|+1 points", (i, int(j)))
            covered[np.ix_(pts, pts)] = True
            lines.append(tuple(int(x) for x in pts))
    lines.sort()
    points = tuple(tuple(int(x) for x in row) for row in P.tolist())
    return SingularCatalog(forms, points, tuple(lines))


def apply_matrix_to_points(catalog, M):
    """Image index of every catalog point under v -> vM, with a mask of images found in the catalog."""
    F = catalog.field
    P = np.array(catalog.points, dtype=np.int64)
    W = normalize_rows(F, field_matmul(F, P, np.array(M, dtype=np.int64)))
    n = W.shape[1]
    codes = np.zeros(W.shape[0], dtype=np.int64)
    src = np.zeros(P.shape[0], dtype=np.int64)
    for j in range(n):
        codes = codes * F.order + W[:, j]
        src = src * F.order + P[:, j]
    pos = np.searchsorted(src, codes)
    N = len(src)
    ok = (pos < N) & (src[np.minimum(pos, N - 1)] == codes)
    return pos, ok
