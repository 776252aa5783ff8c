"""Exact arithmetic over GF(p) and GF(p^2), vectors, matrices and the forms Q, F.

Field elements are small ints. In GF(p^2) the element ``c0 + c1*x`` is encoded
as ``c0 + c1*p`` where ``x`` is a root of the pinned quadratic in
``QUADRATIC_MODULI``. Vectors are tuples of element codes, matrices are tuples
of rows. Matrices act on row vectors from the right, so the product ``A @ B``
means "first A, then B".
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import DimensionError, InputError

PRIMES = (2, 3, 5, 7)

# x^2 == c0 + c1*x; fixed so that serialized GF(p^2) scalars stay stable.
QUADRATIC_MODULI = {
    2: (1, 1),  # x^2 + x + 1
    3: (2, 0),  # x^2 + 1
    5: (2, 0),  # x^2 - 2
    7: (3, 0),  # x^2 - 3
}

SWEEP_LIMIT = 10**6


class Field:
    """GF(p) or GF(p^2), optionally carrying the Frobenius involution."""

    def __init__(self, p, d=1, involution=False):
        if p not in PRIMES:
            raise InputError(f"characteristic {p} not supported (use one of {PRIMES})")
        if d not in (1, 2):
            raise InputError(f"degree {d} not supported")
        if involution and d != 2:
            raise InputError("a non-identity involution needs d=2")
        self.p = p
        self.d = d
        self.involution = bool(involution)
        self.order = p**d
        q = self.order
        coeffs = [self._coeffs(a) for a in range(q)]
        add = np.zeros((q, q), dtype=np.int64)
        mul = np.zeros((q, q), dtype=np.int64)
        for a, b in itertools.product(range(q), repeat=2):
            ca, cb = coeffs[a], coeffs[b]
            add[a, b] = self._encode([(x + y) % p for x, y in zip(ca, cb)])
            mul[a, b] = self._encode(self._poly_mul(ca, cb))
        neg = np.array([self._encode([(-c) % p for c in coeffs[a]]) for a in range(q)])
        inv = np.zeros(q, dtype=np.int64)
        for a in range(1, q):
            inv[a] = int(np.nonzero(mul[a] == 1)[0][0])
        if self.involution:
            # Frobenius x -> x^p
            sig = np.zeros(q, dtype=np.int64)
            for a in range(q):
                r = 1
                for _ in range(p):
                    r = int(mul[r, a])
                sig[a] = r
        else:
            sig = np.arange(q, dtype=np.int64)
        sub = add[:, neg]
        for arr in (add, sub, mul, neg, inv, sig):
            arr.setflags(write=False)
        self.ADD, self.SUB, self.MUL = add, sub, mul
        self.NEG, self.INV, self.SIG = neg, inv, sig
        self._add = add.tolist()
        self._sub = sub.tolist()
        self._mul = mul.tolist()
        self._neg = neg.tolist()
        self._inv = inv.tolist()
        self._sig = sig.tolist()

    @classmethod
    def get(cls, p, d=1, involution=False):
        return _field(int(p), int(d), bool(involution))

    def _coeffs(self, a):
        if self.d == 1:
            return (a,)
        return (a % self.p, a // self.p)

    def _encode(self, cs):
        if self.d == 1:
            return cs[0] % self.p
        return cs[0] % self.p + (cs[1] % self.p) * self.p

    def _poly_mul(self, ca, cb):
        p = self.p
        if self.d == 1:
            return [(ca[0] * cb[0]) % p]
        r0, r1 = QUADRATIC_MODULI[p]
        a0, a1 = ca
        b0, b1 = cb
        c0 = a0 * b0
        c1 = a0 * b1 + a1 * b0
        c2 = a1 * b1
        return [(c0 + c2 * r0) % p, (c1 + c2 * r1) % p]

    # scalar operations
    def add(self, a, b):
        return self._add[a][b]

    def sub(self, a, b):
        return self._sub[a][b]

    def mul(self, a, b):
        return self._mul[a][b]

    def neg(self, a):
        return self._neg[a]

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return self._inv[a]

    def div(self, a, b):
        return self._mul[a][self.inv(b)]

    def sigma(self, a):
        return self._sig[a]

    def from_int(self, n):
        """Image of the integer n in the prime subfield."""
        return n % self.p

    def elements(self):
        return range(self.order)

    def nonzero(self):
        return range(1, self.order)

    def coeffs(self, a):
        return self._coeffs(a)

    def from_coeffs(self, cs):
        cs = list(cs)
        if len(cs) != self.d:
            raise InputError(f"expected {self.d} coefficients, got {cs!r}")
        return self._encode(cs)

    def fixed_field(self):
        return frozenset(a for a in self.elements() if self._sig[a] == a)

    def traces(self):
        return frozenset(self._add[a][self._sig[a]] for a in self.elements())

    def to_json(self):
        return {"p": self.p, "d": self.d, "sigma": "frobenius" if self.involution else "identity"}

    @classmethod
    def from_json(cls, data):
        try:
            p, d = int(data["p"]), int(data.get("d", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad field descriptor {data!r}") from exc
        sigma = data.get("sigma", "identity")
        if sigma not in ("identity", "frobenius"):
            raise InputError(f"unknown involution {sigma!r}")
        return cls.get(p, d, sigma == "frobenius")

    def __repr__(self):
        s = ", frobenius" if self.involution else ""
        return f"GF({self.p}^{self.d}{s})" if self.d > 1 else f"GF({self.p})"

    def __reduce__(self):
        return (Field.get, (self.p, self.d, self.involution))

    def __eq__(self, other):
        return isinstance(other, Field) and (self.p, self.d, self.involution) == (other.p, other.d, other.involution)

    def __hash__(self):
        return hash((self.p, self.d, self.involution))


@lru_cache(maxsize=None)
def _field(p, d, involution):
    return Field(p, d, involution)


# --- vectors and matrices -------------------------------------------------


def zero_vector(n):
    return (0,) * n


def unit_vector(n, i):
    return tuple(1 if j == i else 0 for j in range(n))


def vec_add(F, u, v):
    return tuple(F._add[a][b] for a, b in zip(u, v))


def vec_sub(F, u, v):
    return tuple(F._sub[a][b] for a, b in zip(u, v))


def vec_scale(F, v, c):
    return tuple(F._mul[a][c] for a in v)


def normalize(F, v):
    """Scale v so its first nonzero coordinate is 1. Zero stays zero."""
    for a in v:
        if a:
            if a == 1:
                return tuple(v)
            return vec_scale(F, v, F.inv(a))
    return tuple(v)


def identity(n):
    return tuple(unit_vector(n, i) for i in range(n))


def vec_mat(F, v, M):
    mul, add = F._mul, F._add
    n = len(M[0])
    out = [0] * n
    for a, row in zip(v, M):
        if a:
            ma = mul[a]
            out = [add[o][ma[r]] for o, r in zip(out, row)]
    return tuple(out)


def mat_mul(F, A, B):
    return tuple(vec_mat(F, row, B) for row in A)


def mat_prod(F, *mats):
    out = mats[0]
    for M in mats[1:]:
        out = mat_mul(F, out, M)
    return out


def mat_inv(F, A):
    n = len(A)
    if any(len(r) != n for r in A):
        raise DimensionError("matrix is not square")
    M = [list(r) + list(e) for r, e in zip(A, identity(n))]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c]), None)
        if piv is None:
            raise InputError("matrix is not invertible")
        M[c], M[piv] = M[piv], M[c]
        M[c] = list(vec_scale(F, M[c], F.inv(M[c][c])))
        for r in range(n):
            if r != c and M[r][c]:
                M[r] = list(vec_sub(F, M[r], vec_scale(F, M[c], M[r][c])))
    return tuple(tuple(r[n:]) for r in M)


def is_invertible(F, A):
    try:
        mat_inv(F, A)
    except InputError:
        return False
    return True


def commutator(F, a, b, a_inv=None, b_inv=None):
    """[a, b] = a^-1 b^-1 a b."""
    a_inv = mat_inv(F, a) if a_inv is None else a_inv
    b_inv = mat_inv(F, b) if b_inv is None else b_inv
    return mat_prod(F, a_inv, b_inv, a, b)


def conjugate(F, x, g, g_inv=None):
    """x^g = g^-1 x g."""
    g_inv = mat_inv(F, g) if g_inv is None else g_inv
    return mat_prod(F, g_inv, x, g)


def all_vectors(F, n):
    """Every vector of F^n as an int array, in lexicographic (code) order."""
    q = F.order
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((q,) * n).reshape(n, -1).T
    return np.ascontiguousarray(grids, dtype=np.int64)


def vector_code(F, v):
    code = 0
    for a in v:
        code = code * F.order + a
    return code


def field_matmul(F, A, B):
    """Matrix product of int arrays over F (vectorized table lookups)."""
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    out = np.zeros((A.shape[0], B.shape[1]), dtype=np.int64)
    for k in range(A.shape[1]):
        out = F.ADD[out, F.MUL[A[:, k][:, None], B[k][None, :]]]
    return out


def normalize_rows(F, V):
    """Row-wise version of ``normalize`` for an int array."""
    V = np.asarray(V, dtype=np.int64)
    lead = np.zeros(V.shape[0], dtype=np.int64)
    found = np.zeros(V.shape[0], dtype=bool)
    for j in range(V.shape[1]):
        col = V[:, j]
        take = (~found) & (col != 0)
        lead[take] = col[take]
        found |= take
    scale = F.INV[np.where(found, lead, 1)]
    return F.MUL[V, scale[:, None]]


# --- forms ----------------------------------------------------------------


CASES = ("I", "II", "II-symplectic")


class FormTables:
    """The forms Q and F on V = K^4 + L.

    ``gram`` is the Gram matrix of F in the sense F(u, v) = sum sigma(u_i) G_ij v_j,
    ``q_table`` lists q on L by vector code. In Case II, Q is only defined modulo
    K0, so compare Q values with ``q_equiv``.
    """

    def __init__(self, field, case, gram, q_table, k0, l_dim):
        if case not in CASES:
            raise InputError(f"unknown case {case!r}")
        self.field = field
        self.case = case
        self.gram = tuple(tuple(r) for r in gram)
        self.dim = len(self.gram)
        self.l_dim = l_dim
        self.q_table = np.asarray(q_table, dtype=np.int64)
        self.k0 = frozenset(k0)
        mask = np.zeros(field.order, dtype=bool)
        mask[list(self.k0)] = True
        self.k0_mask = mask
        if self.dim != 4 + l_dim:
            raise DimensionError("Gram matrix size does not match 4 + dim L")
        if len(self.q_table) != field.order**l_dim:
            raise DimensionError("q table has the wrong length")
        self._gram_np = np.array(self.gram, dtype=np.int64).reshape(self.dim, self.dim)

    @property
    def sigma_trivial(self):
        return not self.field.involution

    def _check(self, v):
        if len(v) != self.dim:
            raise DimensionError(f"vector of length {len(v)} in a space of dimension {self.dim}")

    def eval_Q(self, v):
        self._check(v)
        F = self.field
        s = F.add(F.mul(F.sigma(v[0]), v[1]), F.mul(F.sigma(v[2]), v[3]))
        return F.add(s, int(self.q_table[vector_code(F, v[4:])]))

    def eval_F(self, u, v):
        self._check(u)
        self._check(v)
        F = self.field
        out = 0
        for i, a in enumerate(u):
            if not a:
                continue
            sa = F.sigma(a)
            for j, g in enumerate(self.gram[i]):
                if g and v[j]:
                    out = F.add(out, F.mul(F.mul(sa, g), v[j]))
        return out

    def in_k0(self, x):
        return x in self.k0

    def q_equiv(self, x, y):
        return self.field.sub(x, y) in self.k0

    # vectorized variants over int arrays of shape (N, dim)
    def Q_many(self, V):
        F = self.field
        V = np.asarray(V, dtype=np.int64)
        s = F.ADD[F.MUL[F.SIG[V[:, 0]], V[:, 1]], F.MUL[F.SIG[V[:, 2]], V[:, 3]]]
        code = np.zeros(V.shape[0], dtype=np.int64)
        for j in range(4, self.dim):
            code = code * F.order + V[:, j]
        return F.ADD[s, self.q_table[code]]

    def F_matrix(self, U, V):
        """All values F(u, v) for rows u of U and v of V."""
        F = self.field
        W = field_matmul(F, F.SIG[np.asarray(U, dtype=np.int64)], self._gram_np)
        return field_matmul(F, W, np.asarray(V, dtype=np.int64).T)

    def F_rows(self, U, V):
        """F(u_k, v_k) row by row."""
        F = self.field
        W = field_matmul(F, F.SIG[np.asarray(U, dtype=np.int64)], self._gram_np)
        V = np.asarray(V, dtype=np.int64)
        out = np.zeros(V.shape[0], dtype=np.int64)
        for j in range(self.dim):
            out = F.ADD[out, F.MUL[W[:, j], V[:, j]]]
        return out

    def sweep_vectors(self):
        """Exhaustive sweep of V when small, else basis plus pairwise sums."""
        F = self.field
        if F.order**self.dim <= SWEEP_LIMIT:
            return all_vectors(F, self.dim)
        return self._basis_sums()

    def _basis_sums(self):
        F = self.field
        basis = [unit_vector(self.dim, i) for i in range(self.dim)]
        rows = list(basis)
        for u, v in itertools.combinations(basis, 2):
            rows.append(vec_add(F, u, v))
        return np.array(rows, dtype=np.int64)

    def is_isometry(self, M):
        """True iff M preserves F on basis pairs and Q (mod K0) on the sweep."""
        F = self.field
        if len(M) != self.dim or any(len(r) != self.dim for r in M):
            raise DimensionError("matrix size does not match V")
        if not is_invertible(F, M):
            raise InputError("isometry test needs an invertible matrix")
        Mn = np.array(M, dtype=np.int64)
        # rows of M are images of basis vectors: need sigma(M) G M^T == G
        img = field_matmul(F, field_matmul(F, F.SIG[Mn], self._gram_np), Mn.T)
        if not np.array_equal(img, self._gram_np):
            return False
        V = self.sweep_vectors()
        before = self.Q_many(V)
        after = self.Q_many(field_matmul(F, V, Mn))
        return bool(self.k0_mask[F.SUB[after, before]].all())

    def compatibility_defects(self, limit=SWEEP_LIMIT):
        """Pairs (u, v) breaking Q(u+v) - Q(u) - Q(v) - F(u, v) in K0.

        In Case I the defect must be exactly 0. Sweeps all pairs when |V|^2 is
        within ``limit``; otherwise uses basis vectors and their pairwise sums.
        """
        F = self.field
        if (F.order**self.dim) ** 2 <= limit:
            V = all_vectors(F, self.dim)
        else:
            V = self._basis_sums()
        n = V.shape[0]
        QV = self.Q_many(V)
        FM = self.F_matrix(V, V)
        bad = []
        for i in range(n):
            S = F.ADD[V[i][None, :], V]
            lhs = F.SUB[F.SUB[self.Q_many(S), QV[i]], QV]
            d = F.SUB[lhs, FM[i]]
            for j in np.nonzero(~self.k0_mask[d])[0]:
                bad.append((tuple(V[i].tolist()), tuple(V[j].tolist())))
                if len(bad) > 10:
                    return bad
        return bad
