import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vquad.algebra import (
    Field,
    FormTables,
    commutator,
    conjugate,
    identity,
    is_invertible,
    mat_inv,
    mat_mul,
    normalize,
    vec_mat,
)
from vquad.errors import DimensionError, InputError
from vquad.spaces import PRESETS, build_ambient, preset

FIELDS = [(2, 1, False), (3, 1, False), (5, 1, False), (7, 1, False), (2, 2, False), (2, 2, True), (3, 2, True)]


@pytest.fixture(params=FIELDS, ids=lambda f: f"GF({f[0]}^{f[1]}){'*' if f[2] else ''}")
def F(request):
    return Field.get(*request.param)


def test_field_axioms_exhaustive(F):
    E = F.elements()
    for a, b in itertools.product(E, repeat=2):
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)
        assert F.sub(F.add(a, b), b) == a
    for a in F.nonzero():
        assert F.mul(a, F.inv(a)) == 1
    for a, b, c in itertools.product(E, repeat=3):
        assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))


def test_sigma_is_an_involutive_automorphism(F):
    for a, b in itertools.product(F.elements(), repeat=2):
        assert F.sigma(F.add(a, b)) == F.add(F.sigma(a), F.sigma(b))
        assert F.sigma(F.mul(a, b)) == F.mul(F.sigma(a), F.sigma(b))
    assert all(F.sigma(F.sigma(a)) == a for a in F.elements())
    fixed = F.fixed_field()
    assert len(fixed) == (F.p if F.involution else F.order)


def test_frobenius_on_gf4_is_squaring():
    F = Field.get(2, 2, True)
    assert [F.sigma(a) for a in F.elements()] == [F.mul(a, a) for a in F.elements()]


def test_unsupported_fields():
    with pytest.raises(InputError):
        Field(11)
    with pytest.raises(InputError):
        Field(3, 1, True)


def test_field_json_roundtrip(F):
    assert Field.from_json(F.to_json()) is F or Field.from_json(F.to_json()).to_json() == F.to_json()


def _mat_strategy(p, n):
    return st.lists(st.lists(st.integers(0, p - 1), min_size=n, max_size=n), min_size=n, max_size=n)


@given(_mat_strategy(5, 3), _mat_strategy(5, 3))
def test_matrix_inverse_and_commutator_convention(A, B):
    F = Field.get(5)
    if not (is_invertible(F, A) and is_invertible(F, B)):
        return
    Ai, Bi = mat_inv(F, A), mat_inv(F, B)
    I = identity(3)
    assert [list(r) for r in mat_mul(F, A, Ai)] == [list(r) for r in I]
    # [a, b] = a^-1 b^-1 a b and x^g = g^-1 x g
    expect = mat_mul(F, mat_mul(F, mat_mul(F, Ai, Bi), A), B)
    assert [list(r) for r in commutator(F, A, B)] == [list(r) for r in expect]
    assert [list(r) for r in conjugate(F, A, B)] == [list(r) for r in mat_mul(F, mat_mul(F, Bi, A), B)]


@given(st.lists(st.integers(0, 6), min_size=4, max_size=4), _mat_strategy(7, 4), _mat_strategy(7, 4))
def test_row_action_composes_left_to_right(v, A, B):
    F = Field.get(7)
    assert list(vec_mat(F, vec_mat(F, v, A), B)) == list(vec_mat(F, v, mat_mul(F, A, B)))


@given(st.lists(st.integers(0, 3), min_size=3, max_size=3).filter(any), st.integers(1, 3))
def test_normalize_is_projective(v, c):
    F = Field.get(2, 2)
    w = [F.mul(x, c) for x in v]
    assert normalize(F, tuple(v)) == normalize(F, tuple(w))
    assert next(x for x in normalize(F, tuple(v)) if x) == 1


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_forms_are_compatible(name):
    # Q(u+v) - Q(u) - Q(v) - F(u, v) lies in K0
    forms = build_ambient(preset(name))
    assert forms.compatibility_defects() == []


@pytest.mark.parametrize("name", ["w3", "h34", "q5plus2"])
def test_vectorized_forms_match_scalar(name):
    forms = build_ambient(preset(name))
    V = forms.sweep_vectors()[:300]
    Q = forms.Q_many(V)
    FM = forms.F_matrix(V[:20], V[:20])
    for i, v in enumerate(V.tolist()):
        assert forms.q_equiv(int(Q[i]), forms.eval_Q(v))
    for i, j in itertools.product(range(20), repeat=2):
        assert FM[i, j] == forms.eval_F(V[i].tolist(), V[j].tolist())


def test_dimension_errors():
    forms = build_ambient(preset("w3"))
    with pytest.raises(DimensionError):
        forms.eval_Q([1, 0, 0])
    with pytest.raises(DimensionError):
        FormTables(Field.get(3), "I", [[0, 1], [1, 0]], [0], {0}, 1)


def test_isometry_rejects_scaling():
    # over GF(5), 2v scales Q by 4 != 1
    forms = build_ambient(preset("d3_5"))
    n = forms.dim
    M = [[2 if i == j else 0 for j in range(n)] for i in range(n)]
    assert not forms.is_isometry(M)
    assert forms.is_isometry(np.eye(n, dtype=int).tolist())
