import itertools
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vquad.errors import CapExceeded, InputError
from vquad.spaces import (
    CORE_PRESETS,
    PRESETS,
    GroupT,
    LambdaSpace,
    apply_matrix_to_points,
    build_ambient,
    build_T,
    enumerate_singular,
    preset,
)


def brute_force_counts(lam):
    """Singular points and lines by direct evaluation of the ambient forms.

    Points: nonzero singular vectors divided by |K|-1. Lines: ordered pairs of
    distinct perpendicular singular points divided by (|K|+1)|K|."""
    F = lam.field
    eps = lam.epsilon
    n = 4 + lam.l_dim

    def Q(v):
        s = F.add(F.mul(F.sigma(v[0]), v[1]), F.mul(F.sigma(v[2]), v[3]))
        return F.add(s, lam.q(v[4:]))

    def Fm(u, v):
        s = 0
        for i, j in ((0, 1), (2, 3)):
            s = F.add(s, F.mul(F.sigma(u[i]), v[j]))
            s = F.add(s, F.mul(eps, F.mul(F.sigma(u[j]), v[i])))
        return F.add(s, lam.f(u[4:], v[4:]))

    vecs = [v for v in itertools.product(F.elements(), repeat=n) if any(v)]
    sing = [v for v in vecs if Q(v) in lam.k0 and Fm(v, v) == 0]
    npts = len(sing) // (F.order - 1)
    reps = [v for v in sing if next(x for x in v if x) == 1]
    perp = sum(1 for u in reps for v in reps if u != v and Fm(u, v) == 0)
    return npts, perp // ((F.order + 1) * F.order)


# classical point counts, q the order of the field (of the fixed field for hermitian)
CLASSICAL_POINTS = {
    "w3": (3**4 - 1) // 2,
    "sp63": (3**6 - 1) // 2,
    "q5plus3": (3**3 - 1) * (3**2 + 1) // 2,
    "q5plus2": (2**3 - 1) * (2**2 + 1),
    "h34": (2**3 + 1) * (2**2 + 1),
    "h54": (2**6 - 1) * (2**5 + 1) // 3,
    "grid": (3 + 1) ** 2,
    "q4_2": (2**4 - 1),
    "q4_3": (3**4 - 1) // 2,
}


@pytest.mark.parametrize("name", sorted(CLASSICAL_POINTS))
def test_catalog_matches_brute_force_and_formula(name):
    lam = preset(name)
    cat = enumerate_singular(lam)
    assert len(cat.points) == CLASSICAL_POINTS[name]
    assert (len(cat.points), len(cat.lines)) == brute_force_counts(lam)


@pytest.mark.parametrize("name", sorted(CLASSICAL_POINTS))
def test_lines_are_projective_lines_of_singular_points(name):
    cat = enumerate_singular(preset(name))
    q = cat.field.order
    forms = cat.forms
    for ln in cat.lines[:50]:
        assert len(ln) == q + 1
        for i, j in itertools.combinations(ln, 2):
            assert forms.eval_F(list(cat.points[i]), list(cat.points[j])) == 0
            assert cat.line_through(i, j) == cat.line_id(ln)


def test_catalog_is_sorted_and_normalized():
    cat = enumerate_singular(preset("w3"))
    assert list(cat.points) == sorted(cat.points)
    assert all(next(x for x in v if x) == 1 for v in cat.points)
    assert list(cat.lines) == sorted(cat.lines)
    assert cat.point_id((2, 0, 0, 0)) == cat.point_id((1, 0, 0, 0))


def test_cap_exceeded():
    with pytest.raises(CapExceeded):
        enumerate_singular(preset("sp63"), cap=100)


def test_identity_acts_trivially_on_points():
    cat = enumerate_singular(preset("q5plus3"))
    n = cat.forms.dim
    I = [[int(i == j) for j in range(n)] for i in range(n)]
    pos, ok = apply_matrix_to_points(cat, I)
    assert ok.all()
    assert pos.tolist() == list(range(len(cat.points)))


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_lambda_json_roundtrip(name):
    lam = preset(name)
    again = LambdaSpace.from_json(json.loads(json.dumps(lam.to_json())))
    assert again == lam
    assert again.to_json() == lam.to_json()


def test_descriptor_from_coefficients():
    lam = LambdaSpace.from_json({"case": "I", "p": 3, "L": {"dim": 2, "q_coeffs": [[0, 1], [0, 0]]}})
    assert lam == preset("q5plus3")
    herm = LambdaSpace.from_json({"case": "II", "p": 2, "d": 2, "L": {"dim": 2, "q_coeffs": [[0, 1], [0, 0]]}})
    assert len(enumerate_singular(herm).points) == 693


@pytest.mark.parametrize(
    "bad",
    [
        {"case": "III", "p": 3},
        {"p": 3},
        [1, 2],
        {"case": "I", "p": 11, "L": {"dim": 1, "q_coeffs": [[1]]}},
        {"case": "I", "p": 3, "L": {"dim": 1, "q_table": [0, 1]}},
    ],
)
def test_malformed_descriptors(bad):
    with pytest.raises(InputError):
        LambdaSpace.from_json(bad)


def test_trivial_l_needs_opt_in():
    lam = LambdaSpace.from_json({"case": "I", "p": 3})
    with pytest.raises(InputError):
        lam.validate()
    assert len(enumerate_singular(preset("grid")).points) == 16


def test_degenerate_lambda_rejected():
    # q = 0 on a 1-dim L has the whole of L in the radical
    lam = LambdaSpace.from_json({"case": "I", "p": 3, "L": {"dim": 1, "q_coeffs": [[0]]}})
    with pytest.raises(InputError):
        build_ambient(lam)


def test_symplectic_needs_odd_characteristic():
    lam = LambdaSpace.from_json({"case": "II", "p": 2, "K0": "all", "L": {"dim": 0}})
    with pytest.raises(InputError):
        lam.validate()


@pytest.mark.parametrize("name,order,abelian", [
    ("w3", 3, True), ("q5plus3", 9, True), ("q4_3", 3, True), ("h34", 2, True), ("sp63", 27, False), ("h54", 32, False),
])
def test_group_T(name, order, abelian):
    T = build_T(preset(name))
    assert len(T) == order
    assert T.is_abelian() == abelian


@given(st.data())
def test_group_T_laws_on_random_triples(data):
    T = GroupT(preset("h54"))
    x, y, z = (data.draw(st.sampled_from(T.elements)) for _ in range(3))
    assert T.mul(T.mul(x, y), z) == T.mul(x, T.mul(y, z))
    assert T.mul(x, T.inv(x)) == T.identity


def test_core_presets_listed():
    assert set(CORE_PRESETS) <= set(PRESETS)
