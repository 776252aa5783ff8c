import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import built
from vquad.errors import InputError, TheoremViolation
from vquad.polar import LineSpace, bits, check_opposite_line_witnesses, check_plane_separation, members

RANKS = {"w3": 2, "h34": 2, "grid": 2, "q5plus3": 3, "sp63": 3, "h54": 3, "q4_3": 2, "q5plus2": 3}


@pytest.mark.parametrize("name", sorted(RANKS))
def test_presets_are_thick_nondegenerate_polar_spaces(name):
    S = built(name)[2]
    assert S.is_partially_linear()
    assert S.check_BS()
    assert S.is_nondegenerate()
    assert S.rank() == RANKS[name]
    assert S.is_thick()
    S.require_polar()


def test_grid_points_lie_on_two_lines():
    S = built("grid")[2]
    assert {len(S.point_lines[a]) for a in range(S.n)} == {2}


def test_bs_violation_on_a_triangle():
    # point 3 sees 0 and 1 but not 2 on the line {0, 1, 2}
    T = LineSpace(4, [[0, 1, 2], [0, 3], [1, 3]])
    assert not T.check_BS()
    assert T.bs_violation() is not None


def test_degenerate_cone_over_a_line():
    # a point collinear with everything lies in the radical
    S = LineSpace(5, [[0, 1, 2], [0, 3, 4]])
    assert not S.is_nondegenerate()


def test_bad_lines_rejected():
    with pytest.raises(InputError):
        LineSpace(3, [[0]])
    with pytest.raises(InputError):
        LineSpace(3, [[0, 5]])


@pytest.mark.parametrize("name", ["w3", "q5plus3", "h34"])
def test_perp_and_join_tables(name):
    S = built(name)[2]
    for a, b in itertools.combinations(range(min(S.n, 30)), 2):
        k = S.join[a, b]
        on_line = k >= 0
        assert on_line == bool(S.perp_bits[a] >> b & 1)
        if on_line:
            assert a in S.lines[k] and b in S.lines[k]


@pytest.mark.parametrize("name", ["q5plus3", "sp63"])
@given(data=st.data())
def test_span_is_smallest_subspace(name, data):
    S = built(name)[2]
    X = data.draw(st.sets(st.integers(0, S.n - 1), min_size=1, max_size=3))
    sb = S.span_bits(bits(X))
    assert S.is_subspace(sb)
    assert bits(X) & ~sb == 0
    assert S.span_bits(sb) == sb
    for k, lb in enumerate(S.line_bits):
        # a line meeting the span in two points lies inside it
        assert bin(lb & sb).count("1") <= 1 or lb & sb == lb


@pytest.mark.parametrize("name", ["q5plus3", "sp63", "w3"])
@given(data=st.data())
def test_singular_iff_pairwise_collinear(name, data):
    S = built(name)[2]
    X = data.draw(st.sets(st.integers(0, S.n - 1), min_size=1, max_size=3))
    pairwise = all(S.perp_bits[a] >> b & 1 for a, b in itertools.combinations(X, 2))
    assert S.is_singular(S.span_bits(bits(X))) == pairwise


@pytest.mark.parametrize("name,size", [("q5plus3", 16), ("sp63", 40), ("h54", 45)])
def test_perp_polar_sizes(name, size):
    S = built(name)[2]
    b = next(b for b in range(S.n) if not S.perp_bits[0] >> b & 1)
    S2, origin = S.perp_polar(0, b)
    assert S2.n == size
    assert S2.rank() == 2
    assert all(S.perp_bits[0] >> p & 1 and S.perp_bits[b] >> p & 1 for p in origin)


def test_perp_polar_in_rank_two_is_an_ovoid_slice():
    S = built("h34")[2]
    b = next(b for b in range(S.n) if not S.perp_bits[0] >> b & 1)
    T, _ = S.induced(S.perp_bits[0] & S.perp_bits[b])
    assert T.n == 3 and not T.lines


def test_perp_polar_rejects_collinear_points():
    S = built("w3")[2]
    b = members(S.perp_bits[0] & ~1)[0]
    with pytest.raises(InputError):
        S.perp_polar(0, b)


@pytest.mark.parametrize("name", ["w3", "h34", "q5plus3", "sp63"])
def test_far_point_exists_for_thick_spaces(name):
    S = built(name)[2]
    for b in range(S.n):
        if not S.perp_bits[0] >> b & 1:
            c = S.witness_far_point(0, b)
            assert not S.perp_bits[0] >> c & 1 and not S.perp_bits[b] >> c & 1


def test_grid_perp_polar_is_two_points():
    # a^perp cap b^perp in the grid is a pair of non-collinear points
    S = built("grid")[2]
    b = next(b for b in range(S.n) if not S.perp_bits[0] >> b & 1)
    T, _ = S.induced(S.perp_bits[0] & S.perp_bits[b])
    assert T.n == 2 and not T.lines


@pytest.mark.parametrize("name,size", [("sp63", 4), ("q5plus3", 2)])
def test_line_witnesses_in_rank_three(name, size):
    S = built(name)[2]
    assert check_opposite_line_witnesses(S) is None
    _, X = S.opposite_line_witness(0)
    assert bin(X).count("1") == size


def test_plane_separation():
    assert check_plane_separation(built("sp63")[2]) is None
    # in Q5+(3) each line lies on exactly two planes, and no third plane separates them
    S = built("q5plus3")[2]
    assert {len(S.singular_planes_through(k)) for k in range(len(S.lines))} == {2}
    assert check_plane_separation(S) is not None


@pytest.mark.parametrize("name", ["w3", "q5plus3"])
def test_line_space_json_roundtrip(name):
    S = built(name)[2]
    T = LineSpace.from_json(S.to_json())
    assert T == S and hash(T) == hash(S)


def test_malformed_line_space_json():
    with pytest.raises(InputError):
        LineSpace.from_json({"lines": []})
