import itertools
import math

import pytest
from hypothesis import given, strategies as st

from wbfuzz import distance as D
from wbfuzz.distance import ValidationConstraint as VC


def expected_scale(d, b=0.1):
    return b + (1 - b) / (1 + d)


class TestScale:
    def test_zero_distance_is_one(self):
        assert D.scale(0) == 1.0

    def test_unit_distance(self):
        assert abs(D.scale(1, 0.1) - 0.55) <= 1e-12

    @given(st.floats(min_value=0, max_value=1e12), st.floats(min_value=0.01, max_value=0.99))
    def test_matches_closed_form(self, d, b):
        assert D.scale(d, b) == pytest.approx(expected_scale(d, b), rel=1e-12, abs=1e-15)

    @given(st.floats(min_value=0, max_value=1e6), st.floats(min_value=1e-6, max_value=1e6))
    def test_non_increasing(self, d, delta):
        assert D.scale(d + delta) <= D.scale(d)

    def test_strictly_decreasing_on_grid(self):
        hs = [D.scale(d) for d in (0, 0.5, 1, 10, 1000)]
        assert all(a > b for a, b in zip(hs, hs[1:]))

    def test_infinite_distance_reaches_base(self):
        assert D.scale(math.inf, 0.2) == 0.2

    @pytest.mark.parametrize("b", [0.0, 1.0, -0.5, 2.0])
    def test_bad_base(self, b):
        with pytest.raises(D.DistanceConfigError):
            D.scale(1.0, b)

    def test_negative_distance(self):
        with pytest.raises(D.DistanceConfigError):
            D.scale(-1.0)


class TestCompare:
    OPS = {"<": lambda a, b: a < b, "<=": lambda a, b: a <= b, ">": lambda a, b: a > b,
           ">=": lambda a, b: a >= b, "==": lambda a, b: a == b, "!=": lambda a, b: a != b}

    @given(st.sampled_from(sorted(OPS)), st.integers(-1000, 1000), st.integers(-1000, 1000))
    def test_zero_side_matches_truth(self, op, a, b):
        dt, df = D.compare_distance(op, a, b)
        truth = self.OPS[op](a, b)
        assert (dt == 0) == truth
        assert (df == 0) == (not truth)
        assert dt >= 0 and df >= 0

    def test_strict_side_adds_one(self):
        assert D.compare_distance("<", 5, 5) == (1.0, 0.0)
        assert D.compare_distance(">", 3, 5) == (0.0 + 3.0, 0.0)

    def test_non_finite(self):
        assert D.compare_distance("<", math.nan, 1) == (D.MAX_DISTANCE, 0.0)
        assert D.numeric_eq_distance(math.inf, 1.0) == D.MAX_DISTANCE

    def test_unknown_operator(self):
        with pytest.raises(ValueError):
            D.compare_distance("<>", 1, 2)


class TestStrings:
    @given(st.text(max_size=8), st.text(max_size=8))
    def test_zero_iff_equal(self, s, t):
        assert (D.string_eq_distance(s, t) == 0) == (s == t)

    def test_length_gap_dominates_char_difference(self):
        assert D.string_eq_distance("ab", "abc") > D.string_eq_distance("abz", "abc")

    def test_closer_char_is_closer(self):
        assert D.string_eq_distance("abb", "abc") < D.string_eq_distance("aba", "abc")


DOMAIN = range(6)


def collections(max_size=4):
    for n in range(max_size + 1):
        yield from itertools.product(DOMAIN, repeat=n)


def removed_any(xs, ys):
    out = [x for x in xs if x not in ys]
    return len(out) != len(xs)


def removed_one(xs, e):
    out = list(xs)
    try:
        out.remove(e)
    except ValueError:
        return False
    return True


class TestCollections:
    def test_contains_exhaustive(self):
        for xs in collections():
            for e in DOMAIN:
                assert (D.contains_distance(e, xs) == 0) == (e in xs)

    def test_empty_collection_is_max(self):
        assert D.contains_distance(3, []) == D.MAX_DISTANCE

    def test_contains_is_min_over_elements(self):
        assert D.contains_distance(10, [1, 7, 30]) == 3.0

    def test_unsupported_elements_degrade_to_flag(self):
        assert D.contains_distance(object(), [object()]) == 1.0
        assert D.element_distance((1,), (1,)) == 0.0

    def test_contains_all_heuristic_empty_wanted(self):
        assert D.contains_all_heuristic([], [1, 2]) == 1.0

    def test_contains_all_heuristic_closed_form(self):
        ys, xs = [1, 9], [1, 2]
        expected = (1.0 + expected_scale(7)) / (2 + math.log(2))
        assert D.contains_all_heuristic(ys, xs) == pytest.approx(expected, rel=1e-12)

    def test_conjunction_and_disjunction(self):
        assert D.conjunction([1.0, 2.0, 0.5]) == 3.5
        assert D.disjunction([4.0, 0.5, 2.0]) == 0.5
        assert D.disjunction([]) == D.MAX_DISTANCE


class TestConstraints:
    @pytest.mark.parametrize("c,value,valid", [
        (VC("Min", (5,)), 5, True), (VC("Min", (5,)), 4, False),
        (VC("Max", (5,)), 6, False), (VC("Max", (5,)), 5, True),
        (VC("Positive"), 0, False), (VC("Positive"), 1, True),
        (VC("PositiveOrZero"), 0, True), (VC("PositiveOrZero"), -1, False),
        (VC("Negative"), 0, False), (VC("Negative"), -3, True),
        (VC("NegativeOrZero"), 0, True), (VC("NegativeOrZero"), 2, False),
        (VC("Size", (2, 3)), "ab", True), (VC("Size", (2, 3)), "abcd", False), (VC("Size", (2, 3)), [1], False),
        (VC("NotEmpty"), "", False), (VC("NotEmpty"), [0], True), (VC("NotEmpty"), None, False),
        (VC("NotBlank"), "  ", False), (VC("NotBlank"), " x", True),
        (VC("Null"), None, True), (VC("Null"), "x", False),
        (VC("NotNull"), None, False), (VC("NotNull"), 0, True),
        (VC("ImpliedNotNull"), None, False),
        (VC("AssertTrue"), True, True), (VC("AssertTrue"), False, False),
        (VC("AssertFalse"), False, True), (VC("AssertFalse"), True, False),
        (VC("Pattern", (r"[a-c]{2}",)), "ab", True), (VC("Pattern", (r"[a-c]{2}",)), "abc", False),
        (VC("EnumMembership", (("A", "B"),)), "B", True), (VC("EnumMembership", (("A", "B"),)), "C", False),
        (VC("Min", (1,)), None, True), (VC("Pattern", ("x",)), None, True),
    ])
    def test_valid_side_is_zero_exactly_when_valid(self, c, value, valid):
        dv, di = D.constraint_distance(c, value)
        assert (dv == 0) == valid
        assert (di == 0) == (not valid)

    @given(st.integers(-50, 50), st.integers(-50, 50))
    def test_min_gradient(self, k, v):
        dv, _ = D.constraint_distance(VC("Min", (k,)), v)
        assert dv == max(0, k - v)

    @pytest.mark.parametrize("kind", ["Future", "Past", "FutureOrPresent", "PastOrPresent", "Custom", "Email"])
    def test_unsupported(self, kind):
        with pytest.raises(D.UnsupportedConstraintError):
            D.constraint_distance(VC(kind), 1)
