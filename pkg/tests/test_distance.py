import math
from functools import lru_cache

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import STORED_ENTITY, conditions, filters, small_documents
from nosqlfuzz.distance import (
    EQ,
    GT,
    GTE,
    LT,
    LTE,
    MAX,
    NE,
    DistanceConfig,
    EmptyCollection,
    collection_distance,
    format_distance,
    hd_condition,
    hd_filter,
    levenshtein,
    mean_normalized,
    nu,
    rho,
)
from nosqlfuzz.filters import (
    All,
    And,
    Eq,
    Exists,
    FieldClause,
    Gt,
    Gte,
    In,
    Lt,
    Lte,
    Mod,
    Ne,
    Nin,
    Nor,
    Not,
    Or,
    Size,
    TypeIs,
    matches,
    parse_filter,
)
from nosqlfuzz.values import Int64, ObjectId

K = 1.0


def brute_levenshtein(a: str, b: str) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        return min(go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return go(len(a), len(b))


def clause(name, cond):
    return FieldClause((name,), cond)


class TestRho:
    def test_gte_distance_to_true_branch(self):
        assert rho(GTE, 42, 100) == 58 + K

    def test_numeric_equality(self):
        assert rho(EQ, 42, 17) == 25

    def test_char_equality_by_codepoint(self):
        assert rho(EQ, "b", "c") == 1
        assert rho(EQ, "a", "z") == 25

    def test_char_equality_without_codepoints(self):
        assert rho(EQ, "a", "z", DistanceConfig(char_as_codepoint=False)) == 1

    def test_text_equality_is_levenshtein(self):
        assert rho(EQ, "kitten", "sitting") == 3
        assert rho(EQ, "", "abc") == 3

    @pytest.mark.parametrize("op, a, b, expected", [
        (GT, 5, 3, 0), (GT, 3, 3, K), (GT, 2, 3, 1 + K),
        (GTE, 3, 3, 0), (GTE, 2, 3, 1 + K),
        (LT, 2, 3, 0), (LT, 3, 3, K), (LT, 5, 3, 2 + K),
        (LTE, 3, 3, 0), (LTE, 5, 3, 2),
        (EQ, 3, 3.0, 0), (EQ, Int64(3), 5, 2),
        (NE, 3, 4, 0), (NE, 3, 3.0, K),
    ])
    def test_numeric_table(self, op, a, b, expected):
        assert rho(op, a, b) == expected

    def test_k_scales_offsets(self):
        cfg = DistanceConfig(K=2.5)
        assert rho(GT, 3, 3, cfg) == 2.5
        assert rho(NE, 1, 1, cfg) == 2.5
        assert rho(LTE, 5, 3, cfg) == 2

    @pytest.mark.parametrize("op, a, b, expected", [
        (GT, "b", "a", 0), (GT, "a", "b", 1 + K), (GT, "a", "a", K),
        (LT, "a", "c", 0), (LT, "c", "a", 2 + K), (GTE, "ab", "a", 0),
        (LTE, "abc", "ab", 1), (GTE, "a", "ab", 1 + K),
    ])
    def test_text_ordering(self, op, a, b, expected):
        assert rho(op, a, b) == expected

    def test_categorical_kinds(self):
        assert rho(EQ, True, True) == 0 and rho(EQ, True, False) == K
        assert rho(EQ, None, None) == 0
        assert rho(EQ, [1, 2], [1, 2]) == 0 and rho(EQ, [1], [2]) == K
        assert rho(EQ, {"a": 1}, {"a": 1}) == 0 and rho(EQ, {}, {"a": 1}) == K
        oid = ObjectId("a" * 24)
        assert rho(EQ, oid, ObjectId("b" * 24)) == K and rho(EQ, oid, oid) == 0

    def test_incomparable(self):
        assert rho(EQ, "1", 1) == MAX
        assert rho(GT, True, False) == MAX
        assert rho(LT, [1], [2]) == MAX
        assert rho(EQ, True, 1) == MAX

    def test_nan_and_overflow_are_max(self):
        assert rho(EQ, math.nan, 1.0) == MAX
        assert rho(GT, 1.0, math.nan) == MAX
        assert rho(EQ, 1.7e308, -1.7e308) == MAX

    @given(st.text("abc", max_size=6), st.text("abc", max_size=6))
    def test_levenshtein_matches_brute_force(self, a, b):
        assert levenshtein(a, b) == brute_levenshtein(a, b)
        if not (len(a) == 1 and len(b) == 1):
            assert rho(EQ, a, b) == brute_levenshtein(a, b)

    @given(st.text(max_size=4), st.text(max_size=4))
    def test_text_ordering_zero_iff_holds(self, a, b):
        assert (rho(GT, a, b) == 0) == (a > b)
        assert (rho(GTE, a, b) == 0) == (a >= b)
        assert (rho(LT, a, b) == 0) == (a < b)
        assert (rho(LTE, a, b) == 0) == (a <= b)


class TestNu:
    def test_values(self):
        assert nu(0) == 0.0
        assert nu(1) == 0.5
        assert nu(25) == pytest.approx(25 / 26, abs=1e-12)
        assert nu(MAX) == 1.0

    @given(st.floats(0, 1e300), st.floats(0, 1e300))
    def test_monotone_and_bounded(self, a, b):
        if a <= b:
            assert nu(a) <= nu(b)
        assert 0.0 <= nu(a) <= 1.0


class TestConditions:
    def test_eq_worked_example(self):
        assert hd_condition(STORED_ENTITY, ("x",), Eq(17)) == 25

    def test_exists_on_present_field(self):
        assert hd_condition({"x": 42}, ("x",), Exists(True)) == 0

    def test_exists_on_absent_field_uses_field_names(self):
        assert hd_condition({"xy": 1, "abc": 2}, ("x",), Exists(True)) == 1
        assert hd_condition({"p": {"cty": 1}}, ("p", "city"), Exists(True)) == 1
        assert hd_condition({}, ("x",), Exists(True)) == MAX

    def test_exists_false(self):
        assert hd_condition({"x": 1}, ("x",), Exists(False)) == K
        assert hd_condition({}, ("x",), Exists(False)) == 0

    def test_all(self):
        assert hd_condition({"a": [1, 5]}, ("a",), All((2, 5))) == pytest.approx(0.5, abs=1e-12)
        assert hd_condition({"a": 1}, ("a",), All((1,))) == MAX
        assert hd_condition({"a": []}, ("a",), All((1, 2))) == 2.0

    def test_in_takes_closest(self):
        assert hd_condition({"a": 10}, ("a",), In((3, 12, 40))) == 2
        assert hd_condition({"a": 10}, ("a",), In(())) == MAX

    def test_nin(self):
        assert hd_condition({"a": 10}, ("a",), Nin((10, 11))) == K
        assert hd_condition({"a": 10}, ("a",), Nin((11,))) == 0

    def test_ne(self):
        assert hd_condition({"a": 10}, ("a",), Ne(10)) == K
        assert hd_condition({}, ("a",), Ne(10)) == 0

    def test_mod_truncated(self):
        assert hd_condition({"a": 10}, ("a",), Mod(4, 1)) == 1
        assert hd_condition({"a": -10}, ("a",), Mod(4, 2)) == 4  # -10 mod 4 is -2
        assert hd_condition({"a": "10"}, ("a",), Mod(4, 2)) == MAX

    def test_size(self):
        assert hd_condition({"a": [1, 2]}, ("a",), Size(3)) == 1
        assert hd_condition({"a": "ab"}, ("a",), Size(2)) == MAX

    def test_type_is_categorical(self):
        assert hd_condition({"a": 1}, ("a",), TypeIs("int")) == 0
        assert hd_condition({"a": 1}, ("a",), TypeIs("double")) == K

    def test_not(self):
        assert hd_condition({"a": 5}, ("a",), Not(Gt(3))) == 2  # distance of a <= 3
        assert hd_condition({"a": 1}, ("a",), Not(Gt(3))) == 0
        assert hd_condition({"a": 4}, ("a",), Not(Mod(2, 0))) == K
        assert hd_condition({"a": 3}, ("a",), Not(Mod(2, 0))) == 0
        assert hd_condition({"a": "s"}, ("a",), Not(Gt(3))) == 0
        assert hd_condition({}, ("a",), Not(Gt(3))) == 0

    @pytest.mark.parametrize("cond", [Eq(1), Gt(1), Gte(1), Lt(1), Lte(1), In((1,)), Nin((1,)),
                                      Mod(2, 1), Size(1), TypeIs("int"), All((1,))])
    def test_absent_field_penalty(self, cond):
        assert hd_condition({"b": 1}, ("a",), cond) == MAX
        cfg = DistanceConfig(missing_field_penalty=7.0)
        assert hd_condition({"b": 1}, ("a",), cond, cfg) == 7.0

    @given(st.integers(-1000, 1000), st.integers(0, 500), st.integers(1, 500), st.sampled_from([-1, 1]),
           st.sampled_from([Eq, Gt, Gte, Lt, Lte]))
    def test_numeric_monotonicity(self, v, near, extra, side, op):
        # two values on the same side of v, a1 strictly closer
        a1, a2 = v + side * near, v + side * (near + extra)
        c = op(v)
        assume(not matches({"a": a1}, clause("a", c)) and not matches({"a": a2}, clause("a", c)))
        assert hd_condition({"a": a1}, ("a",), c) <= hd_condition({"a": a2}, ("a",), c)


class TestFilters:
    def test_worked_example(self):
        assert hd_filter(STORED_ENTITY, parse_filter('{"x": {"$eq": 17}}')) == 25

    def test_and_of_two_clauses(self):
        f = parse_filter('{"$and": [{"x": {"$eq": 17}}, {"y": {"$eq": "c"}}]}')
        assert abs(hd_filter(STORED_ENTITY, f) - (25 / 26 + 0.5)) <= 1e-9

    def test_request_filter_of_motivating_example(self):
        f = parse_filter('{"x": 82, "y": "b", "z": -1.0}')
        assert abs(hd_filter(STORED_ENTITY, f) - (40 / 41 + 2 / 3)) <= 1e-12

    def test_or_and_nor(self):
        a, b = clause("x", Eq(40)), clause("x", Eq(45))
        assert hd_filter(STORED_ENTITY, Or((a, b))) == 2
        # nor: both equalities must fail; x=42 already differs from both
        assert hd_filter(STORED_ENTITY, Nor((a, b))) == 0
        assert hd_filter(STORED_ENTITY, Nor((clause("x", Eq(42)),))) == pytest.approx(nu(K))

    def test_nested_nor_uses_de_morgan(self):
        inner = And((clause("x", Eq(42)), clause("y", Eq("b"))))
        # not(x=42 and y=b) = x!=42 or y!=b, each K away
        assert hd_filter(STORED_ENTITY, Nor((inner,))) == pytest.approx(nu(K))

    def test_matching_filter_is_zero(self):
        assert hd_filter(STORED_ENTITY, parse_filter('{"x": 42, "y": "b", "z": 1.0}')) == 0

    @given(small_documents, filters)
    def test_zero_iff_matches(self, d, f):
        dist = hd_filter(d, f)
        assert dist >= 0 and not math.isnan(dist)
        assert (dist == 0) == matches(d, f)

    @given(small_documents, conditions, st.floats(0.01, 100))
    def test_zero_iff_matches_for_any_k(self, d, c, k):
        f = clause("a", c)
        assert (hd_filter(d, f, DistanceConfig(K=k)) == 0) == matches(d, f)

    @given(small_documents, st.lists(filters, min_size=1, max_size=3))
    def test_and_dominance_and_or_min(self, d, fs):
        parts = [hd_filter(d, f) for f in fs]
        assert (hd_filter(d, And(tuple(fs))) == 0) == all(p == 0 for p in parts)
        assert hd_filter(d, Or(tuple(fs))) == min(parts)


class TestCollection:
    def test_brute_force_min(self):
        assert collection_distance([{"x": 40}, {"x": 100}], parse_filter('{"x":{"$eq":42}}')) == 2

    def test_match_gives_zero(self):
        assert collection_distance([{"x": 1}, {"x": 42}], parse_filter('{"x": 42}')) == 0

    def test_single_document(self):
        assert collection_distance([STORED_ENTITY], parse_filter('{"x":{"$eq":17}}')) == 25

    def test_empty(self):
        with pytest.raises(EmptyCollection):
            collection_distance([], parse_filter('{"x": 1}'))

    @given(st.lists(small_documents, min_size=1, max_size=4), small_documents, filters)
    def test_min_properties(self, docs, extra, f):
        h = collection_distance(docs, f)
        each = [hd_filter(d, f) for d in docs]
        assert h == min(each)
        assert collection_distance(docs + [extra], f) <= h


def test_format_distance():
    assert format_distance(25.0) == "25"
    assert format_distance(0.0) == "0"
    assert format_distance(MAX) == "MAX"
    assert float(format_distance(25 / 26 + 0.5)) == 25 / 26 + 0.5


def test_mean_normalized():
    assert mean_normalized([]) == 1.0
    assert mean_normalized([1.0, 3.0]) == pytest.approx((0.5 + 0.75) / 2)
    assert mean_normalized([MAX]) == 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        DistanceConfig(K=0)
    with pytest.raises(ValueError):
        DistanceConfig(missing_field_penalty=0)
