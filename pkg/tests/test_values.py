import json
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import documents, values
from nosqlfuzz.values import (
    MISSING,
    Int64,
    ObjectId,
    UnsupportedValue,
    dumps_value,
    from_json,
    get_path,
    has_path,
    loads_document,
    loads_value,
    num_widen,
    parse_path,
    render_path,
    to_json,
    type_name,
    values_equal,
)


def test_get_path_top_level(stored_entity):
    assert get_path(stored_entity, "x") == 42


def test_get_path_nested():
    assert get_path({"location": {"city": "Oslo"}}, "location.city") == "Oslo"


def test_get_path_absent():
    assert get_path({"x": 42}, "missing", MISSING) is MISSING
    assert not has_path({"x": 42}, ("missing",))


def test_get_path_does_not_enter_arrays_or_scalars():
    assert get_path({"a": [{"b": 1}]}, "a.b", MISSING) is MISSING
    assert get_path({"a": 5}, "a.b", MISSING) is MISSING


def test_get_path_null_is_present():
    assert get_path({"a": None}, "a", MISSING) is None
    assert has_path({"a": None}, ("a",))


def test_num_widen():
    assert num_widen(42, 17.0) == (42.0, 17.0)
    assert num_widen("a", 1) is None


def test_num_widen_large_long_against_exact_conversion():
    a, b = num_widen(Int64(2**62), 0.0)
    # 2^62 is a power of two, so the conversion must be exact
    assert Decimal(a) == Decimal(2**62)
    assert a == 4611686018427387904.0 and b == 0.0


def test_num_widen_rounds_to_nearest_beyond_53_bits():
    n = 2**60 + 1
    a, _ = num_widen(Int64(n), 0)
    assert Decimal(a) == Decimal(2**60)


@given(values, values)
def test_num_widen_definedness_is_symmetric(a, b):
    assert (num_widen(a, b) is None) == (num_widen(b, a) is None)


@pytest.mark.parametrize("v, name", [
    (None, "null"), (True, "bool"), (3, "int"), (Int64(3), "long"), (1.0, "double"),
    ("b", "string"), ([], "array"), ({}, "object"), (ObjectId("a" * 24), "objectId"),
])
def test_type_name(v, name):
    assert type_name(v) == name


def test_type_name_rejects_foreign_types():
    with pytest.raises(UnsupportedValue):
        type_name(b"bytes")


@pytest.mark.parametrize("bad", ["A" * 24, "a" * 23, "g" * 24, 5])
def test_object_id_validation(bad):
    with pytest.raises(UnsupportedValue):
        ObjectId(bad)


def test_int64_range():
    Int64(2**63 - 1)
    with pytest.raises(OverflowError):
        Int64(2**63)


def test_values_equal_widens_numbers_and_ignores_field_order():
    assert values_equal(1, 1.0)
    assert values_equal(Int64(5), 5)
    assert values_equal({"a": 1, "b": 2}, {"b": 2, "a": 1})
    assert not values_equal(True, 1)
    assert not values_equal([1, 2], [2, 1])
    assert not values_equal("1", 1)


def test_path_round_trip():
    assert parse_path("a.b.c") == ("a", "b", "c")
    assert render_path(("a", "b")) == "a.b"
    for bad in ["", "a..b", ".a", "a."]:
        with pytest.raises(ValueError):
            parse_path(bad)


@given(st.lists(st.text("abc", min_size=1, max_size=3), min_size=1, max_size=4))
def test_parse_render_path_round_trip(segments):
    assert parse_path(render_path(tuple(segments))) == tuple(segments)


def test_interchange_wrappers():
    doc = {"_id": ObjectId("5f4a1b2c3d4e5f6a7b8c9d0e"), "n": Int64(7), "i": 7}
    obj = to_json(doc)
    assert obj == {"_id": {"$oid": "5f4a1b2c3d4e5f6a7b8c9d0e"}, "n": {"$long": "7"}, "i": 7}
    back = from_json(obj)
    assert type(back["n"]) is Int64 and type(back["i"]) is int and type(back["_id"]) is ObjectId


def test_large_json_integer_becomes_long():
    assert type(loads_value("4294967296")) is Int64
    with pytest.raises(UnsupportedValue):
        loads_value(str(2**64))


@pytest.mark.parametrize("text", ['{"a": NaN}', '{"a": Infinity}', '{"$date": 1}', '{"a": {"$regex": "x"}}'])
def test_unsupported_interchange_forms(text):
    with pytest.raises(UnsupportedValue):
        loads_document(text)


def test_documents_must_be_objects():
    with pytest.raises(UnsupportedValue):
        loads_document("[1, 2]")


def test_non_finite_doubles_have_no_json_form():
    with pytest.raises(UnsupportedValue):
        to_json(float("inf"))


@given(documents)
def test_json_round_trip_preserves_fields_in_order(d):
    back = loads_document(dumps_value(d))
    assert list(back) == list(d)
    assert values_equal(back, d)
    assert json.loads(dumps_value(back)) == json.loads(dumps_value(d))
