"""BSON-like dynamic values and documents.

Values are plain Python objects wherever a native type fits:

==========  ===================
kind        Python type
==========  ===================
null        ``None``
bool        ``bool``
int         ``int`` (32-bit range)
long        :class:`Int64`
double      ``float``
string      ``str``
array       ``list``
object      ``dict`` (a document)
objectId    :class:`ObjectId`
==========  ===================

Documents are ``dict`` instances; insertion order is kept for rendering, while
equality (:func:`values_equal`) ignores field order.
"""

from __future__ import annotations

import json
import math
import re
from typing import Any, Optional, Tuple

INT32_MIN = -(2**31)
INT32_MAX = 2**31 - 1
INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

TYPE_NAMES = (
    "null",
    "bool",
    "int",
    "long",
    "double",
    "string",
    "array",
    "object",
    "objectId",
)

_OID_RE = re.compile(r"[0-9a-f]{24}\Z")


class UnsupportedValue(ValueError):
    """A JSON form that does not map to one of the nine supported kinds."""


class Int64(int):
    """A 64-bit signed integer, kept distinct from 32-bit ``int`` values."""

    __slots__ = ()

    def __new__(cls, value: int = 0) -> "Int64":
        value = int(value)
        if not INT64_MIN <= value <= INT64_MAX:
            raise OverflowError(f"{value} does not fit in 64 bits")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"Int64({int(self)})"


class ObjectId(str):
    """A 24-character lowercase hexadecimal object identifier."""

    __slots__ = ()

    def __new__(cls, value: str) -> "ObjectId":
        if not isinstance(value, str) or not _OID_RE.match(value):
            raise UnsupportedValue(f"invalid ObjectId {value!r}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"ObjectId({str.__repr__(self)})"


_KIND = {
    type(None): "null",
    bool: "bool",
    int: "int",
    Int64: "long",
    float: "double",
    str: "string",
    list: "array",
    dict: "object",
    ObjectId: "objectId",
}

NUMERIC_KINDS = frozenset({"int", "long", "double"})


def type_name(v: Any) -> str:
    """Return the canonical type name of a value."""
    try:
        return _KIND[type(v)]
    except KeyError:
        raise UnsupportedValue(f"unsupported value type {type(v).__name__}") from None


def is_numeric(v: Any) -> bool:
    t = type(v)
    return t is int or t is float or t is Int64


def num_widen(a: Any, b: Any) -> Optional[Tuple[float, float]]:
    """Widen two numeric values to doubles, or return None if either is not numeric.

    Int64 values beyond 2**53 round to the nearest double.
    """
    if is_numeric(a) and is_numeric(b):
        return float(a), float(b)
    return None


def values_equal(a: Any, b: Any) -> bool:
    """Semantic equality: numeric kinds compare by value, documents ignore field order."""
    ta, tb = type(a), type(b)
    if (ta is int or ta is float or ta is Int64) and (tb is int or tb is float or tb is Int64):
        return float(a) == float(b)
    if ta is not tb:
        return False
    if ta is list:
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if ta is dict:
        if a.keys() != b.keys():
            return False
        return all(values_equal(v, b[k]) for k, v in a.items())
    return a == b


# -- field paths --------------------------------------------------------------


def parse_path(text: str) -> Tuple[str, ...]:
    """Split a dotted path into its segments."""
    if not isinstance(text, str) or not text:
        raise ValueError(f"invalid field path {text!r}")
    segments = tuple(text.split("."))
    if any(not s for s in segments):
        raise ValueError(f"invalid field path {text!r}")
    return segments


def render_path(path: Tuple[str, ...]) -> str:
    return ".".join(path)


_ABSENT = object()


def get_path(d: dict, path: Tuple[str, ...] | str, default: Any = None) -> Any:
    """Return the value at ``path``, descending only through nested documents.

    Returns ``default`` when any segment is missing or a non-terminal value is
    not a document. Pass a sentinel as ``default`` to tell absence from null.
    """
    if isinstance(path, str):
        path = parse_path(path)
    cur: Any = d
    for seg in path:
        if type(cur) is not dict:
            return default
        cur = cur.get(seg, _ABSENT)
        if cur is _ABSENT:
            return default
    return cur


def has_path(d: dict, path: Tuple[str, ...]) -> bool:
    return get_path(d, path, _ABSENT) is not _ABSENT


MISSING = _ABSENT


# -- JSON interchange ---------------------------------------------------------


def to_json(v: Any) -> Any:
    """Convert a value into its JSON-compatible interchange form."""
    t = type(v)
    if t is dict:
        return {k: to_json(x) for k, x in v.items()}
    if t is list:
        return [to_json(x) for x in v]
    if t is Int64:
        return {"$long": str(int(v))}
    if t is ObjectId:
        return {"$oid": str(v)}
    if t is float:
        if not math.isfinite(v):
            raise UnsupportedValue(f"non-finite double {v!r} has no JSON form")
        return v
    if t is int:
        if not INT32_MIN <= v <= INT32_MAX:
            return {"$long": str(v)}
        return v
    if t is str or t is bool or v is None:
        return v
    raise UnsupportedValue(f"unsupported value type {t.__name__}")


def from_json(obj: Any) -> Any:
    """Convert a parsed JSON object into a value, decoding ``$oid``/``$long`` wrappers."""
    t = type(obj)
    if t is dict:
        if len(obj) == 1:
            (key, payload), = obj.items()
            if key == "$oid":
                return ObjectId(payload)
            if key == "$long":
                if not isinstance(payload, str):
                    raise UnsupportedValue("$long payload must be a decimal string")
                try:
                    return Int64(int(payload))
                except (ValueError, OverflowError) as exc:
                    raise UnsupportedValue(f"invalid $long {payload!r}") from exc
        out = {}
        for k, x in obj.items():
            if k.startswith("$"):
                raise UnsupportedValue(f"unsupported extended JSON key {k!r}")
            out[k] = from_json(x)
        return out
    if t is list:
        return [from_json(x) for x in obj]
    if t is int:
        if INT32_MIN <= obj <= INT32_MAX:
            return obj
        try:
            return Int64(obj)
        except OverflowError as exc:
            raise UnsupportedValue(f"integer {obj} exceeds 64 bits") from exc
    # non-finite doubles never come out of json.loads (see loads_value); they
    # only reach here from arithmetic in scenario expressions
    if t is float or t is str or t is bool or obj is None:
        return obj
    if t is Int64 or t is ObjectId:
        return obj
    raise UnsupportedValue(f"unsupported JSON type {t.__name__}")


def _reject_constant(name: str) -> Any:
    raise UnsupportedValue(f"non-finite number {name} is not valid JSON")


def loads_value(text: str) -> Any:
    return from_json(json.loads(text, parse_constant=_reject_constant))


def loads_document(text: str) -> dict:
    v = loads_value(text)
    if type(v) is not dict:
        raise UnsupportedValue("a document must be a JSON object")
    return v


def dumps_value(v: Any, **kwargs: Any) -> str:
    kwargs.setdefault("separators", (",", ":"))
    return json.dumps(to_json(v), **kwargs)
