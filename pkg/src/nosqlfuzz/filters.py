"""MongoDB-style query filters: AST, parsing, rendering, negation and matching.

:func:`matches` is the reference semantics of this package. The distance
engine in :mod:`nosqlfuzz.distance` is checked against it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Tuple, Union

from nosqlfuzz.values import (
    MISSING,
    TYPE_NAMES,
    Int64,
    UnsupportedValue,
    from_json,
    get_path,
    parse_path,
    render_path,
    to_json,
    type_name,
    values_equal,
)


class FilterError(ValueError):
    """Base class for filter parse errors."""


class UnknownOperator(FilterError):
    pass


class MalformedFilter(FilterError):
    pass


class EmptyClauseList(FilterError):
    pass


# -- conditions ---------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Eq:
    value: Any


@dataclass(frozen=True, slots=True)
class Ne:
    value: Any


@dataclass(frozen=True, slots=True)
class Gt:
    value: Any


@dataclass(frozen=True, slots=True)
class Gte:
    value: Any


@dataclass(frozen=True, slots=True)
class Lt:
    value: Any


@dataclass(frozen=True, slots=True)
class Lte:
    value: Any


@dataclass(frozen=True, slots=True)
class In:
    values: Tuple[Any, ...]


@dataclass(frozen=True, slots=True)
class Nin:
    values: Tuple[Any, ...]


@dataclass(frozen=True, slots=True)
class Mod:
    div: int
    rem: int

    def __post_init__(self) -> None:
        if self.div == 0:
            raise MalformedFilter("$mod divisor must be nonzero")


@dataclass(frozen=True, slots=True)
class Exists:
    flag: bool


@dataclass(frozen=True, slots=True)
class Size:
    n: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise MalformedFilter("$size must be non-negative")


@dataclass(frozen=True, slots=True)
class TypeIs:
    name: str

    def __post_init__(self) -> None:
        if self.name not in TYPE_NAMES:
            raise MalformedFilter(f"unknown type name {self.name!r}")


@dataclass(frozen=True, slots=True)
class All:
    values: Tuple[Any, ...]


@dataclass(frozen=True, slots=True)
class Not:
    inner: "Condition"


Condition = Union[Eq, Ne, Gt, Gte, Lt, Lte, In, Nin, Mod, Exists, Size, TypeIs, All, Not]

# -- filters ------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class FieldClause:
    path: Tuple[str, ...]
    cond: Condition


@dataclass(frozen=True, slots=True)
class And:
    clauses: Tuple["Filter", ...]

    def __post_init__(self) -> None:
        if not self.clauses:
            raise EmptyClauseList("$and needs at least one clause")


@dataclass(frozen=True, slots=True)
class Or:
    clauses: Tuple["Filter", ...]

    def __post_init__(self) -> None:
        if not self.clauses:
            raise EmptyClauseList("$or needs at least one clause")


@dataclass(frozen=True, slots=True)
class Nor:
    clauses: Tuple["Filter", ...]

    def __post_init__(self) -> None:
        if not self.clauses:
            raise EmptyClauseList("$nor needs at least one clause")


Filter = Union[FieldClause, And, Or, Nor]

# -- parsing ------------------------------------------------------------------

_LOGICAL = {"$and": And, "$or": Or, "$nor": Nor}
_SCALAR_OPS = {"$eq": Eq, "$ne": Ne, "$gt": Gt, "$gte": Gte, "$lt": Lt, "$lte": Lte}
_LIST_OPS = {"$in": In, "$nin": Nin, "$all": All}
_VALUE_WRAPPERS = ("$oid", "$long")


def _is_wrapper(obj: dict) -> bool:
    return len(obj) == 1 and next(iter(obj)) in _VALUE_WRAPPERS


def _value(obj: Any) -> Any:
    try:
        return from_json(obj)
    except UnsupportedValue as exc:
        raise MalformedFilter(str(exc)) from exc


def _integer(obj: Any, what: str) -> int:
    v = _value(obj)
    if type(v) is int or type(v) is Int64:
        return int(v)
    if type(v) is float and v.is_integer():
        return int(v)
    raise MalformedFilter(f"{what} must be an integer, got {obj!r}")


def _parse_operator(op: str, arg: Any) -> Condition:
    if op in _SCALAR_OPS:
        return _SCALAR_OPS[op](_value(arg))
    if op in _LIST_OPS:
        if not isinstance(arg, list):
            raise MalformedFilter(f"{op} needs an array")
        return _LIST_OPS[op](tuple(_value(x) for x in arg))
    if op == "$mod":
        if not isinstance(arg, list) or len(arg) != 2:
            raise MalformedFilter("$mod needs [divisor, remainder]")
        return Mod(_integer(arg[0], "$mod divisor"), _integer(arg[1], "$mod remainder"))
    if op == "$exists":
        if not isinstance(arg, bool):
            raise MalformedFilter("$exists needs a boolean")
        return Exists(arg)
    if op == "$size":
        return Size(_integer(arg, "$size"))
    if op == "$type":
        if not isinstance(arg, str):
            raise MalformedFilter("$type needs a type name")
        return TypeIs(arg)
    if op == "$not":
        if not isinstance(arg, dict) or not arg or _is_wrapper(arg):
            raise MalformedFilter("$not needs an operator object")
        conds = _parse_operator_object(arg)
        if len(conds) != 1:
            raise MalformedFilter("$not takes exactly one operator")
        return Not(conds[0])
    raise UnknownOperator(f"unsupported operator {op}")


def _parse_operator_object(obj: dict) -> list:
    keys = list(obj)
    if not all(k.startswith("$") for k in keys):
        raise MalformedFilter(f"cannot mix operators and fields in {obj!r}")
    return [_parse_operator(k, v) for k, v in obj.items()]


def _parse_field(key: str, arg: Any) -> Filter:
    try:
        path = parse_path(key)
    except ValueError as exc:
        raise MalformedFilter(str(exc)) from exc
    if isinstance(arg, dict) and arg and not _is_wrapper(arg) and any(k.startswith("$") for k in arg):
        conds = _parse_operator_object(arg)
        clauses = tuple(FieldClause(path, c) for c in conds)
        return clauses[0] if len(clauses) == 1 else And(clauses)
    return FieldClause(path, Eq(_value(arg)))


def parse_filter_obj(obj: Any) -> Filter:
    """Build a filter from an already-decoded JSON object."""
    if not isinstance(obj, dict):
        raise MalformedFilter("a filter must be a JSON object")
    if not obj:
        raise EmptyClauseList("empty filter")
    clauses = []
    for key, arg in obj.items():
        if key in _LOGICAL:
            if not isinstance(arg, list):
                raise MalformedFilter(f"{key} needs an array of filters")
            if not arg:
                raise EmptyClauseList(f"{key} needs at least one clause")
            clauses.append(_LOGICAL[key](tuple(parse_filter_obj(x) for x in arg)))
        elif key.startswith("$"):
            raise UnknownOperator(f"unsupported operator {key}")
        else:
            clauses.append(_parse_field(key, arg))
    return clauses[0] if len(clauses) == 1 else And(tuple(clauses))


def parse_filter(text: str) -> Filter:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedFilter(f"invalid JSON: {exc}") from exc
    return parse_filter_obj(obj)


# -- rendering ----------------------------------------------------------------

_OP_NAME = {Eq: "$eq", Ne: "$ne", Gt: "$gt", Gte: "$gte", Lt: "$lt", Lte: "$lte",
            In: "$in", Nin: "$nin", All: "$all"}


def _render_cond(c: Condition) -> dict:
    t = type(c)
    if t in (Eq, Ne, Gt, Gte, Lt, Lte):
        return {_OP_NAME[t]: to_json(c.value)}
    if t in (In, Nin, All):
        return {_OP_NAME[t]: [to_json(v) for v in c.values]}
    if t is Mod:
        return {"$mod": [c.div, c.rem]}
    if t is Exists:
        return {"$exists": c.flag}
    if t is Size:
        return {"$size": c.n}
    if t is TypeIs:
        return {"$type": c.name}
    if t is Not:
        return {"$not": _render_cond(c.inner)}
    raise TypeError(f"not a condition: {c!r}")


def filter_to_obj(f: Filter) -> dict:
    t = type(f)
    if t is FieldClause:
        return {render_path(f.path): _render_cond(f.cond)}
    name = {And: "$and", Or: "$or", Nor: "$nor"}[t]
    return {name: [filter_to_obj(c) for c in f.clauses]}


def render_filter(f: Filter) -> str:
    return json.dumps(filter_to_obj(f), separators=(",", ":"))


# -- matching -----------------------------------------------------------------


def _compare(a: Any, b: Any) -> int | None:
    """Three-way comparison for numeric or text pairs; None when incomparable."""
    ta, tb = type(a), type(b)
    if (ta is int or ta is float or ta is Int64) and (tb is int or tb is float or tb is Int64):
        x, y = float(a), float(b)
    elif ta is str and tb is str:
        x, y = a, b
    else:
        return None
    if x < y:
        return -1
    if x > y:
        return 1
    if x == y:
        return 0
    return None  # NaN


def truncated_mod(value: Any, div: int) -> int | None:
    """Remainder with the sign of the dividend; None for non-numeric values."""
    t = type(value)
    if t is float:
        if value != value or value in (float("inf"), float("-inf")):
            return None
        value = int(value)
    elif t is not int and t is not Int64:
        return None
    r = abs(int(value)) % abs(div)
    return -r if value < 0 else r


def condition_matches(value: Any, c: Condition) -> bool:
    """Evaluate a condition against a field value (``MISSING`` when absent)."""
    t = type(c)
    if value is MISSING:
        if t is Ne:
            return True
        if t is Exists:
            return not c.flag
        if t is Not:
            return not condition_matches(value, c.inner)
        return False
    if t is Eq:
        return values_equal(value, c.value)
    if t is Ne:
        return not values_equal(value, c.value)
    if t is Gt:
        r = _compare(value, c.value)
        return r is not None and r > 0
    if t is Gte:
        r = _compare(value, c.value)
        return r is not None and r >= 0
    if t is Lt:
        r = _compare(value, c.value)
        return r is not None and r < 0
    if t is Lte:
        r = _compare(value, c.value)
        return r is not None and r <= 0
    if t is In:
        return any(values_equal(value, v) for v in c.values)
    if t is Nin:
        return not any(values_equal(value, v) for v in c.values)
    if t is Mod:
        r = truncated_mod(value, c.div)
        return r is not None and r == c.rem
    if t is Exists:
        return c.flag
    if t is Size:
        return type(value) is list and len(value) == c.n
    if t is TypeIs:
        return type_name(value) == c.name
    if t is All:
        if type(value) is not list:
            return False
        return all(any(values_equal(w, v) for w in value) for v in c.values)
    if t is Not:
        return not condition_matches(value, c.inner)
    raise TypeError(f"not a condition: {c!r}")


def matches(d: dict, f: Filter) -> bool:
    """Return True when document ``d`` satisfies filter ``f``."""
    t = type(f)
    if t is FieldClause:
        return condition_matches(get_path(d, f.path, MISSING), f.cond)
    if t is And:
        return all(matches(d, c) for c in f.clauses)
    if t is Or:
        return any(matches(d, c) for c in f.clauses)
    if t is Nor:
        return not any(matches(d, c) for c in f.clauses)
    raise TypeError(f"not a filter: {f!r}")


# -- negation -----------------------------------------------------------------

_PAIRS = {Eq: Ne, Ne: Eq, Gt: Lte, Lte: Gt, Lt: Gte, Gte: Lt}


def negate_condition(c: Condition) -> Condition:
    """Return the De Morgan dual of a condition.

    Conditions without a dual operator (``$mod``, ``$size``, ``$type``, ``$all``)
    come back wrapped in :class:`Not` and are scored categorically.
    """
    t = type(c)
    if t in _PAIRS:
        return _PAIRS[t](c.value)
    if t is In:
        return Nin(c.values)
    if t is Nin:
        return In(c.values)
    if t is Exists:
        return Exists(not c.flag)
    if t is Not:
        return c.inner
    return Not(c)


def negate_filter(f: Filter) -> Filter:
    """Logical negation of a filter, pushed down with De Morgan's laws."""
    t = type(f)
    if t is FieldClause:
        if type(f.cond) is Not:
            return FieldClause(f.path, f.cond.inner)
        return FieldClause(f.path, Not(f.cond))
    if t is And:
        return Or(tuple(negate_filter(c) for c in f.clauses))
    if t is Or:
        return And(tuple(negate_filter(c) for c in f.clauses))
    if t is Nor:
        return Or(f.clauses)
    raise TypeError(f"not a filter: {f!r}")
