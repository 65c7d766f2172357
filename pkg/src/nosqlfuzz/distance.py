"""Branch distances and heuristic scores for query filters.

A distance is a non-negative float; ``MAX`` (positive infinity) marks cases
with no usable gradient. A distance of 0 means the predicate holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence, Tuple

from rapidfuzz.distance import Levenshtein

from nosqlfuzz.filters import (
    All,
    And,
    Eq,
    Exists,
    FieldClause,
    Filter,
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
    negate_condition,
    negate_filter,
    truncated_mod,
)
from nosqlfuzz.values import MISSING, Int64, get_path, type_name, values_equal

MAX = math.inf

GT, GTE, LT, LTE, EQ, NE = ">", ">=", "<", "<=", "==", "!="
RELATIONAL_OPS = (GT, GTE, LT, LTE, EQ, NE)


class EmptyCollection(ValueError):
    pass


@dataclass(frozen=True)
class DistanceConfig:
    K: float = 1.0
    missing_field_penalty: float = MAX
    char_as_codepoint: bool = True

    def __post_init__(self) -> None:
        if not self.K > 0:
            raise ValueError("K must be positive")
        # a zero penalty would make an absent field look satisfied
        if not self.missing_field_penalty > 0:
            raise ValueError("missing_field_penalty must be positive")


DEFAULT_CONFIG = DistanceConfig()


def nu(x: float) -> float:
    """Map a distance into [0, 1]: x / (x + 1), with MAX mapped to 1."""
    if x == MAX:
        return 1.0
    return x / (x + 1.0)


def levenshtein(a: str, b: str) -> int:
    return Levenshtein.distance(a, b)


def _clean(d: float) -> float:
    # NaN and overflow carry no gradient
    if d != d or d == MAX:
        return MAX
    return d


def _text_delta(a: str, b: str) -> int:
    """Signed gap standing in for ``a - b`` on strings, consistent with codepoint order."""
    for x, y in zip(a, b):
        if x != y:
            return ord(x) - ord(y)
    return len(a) - len(b)


def _ordering(op: str, delta: float, K: float) -> float:
    # delta stands for (a - b)
    if op == GT:
        return 0.0 if delta > 0 else -delta + K
    if op == GTE:
        return 0.0 if delta >= 0 else -delta + K
    if op == LT:
        return 0.0 if delta < 0 else delta + K
    if op == LTE:
        return 0.0 if delta <= 0 else delta
    raise ValueError(f"not an ordering operator: {op!r}")


def _is_num(v: Any) -> bool:
    t = type(v)
    return t is int or t is float or t is Int64


def rho(op: str, a: Any, b: Any, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Branch distance for the relational predicate ``a op b``."""
    K = cfg.K
    if op == NE:
        return 0.0 if not values_equal(a, b) else K
    num = _is_num(a) and _is_num(b)
    if op == EQ:
        if num:
            x, y = float(a), float(b)
            if x == y:
                return 0.0
            return _clean(abs(x - y))
        ta, tb = type(a), type(b)
        if ta is not tb:
            return MAX
        if ta is str:
            if cfg.char_as_codepoint and len(a) == 1 and len(b) == 1:
                return float(abs(ord(a) - ord(b)))
            return float(Levenshtein.distance(a, b))
        return 0.0 if values_equal(a, b) else K
    if num:
        x, y = float(a), float(b)
        if x != x or y != y:
            return MAX
        if op == GT:
            return 0.0 if x > y else _clean((y - x) + K)
        if op == GTE:
            return 0.0 if x >= y else _clean((y - x) + K)
        if op == LT:
            return 0.0 if x < y else _clean((x - y) + K)
        if op == LTE:
            return 0.0 if x <= y else _clean(x - y)
        raise ValueError(f"unknown relational operator {op!r}")
    if type(a) is str and type(b) is str:
        return float(_ordering(op, _text_delta(a, b), K))
    if op not in RELATIONAL_OPS:
        raise ValueError(f"unknown relational operator {op!r}")
    return MAX


def _exists_distance(d: dict, path: Tuple[str, ...], cfg: DistanceConfig) -> float:
    parent = d if len(path) == 1 else get_path(d, path[:-1], MISSING)
    if type(parent) is not dict or not parent:
        return cfg.missing_field_penalty
    name = path[-1]
    return float(min(Levenshtein.distance(name, f) for f in parent))


def hd_condition(d: dict, path: Tuple[str, ...], c: Any, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Heuristic distance of field ``path`` of ``d`` to satisfying condition ``c``."""
    t = type(c)
    value = get_path(d, path, MISSING)
    if t is Not:
        if hd_condition(d, path, c.inner, cfg) > 0:
            return 0.0
        neg = negate_condition(c.inner)
        if type(neg) is Not:
            return cfg.K
        return hd_condition(d, path, neg, cfg)
    if value is MISSING:
        if t is Ne:
            return 0.0
        if t is Exists:
            return 0.0 if not c.flag else _exists_distance(d, path, cfg)
        return cfg.missing_field_penalty
    if t is Eq:
        return rho(EQ, value, c.value, cfg)
    if t is Ne:
        return 0.0 if not values_equal(value, c.value) else cfg.K
    if t is Gt:
        return rho(GT, value, c.value, cfg)
    if t is Gte:
        return rho(GTE, value, c.value, cfg)
    if t is Lt:
        return rho(LT, value, c.value, cfg)
    if t is Lte:
        return rho(LTE, value, c.value, cfg)
    if t is In:
        return min((rho(EQ, value, v, cfg) for v in c.values), default=MAX)
    if t is Nin:
        return cfg.K if any(values_equal(value, v) for v in c.values) else 0.0
    if t is Mod:
        r = truncated_mod(value, c.div)
        if r is None:
            return MAX
        return float(abs(r - c.rem))
    if t is Exists:
        return 0.0 if c.flag else cfg.K
    if t is Size:
        if type(value) is not list:
            return MAX
        return float(abs(len(value) - c.n))
    if t is TypeIs:
        return 0.0 if type_name(value) == c.name else cfg.K
    if t is All:
        if type(value) is not list:
            return MAX
        total = 0.0
        for v in c.values:
            total += min((nu(rho(EQ, w, v, cfg)) for w in value), default=1.0)
        return total
    raise TypeError(f"not a condition: {c!r}")


def hd_filter(d: dict, f: Filter, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Heuristic distance of document ``d`` to satisfying filter ``f``."""
    t = type(f)
    if t is FieldClause:
        return hd_condition(d, f.path, f.cond, cfg)
    if t is And:
        return sum(nu(hd_filter(d, c, cfg)) for c in f.clauses)
    if t is Or:
        return min(hd_filter(d, c, cfg) for c in f.clauses)
    if t is Nor:
        return sum(nu(hd_filter(d, negate_filter(c), cfg)) for c in f.clauses)
    raise TypeError(f"not a filter: {f!r}")


def collection_distance(docs: Sequence[dict], f: Filter, cfg: DistanceConfig = DEFAULT_CONFIG) -> float:
    """Distance of the closest document in ``docs`` to satisfying ``f``."""
    if not docs:
        raise EmptyCollection("collection distance is undefined for an empty collection")
    best = MAX
    for d in docs:
        h = hd_filter(d, f, cfg)
        if h < best:
            best = h
            if h == 0.0:
                break
    return best


def format_distance(x: float) -> str:
    if x == MAX:
        return "MAX"
    if x == int(x) and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def mean_normalized(distances: Iterable[float]) -> float:
    """Average of ν-mapped distances; 1.0 for an empty collection of distances."""
    vals = [nu(x) for x in distances]
    return sum(vals) / len(vals) if vals else 1.0
