"""Randomized cross-check of the distance engine against the matcher.

On every generated (document, filter) pair the distance must be zero exactly
when the matcher accepts the document.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Callable, List, Optional

from nosqlfuzz.distance import DEFAULT_CONFIG, DistanceConfig, hd_filter
from nosqlfuzz.filters import (
    All,
    And,
    Condition,
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
    filter_to_obj,
    matches,
)
from nosqlfuzz.values import TYPE_NAMES, Int64, ObjectId, to_json

FIELDS = ("a", "b", "c")
_OIDS = (ObjectId("0" * 24), ObjectId("0" * 23 + "1"))


def random_scalar(rng: random.Random) -> Any:
    k = rng.randrange(9)
    if k == 0:
        return None
    if k == 1:
        return rng.random() < 0.5
    if k in (2, 3):
        return rng.randint(-3, 3)
    if k == 4:
        return Int64(rng.randint(-3, 3))
    if k == 5:
        return rng.choice((-1.5, 0.0, -0.0, 1.0, 2.0, 2.5, 3.0))
    if k in (6, 7):
        return rng.choice(("", "a", "b", "c", "ab", "ba", "abc"))
    return rng.choice(_OIDS)


def random_value(rng: random.Random, depth: int = 0) -> Any:
    k = rng.random()
    if depth < 2 and k < 0.12:
        return [random_value(rng, depth + 1) for _ in range(rng.randint(0, 3))]
    if depth < 2 and k < 0.2:
        return random_document(rng, depth + 1)
    return random_scalar(rng)


def random_document(rng: random.Random, depth: int = 0) -> dict:
    names = [n for n in FIELDS if rng.random() < 0.6]
    return {n: random_value(rng, depth) for n in names}


def _values(rng: random.Random, lo: int, hi: int) -> tuple:
    return tuple(random_value(rng, 1) for _ in range(rng.randint(lo, hi)))


def random_condition(rng: random.Random, allow_not: bool = True) -> Condition:
    k = rng.randrange(15 if allow_not else 14)
    v = random_value(rng, 1)
    if k == 0:
        return Eq(v)
    if k == 1:
        return Ne(v)
    if k == 2:
        return Gt(v)
    if k == 3:
        return Gte(v)
    if k == 4:
        return Lt(v)
    if k == 5:
        return Lte(v)
    if k == 6:
        return In(_values(rng, 0, 3))
    if k == 7:
        return Nin(_values(rng, 0, 3))
    if k == 8:
        return Mod(rng.choice((-3, -2, 2, 3)), rng.randint(-2, 2))
    if k == 9:
        return Exists(rng.random() < 0.5)
    if k == 10:
        return Size(rng.randint(0, 3))
    if k == 11:
        return TypeIs(rng.choice(TYPE_NAMES))
    if k in (12, 13):
        return All(_values(rng, 0, 2))
    return Not(random_condition(rng, allow_not=False))


def random_path(rng: random.Random) -> tuple:
    if rng.random() < 0.15:
        return (rng.choice(FIELDS), rng.choice(FIELDS))
    return (rng.choice(FIELDS),)


def random_filter(rng: random.Random, depth: int = 0) -> Filter:
    if depth < 2 and rng.random() < 0.35:
        kind = rng.choice((And, Or, Nor))
        return kind(tuple(random_filter(rng, depth + 1) for _ in range(rng.randint(1, 3))))
    return FieldClause(random_path(rng), random_condition(rng))


@dataclass(frozen=True)
class Counterexample:
    trial: int
    document: dict
    filter: Filter
    distance: float
    matched: bool

    def to_json(self) -> dict:
        return {
            "trial": self.trial,
            "document": to_json(self.document),
            "filter": filter_to_obj(self.filter),
            "distance": self.distance if math.isfinite(self.distance) else str(self.distance),
            "matches": self.matched,
        }


DistanceFn = Callable[[dict, Filter, DistanceConfig], float]


def run_oracle(
    trials: int,
    seed: int,
    cfg: DistanceConfig = DEFAULT_CONFIG,
    distance: DistanceFn = hd_filter,
    limit: Optional[int] = None,
) -> List[Counterexample]:
    """Check ``trials`` random pairs; return the violations found (at most ``limit``).

    ``distance`` is injectable so a deliberately broken engine can show the
    harness catches faults.
    """
    rng = random.Random(seed)
    out: List[Counterexample] = []
    for i in range(trials):
        d = random_document(rng)
        f = random_filter(rng)
        dist = distance(d, f, cfg)
        matched = matches(d, f)
        if math.isnan(dist) or dist < 0 or (dist == 0.0) != matched:
            out.append(Counterexample(i, d, f, dist, matched))
            if limit is not None and len(out) >= limit:
                break
    return out
