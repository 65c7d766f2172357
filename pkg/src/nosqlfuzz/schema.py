"""Expected document shapes per collection and synthesis of documents to insert."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Set, Tuple

from nosqlfuzz.filters import (
    All,
    And,
    Eq,
    Filter,
    Gt,
    Gte,
    In,
    Lt,
    Lte,
    Mod,
    Ne,
    Nor,
    Or,
    Size,
    TypeIs,
)
from nosqlfuzz.values import TYPE_NAMES, Int64, ObjectId, type_name

CollectionKey = Tuple[str, str]


class NoSchema(LookupError):
    pass


class SchemaSource(enum.Enum):
    DECLARED = "Declared"
    OBSERVED_DOCS = "ObservedDocs"
    OBSERVED_FILTER = "ObservedFilter"


@dataclass(frozen=True)
class InferredSchema:
    key: CollectionKey
    fields: Dict[str, str]
    source: SchemaSource

    def __post_init__(self) -> None:
        for name, tname in self.fields.items():
            if tname not in TYPE_NAMES:
                raise ValueError(f"field {name!r}: unknown type name {tname!r}")


@dataclass(frozen=True)
class SynthesisConfig:
    conform_probability: float = 0.9
    int_range: Tuple[int, int] = (-1000, 1000)
    double_range: Tuple[float, float] = (-1000.0, 1000.0)
    alphabet: str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    max_string_length: int = 8
    max_array_length: int = 4

    def __post_init__(self) -> None:
        if not 0.0 <= self.conform_probability <= 1.0:
            raise ValueError("conform_probability must lie in [0, 1]")


class _Observation:
    __slots__ = ("fields", "conflicts")

    def __init__(self) -> None:
        self.fields: Dict[str, str] = {}
        self.conflicts: Set[str] = set()

    def add(self, name: str, tname: str) -> None:
        if name in self.conflicts:
            return
        seen = self.fields.get(name)
        if seen is None:
            self.fields[name] = tname
        elif seen != tname:
            del self.fields[name]
            self.conflicts.add(name)


class SchemaRegistry:
    """Schemas per collection; declared schemas win over anything observed."""

    def __init__(self) -> None:
        self._declared: Dict[CollectionKey, InferredSchema] = {}
        self._docs: Dict[CollectionKey, _Observation] = {}
        self._filters: Dict[CollectionKey, _Observation] = {}

    def declare_schema(self, key: CollectionKey, fields: Dict[str, str]) -> None:
        self._declared[key] = InferredSchema(key, dict(fields), SchemaSource.DECLARED)

    def observe_documents(self, key: CollectionKey, docs: Iterable[dict]) -> None:
        if key in self._declared:
            return
        obs = None
        for d in docs:
            if obs is None:
                obs = self._docs.setdefault(key, _Observation())
            for name, v in d.items():
                obs.add(name, type_name(v))

    def observe_filter(self, key: CollectionKey, f: Filter) -> None:
        if key in self._declared:
            return
        found = list(_filter_fields(f))
        if found:
            obs = self._filters.setdefault(key, _Observation())
            for name, tname in found:
                obs.add(name, tname)

    def get(self, key: CollectionKey) -> Optional[InferredSchema]:
        if key in self._declared:
            return self._declared[key]
        for obs, source in ((self._docs.get(key), SchemaSource.OBSERVED_DOCS),
                            (self._filters.get(key), SchemaSource.OBSERVED_FILTER)):
            if obs is not None and obs.fields:
                return InferredSchema(key, dict(obs.fields), source)
        return None

    def declared(self, key: CollectionKey) -> Optional[InferredSchema]:
        return self._declared.get(key)


def _filter_fields(f: Filter):
    t = type(f)
    if t in (And, Or, Nor):
        for c in f.clauses:
            yield from _filter_fields(c)
        return
    if len(f.path) != 1:
        return
    c, name = f.cond, f.path[0]
    ct = type(c)
    if ct in (Eq, Ne, Gt, Gte, Lt, Lte):
        yield name, type_name(c.value)
    elif ct is In and c.values:
        yield name, type_name(c.values[0])
    elif ct is Mod:
        yield name, "int"
    elif ct in (Size, All):
        yield name, "array"
    elif ct is TypeIs:
        yield name, c.name


def conforms(d: dict, schema: InferredSchema) -> bool:
    """True when ``d`` has every schema field with its type and no unknown fields."""
    for name, tname in schema.fields.items():
        if name not in d or type_name(d[name]) != tname:
            return False
    return all(name in schema.fields or name == "_id" for name in d)


def random_value(tname: str, cfg: SynthesisConfig, rng: random.Random):
    if tname == "int":
        return rng.randint(*cfg.int_range)
    if tname == "long":
        return Int64(rng.randint(*cfg.int_range))
    if tname == "double":
        return round(rng.uniform(*cfg.double_range), rng.randint(0, 2))
    if tname == "string":
        n = rng.randint(0, cfg.max_string_length)
        return "".join(rng.choice(cfg.alphabet) for _ in range(n))
    if tname == "bool":
        return rng.random() < 0.5
    if tname == "null":
        return None
    if tname == "objectId":
        return ObjectId(f"{rng.getrandbits(96):024x}")
    if tname == "array":
        return [rng.randint(*cfg.int_range) for _ in range(rng.randint(0, cfg.max_array_length))]
    if tname == "object":
        return {}
    raise ValueError(f"unknown type name {tname!r}")


def synthesize_document(
    schema: Optional[InferredSchema], cfg: SynthesisConfig, rng: random.Random
) -> dict:
    """Draw a document for ``schema``.

    Each field conforms with probability ``cfg.conform_probability``; otherwise
    it gets a wrong type, is dropped, or is accompanied by an unknown field.
    """
    if schema is None:
        raise NoSchema("no schema known for this collection")
    doc: dict = {}
    extra = 0
    p = cfg.conform_probability
    for name, tname in schema.fields.items():
        if name == "_id":
            continue
        # draw always so p=1 and p<1 consume the rng identically
        if rng.random() < p:
            doc[name] = random_value(tname, cfg, rng)
            continue
        how = rng.randrange(3)
        if how == 0:
            wrong = rng.choice([t for t in TYPE_NAMES if t != tname])
            doc[name] = random_value(wrong, cfg, rng)
        elif how == 1:
            pass
        else:
            doc[name] = random_value(tname, cfg, rng)
            extra += 1
            doc[_unknown_name(schema, extra)] = random_value("int", cfg, rng)
    if not [n for n in schema.fields if n != "_id"] and rng.random() >= p:
        doc[_unknown_name(schema, 1)] = random_value("int", cfg, rng)
    return doc


def _unknown_name(schema: InferredSchema, n: int) -> str:
    name = f"extra{n}"
    while name in schema.fields:
        name += "_"
    return name
