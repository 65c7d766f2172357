"""Random sampling and mutation of test cases."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

from nosqlfuzz.schema import (
    InferredSchema,
    SchemaRegistry,
    SynthesisConfig,
    random_value,
    synthesize_document,
)
from nosqlfuzz.sut.scenario import Endpoint, Scenario
from nosqlfuzz.sut.testcase import EndpointCall, MongoInsertion, TestCase
from nosqlfuzz.values import (
    INT32_MAX,
    INT32_MIN,
    INT64_MAX,
    INT64_MIN,
    TYPE_NAMES,
    Int64,
    ObjectId,
    type_name,
)


@dataclass(frozen=True)
class MutationConfig:
    """Sampling ranges and step sizes per value kind."""

    int_range: Tuple[int, int] = (-1000, 1000)
    double_range: Tuple[float, float] = (-1000.0, 1000.0)
    char_range: Tuple[int, int] = (32, 126)
    string_alphabet: str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    max_string_length: int = 8
    # integers move by +-2^e with e drawn from [0, int_max_exponent]
    int_max_exponent: int = 12
    # doubles move by a gaussian scaled by 10^e, then round to at most
    # double_max_decimals places; e ranges from -decimals to double_max_exponent
    double_max_exponent: int = 3
    double_max_decimals: int = 2
    # chance of moving a double by a few units in the last place instead, which
    # closes rounding residuals such as 161.4 / 3.0 != 53.8
    ulp_step_probability: float = 0.1
    max_ulp_steps: int = 4
    char_max_exponent: int = 4
    resample_probability: float = 0.1
    max_calls: int = 4
    max_insertions: int = 3
    add_call_probability: float = 0.1
    remove_call_probability: float = 0.1
    remove_insertion_probability: float = 0.05
    # distances are scored against the final store, so a write placed after the
    # read it feeds still shows a gradient; swapping neighbours repairs the order
    swap_calls_probability: float = 0.1
    shape_mutation_probability: float = 0.1

    def __post_init__(self) -> None:
        if self.max_calls < 1:
            raise ValueError("max_calls must be at least 1")
        if self.max_insertions < 0:
            raise ValueError("max_insertions must be non-negative")
        for name in ("ulp_step_probability", "resample_probability", "add_call_probability",
                     "remove_call_probability", "remove_insertion_probability",
                     "swap_calls_probability", "shape_mutation_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("int_range", "double_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} must be ordered low to high")
        structural = (self.add_call_probability + self.remove_call_probability
                      + self.remove_insertion_probability + self.swap_calls_probability)
        if structural > 1.0:
            raise ValueError("structural mutation probabilities must sum to at most 1")
        if not self.string_alphabet:
            raise ValueError("string_alphabet must not be empty")
        lo, hi = self.char_range
        if not 0 <= lo <= hi <= 0xFFFF:
            raise ValueError("char_range must lie within the 16-bit code unit range")


DEFAULT_MUTATION = MutationConfig()


# -- values -------------------------------------------------------------------


def random_param(kind: str, cfg: MutationConfig, rng: random.Random) -> Any:
    if kind == "int":
        return rng.randint(*cfg.int_range)
    if kind == "double":
        return round(rng.uniform(*cfg.double_range), rng.randint(0, cfg.double_max_decimals))
    if kind == "char":
        return chr(rng.randint(*cfg.char_range))
    if kind == "string":
        n = rng.randint(0, cfg.max_string_length)
        return "".join(rng.choice(cfg.string_alphabet) for _ in range(n))
    raise ValueError(f"unknown parameter kind {kind!r}")


def _step(rng: random.Random, max_exp: int) -> int:
    return rng.choice((-1, 1)) * 2 ** rng.randint(0, max_exp)


def _clamp(v: int, lo: int, hi: int) -> int:
    return lo if v < lo else hi if v > hi else v


def mutate_int(v: int, cfg: MutationConfig, rng: random.Random) -> int:
    if rng.random() < cfg.resample_probability:
        return rng.randint(*cfg.int_range)
    return _clamp(v + _step(rng, cfg.int_max_exponent), INT32_MIN, INT32_MAX)


def mutate_long(v: Int64, cfg: MutationConfig, rng: random.Random) -> Int64:
    if rng.random() < cfg.resample_probability:
        return Int64(rng.randint(*cfg.int_range))
    return Int64(_clamp(int(v) + _step(rng, cfg.int_max_exponent), INT64_MIN, INT64_MAX))


def mutate_double(v: float, cfg: MutationConfig, rng: random.Random) -> float:
    # staying on a coarse decimal grid keeps exact equalities with computed values reachable
    if rng.random() < cfg.resample_probability or not math.isfinite(v):
        return random_param("double", cfg, rng)
    if rng.random() < cfg.ulp_step_probability:
        toward = math.inf if rng.random() < 0.5 else -math.inf
        out = v
        for _ in range(rng.randint(1, cfg.max_ulp_steps)):
            out = math.nextafter(out, toward)
        return out if math.isfinite(out) else v
    places = rng.randint(0, cfg.double_max_decimals)
    out = v + rng.gauss(0.0, 1.0) * 10.0 ** rng.randint(-places, cfg.double_max_exponent)
    out = round(out, places)
    return out if math.isfinite(out) else v


def mutate_char(c: str, cfg: MutationConfig, rng: random.Random) -> str:
    if rng.random() < cfg.resample_probability or len(c) != 1:
        return chr(rng.randint(*cfg.char_range))
    return chr(_clamp(ord(c) + _step(rng, cfg.char_max_exponent), *cfg.char_range))


def mutate_string(s: str, cfg: MutationConfig, rng: random.Random) -> str:
    if rng.random() < cfg.resample_probability:
        return random_param("string", cfg, rng)
    op = rng.randrange(4)
    if op == 0 or not s:
        i = rng.randint(0, len(s))
        return s[:i] + rng.choice(cfg.string_alphabet) + s[i:]
    i = rng.randrange(len(s))
    if op == 1:
        return s[:i] + s[i + 1:]
    if op == 2:
        return s[:i] + rng.choice(cfg.string_alphabet) + s[i + 1:]
    return s[:i] + mutate_char(s[i], cfg, rng) + s[i + 1:]


def mutate_value(v: Any, cfg: MutationConfig, rng: random.Random, kind: Optional[str] = None) -> Any:
    """Small random change of ``v`` that keeps its type."""
    t = type(v)
    if kind == "char" and t is str:
        return mutate_char(v, cfg, rng)
    if t is bool:
        return not v
    if t is int:
        return mutate_int(v, cfg, rng)
    if t is Int64:
        return mutate_long(v, cfg, rng)
    if t is float:
        return mutate_double(v, cfg, rng)
    if t is str:
        return mutate_string(v, cfg, rng)
    if t is ObjectId:
        return ObjectId(f"{rng.getrandbits(96):024x}")
    if t is list:
        out = list(v)
        op = rng.randrange(3)
        if op == 0 or not out:
            out.insert(rng.randint(0, len(out)), rng.randint(*cfg.int_range))
        elif op == 1:
            del out[rng.randrange(len(out))]
        else:
            i = rng.randrange(len(out))
            out[i] = mutate_value(out[i], cfg, rng)
        return out
    if t is dict:
        if not v:
            return {"a": rng.randint(*cfg.int_range)}
        out = dict(v)
        name = rng.choice(list(out))
        out[name] = mutate_value(out[name], cfg, rng)
        return out
    return v


def _synth_cfg(cfg: MutationConfig) -> SynthesisConfig:
    return SynthesisConfig(int_range=cfg.int_range, double_range=cfg.double_range,
                           alphabet=cfg.string_alphabet, max_string_length=cfg.max_string_length)


def _retype(v: Any, tname: str, cfg: MutationConfig, rng: random.Random) -> Any:
    # numbers convert across numeric types so the stored value keeps its distance
    if type(v) in (int, Int64, float) and math.isfinite(v):
        if tname == "double":
            return float(v)
        if tname == "int" and INT32_MIN <= v <= INT32_MAX:
            return int(v)
        if tname == "long":
            return Int64(int(v))
    return random_value(tname, _synth_cfg(cfg), rng)


def _repair(d: dict, schema: InferredSchema, cfg: MutationConfig, rng: random.Random) -> Optional[dict]:
    """Fix one way in which ``d`` departs from ``schema``; None when it already conforms."""
    issues = [n for n in d if n != "_id" and n not in schema.fields]
    issues += [n for n, t in schema.fields.items() if n != "_id" and (n not in d or type_name(d[n]) != t)]
    if not issues:
        return None
    name = rng.choice(issues)
    out = dict(d)
    if name not in schema.fields:
        del out[name]
    elif name not in out:
        out[name] = random_value(schema.fields[name], _synth_cfg(cfg), rng)
    else:
        out[name] = _retype(out[name], schema.fields[name], cfg, rng)
    return out


def mutate_document(d: dict, cfg: MutationConfig, rng: random.Random,
                    schema: Optional[InferredSchema] = None) -> dict:
    """Change one field value, or the document's shape.

    With a known ``schema`` half of the shape changes move the document
    towards conforming to it.
    """
    out = dict(d)
    if not out or rng.random() < cfg.shape_mutation_probability:
        if schema is not None and rng.random() < 0.5:
            fixed = _repair(out, schema, cfg, rng)
            if fixed is not None:
                return fixed
        op = rng.randrange(3)
        if op == 0 and out:
            name = rng.choice(list(out))
            out[name] = random_value(rng.choice(TYPE_NAMES), _synth_cfg(cfg), rng)
        elif op == 1 and out:
            del out[rng.choice(list(out))]
        else:
            n = 1
            while f"extra{n}" in out:
                n += 1
            out[f"extra{n}"] = rng.randint(*cfg.int_range)
        return out
    name = rng.choice(list(out))
    out[name] = mutate_value(out[name], cfg, rng)
    return out


# -- test cases ---------------------------------------------------------------


def random_call(ep: Endpoint, cfg: MutationConfig, rng: random.Random) -> EndpointCall:
    return EndpointCall(ep.name, tuple((name, random_param(kind, cfg, rng)) for name, kind in ep.params))


def sample_random(scenario: Scenario, cfg: MutationConfig, rng: random.Random) -> TestCase:
    """One to three random calls; no direct insertions."""
    n = rng.randint(1, min(3, cfg.max_calls))
    return TestCase((), tuple(random_call(rng.choice(scenario.endpoints), cfg, rng) for _ in range(n)))


def _mutate_call(call: EndpointCall, ep: Endpoint, cfg: MutationConfig, rng: random.Random) -> EndpointCall:
    i = rng.randrange(len(call.params))
    name, value = call.params[i]
    kind = ep.params[i][1] if i < len(ep.params) else None
    params = list(call.params)
    params[i] = (name, mutate_value(value, cfg, rng, kind))
    return EndpointCall(call.endpoint, tuple(params))


def mutate(
    tc: TestCase,
    scenario: Scenario,
    cfg: MutationConfig,
    rng: random.Random,
    registry: Optional[SchemaRegistry] = None,
    empty_collections: Optional[List[Tuple[str, str]]] = None,
    p_insertion: float = 0.0,
    synthesis: Optional[SynthesisConfig] = None,
) -> TestCase:
    """Return a mutated copy of ``tc``.

    Passing ``empty_collections`` (collections some find of ``tc`` saw empty)
    enables prepending a synthesized insertion with probability ``p_insertion``.
    """
    insertions, calls = list(tc.insertions), list(tc.calls)

    if empty_collections and registry is not None and len(insertions) < cfg.max_insertions \
            and rng.random() < p_insertion:
        key = rng.choice(empty_collections)
        schema = registry.get(key)
        if schema is not None:
            doc = synthesize_document(schema, synthesis or _synth_cfg(cfg), rng)
            return TestCase((MongoInsertion(key[0], key[1], doc),) + tc.insertions, tc.calls)

    r = rng.random()
    if r < cfg.add_call_probability and len(calls) < cfg.max_calls:
        calls.insert(rng.randint(0, len(calls)), random_call(rng.choice(scenario.endpoints), cfg, rng))
        return TestCase(tuple(insertions), tuple(calls))
    r -= cfg.add_call_probability
    if r < cfg.remove_call_probability and len(calls) > 1:
        del calls[rng.randrange(len(calls))]
        return TestCase(tuple(insertions), tuple(calls))
    r -= cfg.remove_call_probability
    if r < cfg.remove_insertion_probability and insertions:
        del insertions[rng.randrange(len(insertions))]
        return TestCase(tuple(insertions), tuple(calls))
    r -= cfg.remove_insertion_probability
    if r < cfg.swap_calls_probability and len(calls) > 1:
        i = rng.randrange(len(calls) - 1)
        calls[i], calls[i + 1] = calls[i + 1], calls[i]
        return TestCase(tuple(insertions), tuple(calls))

    # value mutation of one action that carries values
    slots: List[Tuple[str, int]] = [("call", i) for i, c in enumerate(calls) if c.params]
    slots += [("insert", i) for i in range(len(insertions))]
    if not slots:
        if len(calls) < cfg.max_calls:
            calls.append(random_call(rng.choice(scenario.endpoints), cfg, rng))
        else:
            calls[rng.randrange(len(calls))] = random_call(rng.choice(scenario.endpoints), cfg, rng)
        return TestCase(tuple(insertions), tuple(calls))
    what, i = rng.choice(slots)
    if what == "call":
        calls[i] = _mutate_call(calls[i], scenario.endpoint(calls[i].endpoint), cfg, rng)
    else:
        ins = insertions[i]
        schema = registry.get((ins.database, ins.collection)) if registry is not None else None
        insertions[i] = MongoInsertion(ins.database, ins.collection,
                                       mutate_document(ins.document, cfg, rng, schema))
    return TestCase(tuple(insertions), tuple(calls))
