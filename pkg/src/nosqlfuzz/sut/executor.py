"""Running test cases against a scenario and scoring its coverage targets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

from nosqlfuzz.distance import DEFAULT_CONFIG, EQ, GT, GTE, LT, LTE, NE, DistanceConfig, nu, rho
from nosqlfuzz.filters import FilterError, parse_filter_obj
from nosqlfuzz.schema import InferredSchema, SchemaRegistry, SchemaSource, conforms
from nosqlfuzz.store import DatabaseState, DuplicateId, ExecutedFindRecord, NoSqlDistanceReport, recompute_distances
from nosqlfuzz.sut.scenario import Branch, Endpoint, Find, Insert, Respond, Scenario, Transform
from nosqlfuzz.sut.testcase import EndpointCall, TestCase
from nosqlfuzz.values import INT32_MIN, Int64

# reached-but-uncovered targets stay strictly below covered ones
REACHED_CAP = 0.99

_PRED_OPS = {"gt": GT, "gte": GTE, "lt": LT, "lte": LTE, "eq": EQ, "ne": NE}
_NEGATED = {GT: LTE, LTE: GT, LT: GTE, GTE: LT, EQ: NE, NE: EQ}


class SutFailure(Exception):
    """Raised inside an endpoint to end the call with status 500."""


@dataclass
class ExecutionResult:
    covered: Set[str] = field(default_factory=set)
    best: Dict[str, Tuple[float, Optional[int]]] = field(default_factory=dict)
    report: NoSqlDistanceReport = field(default_factory=NoSqlDistanceReport)
    commands: Dict[Optional[int], int] = field(default_factory=dict)
    responses: List[int] = field(default_factory=list)
    records: List[ExecutedFindRecord] = field(default_factory=list)

    def h(self, target: str) -> float:
        entry = self.best.get(target)
        return entry[0] if entry else 0.0

    def best_action(self, target: str) -> Optional[int]:
        entry = self.best.get(target)
        return entry[1] if entry else None

    def empty_find_collections(self) -> List[Tuple[str, str]]:
        seen: Dict[Tuple[str, str], None] = {}
        for rec in self.records:
            if rec.returned_empty:
                seen[(rec.database, rec.collection)] = None
        return list(seen)


# -- expressions --------------------------------------------------------------


def _wrap(v: int, long: bool) -> Any:
    if long:
        v = (v + 2**63) % 2**64 - 2**63
        return Int64(v)
    return (v - INT32_MIN) % 2**32 + INT32_MIN


def _arith(op: str, a: Any, b: Any) -> Any:
    ta, tb = type(a), type(b)
    if ta is str and tb is str and op == "add":
        return a + b
    nums = (int, float, Int64)
    if ta not in nums or tb not in nums:
        raise SutFailure(f"cannot apply {op} to {ta.__name__} and {tb.__name__}")
    if ta is float or tb is float:
        x, y = float(a), float(b)
        if op == "add":
            return x + y
        if op == "sub":
            return x - y
        if op == "mul":
            return x * y
        if y == 0.0:
            if x == 0.0 or x != x:
                return math.nan
            return math.copysign(math.inf, x) * math.copysign(1.0, y)
        return x / y
    long = ta is Int64 or tb is Int64
    x, y = int(a), int(b)
    if op == "add":
        return _wrap(x + y, long)
    if op == "sub":
        return _wrap(x - y, long)
    if op == "mul":
        return _wrap(x * y, long)
    if y == 0:
        raise SutFailure("integer division by zero")
    q = abs(x) // abs(y)
    return _wrap(q if (x >= 0) == (y >= 0) else -q, long)


def evaluate(expr: tuple, env: Dict[str, Any]) -> Any:
    op = expr[0]
    if op == "var":
        return env[expr[1]]
    if op == "lit":
        return expr[1]
    if op == "char_shift":
        c = evaluate(expr[1], env)
        if type(c) is not str or len(c) != 1:
            raise SutFailure("char_shift needs a single character")
        return chr((ord(c) + expr[2]) & 0xFFFF)
    return _arith(op, evaluate(expr[1], env), evaluate(expr[2], env))


# -- targets ------------------------------------------------------------------


def _walk(steps, acc: List[str], endpoint: str, flags: dict) -> bool:
    """Collect targets of ``steps``; return True when every path responds."""
    for s in steps:
        t = type(s)
        if t is Respond:
            acc.append(f"{endpoint}.{s.status}")
            return True
        if t is Branch:
            acc.append(f"{endpoint}.{s.id}.true")
            acc.append(f"{endpoint}.{s.id}.false")
            a = _walk(s.then, acc, endpoint, flags)
            b = _walk(s.orelse, acc, endpoint, flags)
            if a and b:
                return True
        elif t is Find:
            flags["find"] = True
        elif t is Transform and _has_div(s.expr):
            flags["div"] = True
    return False


def _has_div(expr: tuple) -> bool:
    if expr[0] == "div":
        return True
    return any(type(e) is tuple and _has_div(e) for e in expr[1:])


def endpoint_targets(scenario: Scenario, ep: Endpoint) -> List[str]:
    acc: List[str] = []
    flags: dict = {}
    if not _walk(ep.body, acc, ep.name, flags):
        acc.append(f"{ep.name}.200")
    finds_declared = any(
        scenario.declared_schema(scenario.database, s.collection) is not None
        for s in _iter_steps(ep.body) if type(s) is Find
    )
    if finds_declared or flags.get("div"):
        acc.append(f"{ep.name}.500")
    return list(dict.fromkeys(acc))


def _iter_steps(steps):
    for s in steps:
        yield s
        if type(s) is Branch:
            yield from _iter_steps(s.then)
            yield from _iter_steps(s.orelse)


def list_targets(scenario: Scenario) -> List[str]:
    """Every branch side and reachable (endpoint, status) pair, in scenario order."""
    out: List[str] = []
    for ep in scenario.endpoints:
        out.extend(endpoint_targets(scenario, ep))
    return out


# -- execution ----------------------------------------------------------------


class _Respond(Exception):
    def __init__(self, status: int) -> None:
        self.status = status


class _Run:
    def __init__(self, scenario: Scenario, state: DatabaseState, cfg: DistanceConfig) -> None:
        self.scenario = scenario
        self.state = state
        self.cfg = cfg
        self.db = scenario.database
        # target -> index of the first call covering it
        self.covered: Dict[str, int] = {}
        # (target, action, h) for numeric branches; (target, action, record index) for emptiness
        self.fixed: List[Tuple[str, Optional[int], float]] = []
        self.pending: List[Tuple[str, Optional[int], int]] = []
        self.sut_inserts: Dict[Tuple[str, str], List[dict]] = {}
        self.schemas = {
            key: InferredSchema(key, decl, SchemaSource.DECLARED)
            for key, decl in scenario.collections.items() if decl is not None
        }

    def call(self, index: int, call: EndpointCall) -> int:
        ep = self.scenario.endpoint(call.endpoint)
        env = dict(call.params)
        self.state.current_action = index
        try:
            self.steps(ep, ep.body, env, index)
        except _Respond as r:
            status = r.status
        except SutFailure:
            status = 500
        else:
            status = 200
        self.covered.setdefault(f"{ep.name}.{status}", index)
        return status

    def steps(self, ep: Endpoint, steps, env: Dict[str, Any], index: int) -> None:
        for s in steps:
            t = type(s)
            if t is Transform:
                env[s.var] = evaluate(s.expr, env)
            elif t is Find:
                try:
                    f = parse_filter_obj(s.filter.render(env))
                except FilterError as exc:
                    raise SutFailure(str(exc)) from exc
                result = self.state.find(self.db, s.collection, f)
                schema = self.schemas.get((self.db, s.collection))
                if schema is not None and not all(conforms(d, schema) for d in result):
                    raise SutFailure("stored document does not match the expected shape")
                env[s.into] = (result, len(self.state.records) - 1)
            elif t is Insert:
                doc = s.document.render(env)
                self.state.insert(self.db, s.collection, doc)
                self.sut_inserts.setdefault((self.db, s.collection), []).append(doc)
            elif t is Branch:
                self.branch(ep, s, dict(env), index)
            elif t is Respond:
                raise _Respond(s.status)

    def branch(self, ep: Endpoint, s: Branch, env: Dict[str, Any], index: int) -> None:
        true_t, false_t = f"{ep.name}.{s.id}.true", f"{ep.name}.{s.id}.false"
        op = s.predicate[0]
        if op in ("nonempty", "empty"):
            result, rec_index = env[s.predicate[1]]
            nonempty = bool(result)
            taken = nonempty if op == "nonempty" else not nonempty
            # the side that needs data gets its gradient from the find's distance
            data_side = true_t if op == "nonempty" else false_t
            empty_side = false_t if op == "nonempty" else true_t
            if nonempty:
                self.fixed.append((empty_side, index, _h(self.cfg.K)))
            else:
                self.pending.append((data_side, index, rec_index))
        else:
            rel = _PRED_OPS[op]
            a, b = evaluate(s.predicate[1], env), evaluate(s.predicate[2], env)
            d_true = rho(rel, a, b, self.cfg)
            taken = d_true == 0.0
            if taken:
                self.fixed.append((false_t, index, _h(rho(_NEGATED[rel], a, b, self.cfg))))
            else:
                self.fixed.append((true_t, index, _h(d_true)))
        self.covered.setdefault(true_t if taken else false_t, index)
        self.steps(ep, s.then if taken else s.orelse, env, index)


def _h(distance: float) -> float:
    return REACHED_CAP * (1.0 - nu(distance))


def execute(
    scenario: Scenario,
    tc: TestCase,
    state: DatabaseState,
    cfg: DistanceConfig = DEFAULT_CONFIG,
    nosql_heuristic: bool = True,
    registry: Optional[SchemaRegistry] = None,
    targets: Optional[List[str]] = None,
) -> ExecutionResult:
    """Run ``tc`` from a freshly reset store and score every target.

    With ``nosql_heuristic`` off, empty finds contribute no distances and the
    branches guarded by them fall back to the flat distance K.
    """
    state.reset()
    run = _Run(scenario, state, cfg)
    for ins in tc.insertions:
        try:
            state.insert(ins.database, ins.collection, ins.document)
        except DuplicateId:
            # a clashing explicit _id is dropped like a rejected write
            pass
    responses = []
    for i, call in enumerate(tc.calls):
        responses.append(run.call(i, call))
    state.current_action = None

    report = recompute_distances(state, cfg=cfg) if nosql_heuristic else \
        NoSqlDistanceReport(commands=dict(state.commands))
    by_record = {id(rec): dist for rec, dist in report.entries}

    best: Dict[str, Tuple[float, Optional[int]]] = {}

    def offer(target: str, h: float, action: Optional[int]) -> None:
        cur = best.get(target)
        if cur is None or h > cur[0]:
            best[target] = (h, action)

    for target, action, h in run.fixed:
        offer(target, h, action)
    for target, action, rec_index in run.pending:
        dist = by_record.get(id(state.records[rec_index]))
        # an empty collection is the farthest state; any stored data scores within K
        offer(target, _h(cfg.K if dist is None else cfg.K * nu(dist)), action)
    covered = set(run.covered) if targets is None else set(run.covered).intersection(targets)
    for target in covered:
        best[target] = (1.0, run.covered[target])

    if registry is not None:
        for key, docs in run.sut_inserts.items():
            registry.observe_documents(key, docs)
        for rec in state.records:
            registry.observe_filter((rec.database, rec.collection), rec.filter)

    return ExecutionResult(
        covered=covered,
        best=best,
        report=report,
        commands=dict(state.commands),
        responses=responses,
        records=list(state.records),
    )

