"""Scenario model: simulated REST endpoints that talk to the monitored store."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import jsonschema

from nosqlfuzz.filters import FilterError, UnknownOperator, parse_filter_obj
from nosqlfuzz.values import UnsupportedValue, from_json

PARAM_KINDS = ("int", "char", "double", "string")
BINARY_OPS = ("add", "sub", "mul", "div")
PREDICATE_OPS = ("gt", "gte", "lt", "lte", "eq", "ne")


class ScenarioError(ValueError):
    """Invalid scenario; ``where`` locates the offending element."""

    def __init__(self, message: str, where: str = "") -> None:
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Template:
    """A JSON value with ``{"$var": name}`` placeholders."""

    body: Any
    variables: Tuple[str, ...]

    def render(self, env: Dict[str, Any]) -> Any:
        if not self.variables:
            return self.body
        return _substitute(self.body, env)


def _substitute(t: Any, env: Dict[str, Any]) -> Any:
    if type(t) is VarRef:
        return env[t.name]
    if type(t) is dict:
        return {k: _substitute(v, env) for k, v in t.items()}
    if type(t) is list:
        return [_substitute(v, env) for v in t]
    return t


@dataclass(frozen=True)
class Transform:
    var: str
    expr: tuple


@dataclass(frozen=True)
class Insert:
    collection: str
    document: Template


@dataclass(frozen=True)
class Find:
    collection: str
    filter: Template
    into: str


@dataclass(frozen=True)
class Branch:
    id: str
    predicate: tuple
    then: Tuple["Step", ...]
    orelse: Tuple["Step", ...]


@dataclass(frozen=True)
class Respond:
    status: int


Step = Union[Transform, Insert, Find, Branch, Respond]


@dataclass(frozen=True)
class Endpoint:
    name: str
    params: Tuple[Tuple[str, str], ...]
    body: Tuple[Step, ...]


@dataclass
class Scenario:
    name: str
    database: str
    collections: Dict[Tuple[str, str], Optional[Dict[str, str]]]
    endpoints: List[Endpoint]
    description: str = ""
    _by_name: Dict[str, Endpoint] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._by_name = {e.name: e for e in self.endpoints}

    def endpoint(self, name: str) -> Endpoint:
        return self._by_name[name]

    def declared_schema(self, db: str, coll: str) -> Optional[Dict[str, str]]:
        return self.collections.get((db, coll))


# -- loading ------------------------------------------------------------------


def _schema() -> dict:
    text = resources.files("nosqlfuzz.schemas").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


_VALIDATOR: Optional[jsonschema.Draft202012Validator] = None


def _validator() -> jsonschema.Draft202012Validator:
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = jsonschema.Draft202012Validator(_schema())
    return _VALIDATOR


def _where(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


class _Builder:
    def __init__(self, raw: dict) -> None:
        self.raw = raw
        self.database = raw.get("database", "test")
        self.collections: Dict[Tuple[str, str], Optional[Dict[str, str]]] = {}
        for key, decl in raw.get("collections", {}).items():
            db, coll = key.split(".")
            self.collections[(db, coll)] = dict(decl) if decl is not None else None

    def collection(self, name: str, where: str) -> str:
        if (self.database, name) not in self.collections:
            raise ScenarioError(f"collection {name!r} is not listed under 'collections'", where)
        return name

    def expr(self, e: Any, scope: Dict[str, str], where: str) -> tuple:
        if isinstance(e, bool) or e is None:
            raise ScenarioError("expressions must be numbers, strings or operator objects", where)
        if isinstance(e, (int, float, str)):
            return ("lit", from_json(e))
        (op, arg), = e.items()
        if op == "var":
            kind = scope.get(arg)
            if kind is None:
                raise ScenarioError(f"undefined variable {arg!r}", where)
            if kind == "result":
                raise ScenarioError(f"find result {arg!r} cannot be used in an expression", where)
            return ("var", arg)
        if op == "const":
            try:
                return ("lit", from_json(arg))
            except UnsupportedValue as exc:
                raise ScenarioError(str(exc), where) from exc
        if op == "char_shift":
            return ("char_shift", self.expr(arg[0], scope, where + ".char_shift[0]"), int(arg[1]))
        return (op, self.expr(arg[0], scope, f"{where}.{op}[0]"),
                self.expr(arg[1], scope, f"{where}.{op}[1]"))

    def template(self, obj: Any, scope: Dict[str, str], where: str) -> Template:
        names: List[str] = []

        def walk(t: Any, w: str) -> Any:
            if type(t) is dict:
                if len(t) == 1 and "$var" in t:
                    name = t["$var"]
                    if scope.get(name) in (None, "result"):
                        raise ScenarioError(f"undefined variable {name!r}", w)
                    names.append(name)
                    return VarRef(name)
                return {k: walk(v, f"{w}.{k}") for k, v in t.items()}
            if type(t) is list:
                return [walk(v, f"{w}[{i}]") for i, v in enumerate(t)]
            return t

        return Template(walk(obj, where), tuple(names))

    def check_filter(self, t: Template, where: str) -> None:
        # operators are static; placeholders are irrelevant to that check
        try:
            parse_filter_obj(t.render({n: 1 for n in t.variables}))
        except UnknownOperator as exc:
            raise ScenarioError(str(exc), where) from exc
        except FilterError:
            pass

    def steps(self, raw_steps: list, scope: Dict[str, str], where: str,
              branch_ids: set, endpoint: str) -> Tuple[Step, ...]:
        out: List[Step] = []
        scope = dict(scope)
        for i, s in enumerate(raw_steps):
            w = f"{where}[{i}]"
            if "let" in s:
                out.append(Transform(s["let"], self.expr(s["expr"], scope, w + ".expr")))
                scope[s["let"]] = "value"
            elif "insert" in s:
                ins = s["insert"]
                coll = self.collection(ins["collection"], w + ".insert.collection")
                out.append(Insert(coll, self.template(ins["document"], scope, w + ".insert.document")))
            elif "find" in s:
                fd = s["find"]
                coll = self.collection(fd["collection"], w + ".find.collection")
                tpl = self.template(fd["filter"], scope, w + ".find.filter")
                self.check_filter(tpl, w + ".find.filter")
                out.append(Find(coll, tpl, fd["into"]))
                scope[fd["into"]] = "result"
            elif "branch" in s:
                br = s["branch"]
                if br["id"] in branch_ids:
                    raise ScenarioError(f"duplicate branch id {br['id']!r} in endpoint {endpoint}", w)
                branch_ids.add(br["id"])
                out.append(Branch(
                    br["id"],
                    self.predicate(br["if"], scope, w + ".branch.if"),
                    self.steps(br["then"], scope, w + ".branch.then", branch_ids, endpoint),
                    self.steps(br["else"], scope, w + ".branch.else", branch_ids, endpoint),
                ))
            else:
                out.append(Respond(int(s["respond"])))
        return tuple(out)

    def predicate(self, p: dict, scope: Dict[str, str], where: str) -> tuple:
        (op, arg), = p.items()
        if op in ("nonempty", "empty"):
            if scope.get(arg) != "result":
                raise ScenarioError(f"{arg!r} is not a find result", where)
            return (op, arg)
        return (op, self.expr(arg[0], scope, f"{where}.{op}[0]"),
                self.expr(arg[1], scope, f"{where}.{op}[1]"))

    def build(self) -> Scenario:
        endpoints = []
        seen = set()
        for i, raw_ep in enumerate(self.raw["endpoints"]):
            w = f"$.endpoints[{i}]"
            name = raw_ep["name"]
            if name in seen:
                raise ScenarioError(f"duplicate endpoint name {name!r}", w + ".name")
            seen.add(name)
            params = tuple((p["name"], p["kind"]) for p in raw_ep.get("params", []))
            if len({p for p, _ in params}) != len(params):
                raise ScenarioError("duplicate parameter names", w + ".params")
            scope = {p: kind for p, kind in params}
            body = self.steps(raw_ep["body"], scope, w + ".body", set(), name)
            endpoints.append(Endpoint(name, params, body))
        return Scenario(self.raw["name"], self.database, self.collections, endpoints,
                        self.raw.get("description", ""))


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario from its JSON text."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}, column {exc.colno}") from exc
    err = jsonschema.exceptions.best_match(_validator().iter_errors(raw))
    if err is not None:
        raise ScenarioError(err.message, _where(err.absolute_path))
    return _Builder(raw).build()


def bundled_names() -> List[str]:
    root = resources.files("nosqlfuzz.scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> Scenario:
    res = resources.files("nosqlfuzz.scenarios").joinpath(f"{name}.json")
    if not res.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r}")
    return load_scenario(res.read_text())


def resolve_scenario(name_or_path: str) -> Scenario:
    """Load a bundled scenario by name, or a scenario file by path."""
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file: {exc}") from exc
        return load_scenario(text)
    return load_bundled(name_or_path)
