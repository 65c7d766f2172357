"""Test cases: direct database insertions followed by endpoint calls."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Tuple, Union

from nosqlfuzz.values import from_json, to_json


class TestCaseError(ValueError):
    pass


@dataclass(frozen=True)
class MongoInsertion:
    database: str
    collection: str
    document: dict


@dataclass(frozen=True)
class EndpointCall:
    endpoint: str
    params: Tuple[Tuple[str, Any], ...] = ()

    def param(self, name: str) -> Any:
        for k, v in self.params:
            if k == name:
                return v
        raise KeyError(name)


Action = Union[MongoInsertion, EndpointCall]


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    insertions: Tuple[MongoInsertion, ...]
    calls: Tuple[EndpointCall, ...]

    def __post_init__(self) -> None:
        if not self.calls:
            raise TestCaseError("a test case needs at least one endpoint call")

    @classmethod
    def from_actions(cls, actions: Iterable[Action]) -> "TestCase":
        insertions, calls = [], []
        for a in actions:
            if isinstance(a, MongoInsertion):
                if calls:
                    raise TestCaseError("insertions must precede all endpoint calls")
                insertions.append(a)
            elif isinstance(a, EndpointCall):
                calls.append(a)
            else:
                raise TestCaseError(f"not an action: {a!r}")
        return cls(tuple(insertions), tuple(calls))

    @property
    def actions(self) -> Tuple[Action, ...]:
        return self.insertions + self.calls

    def __len__(self) -> int:
        return len(self.insertions) + len(self.calls)

    def to_json(self) -> dict:
        actions = []
        for ins in self.insertions:
            actions.append({"insert": {"database": ins.database, "collection": ins.collection,
                                       "document": to_json(ins.document)}})
        for call in self.calls:
            actions.append({"call": {"endpoint": call.endpoint,
                                     "params": {k: to_json(v) for k, v in call.params}}})
        return {"actions": actions}

    @classmethod
    def from_json(cls, obj: dict) -> "TestCase":
        try:
            raw = obj["actions"]
        except (KeyError, TypeError):
            raise TestCaseError("test case JSON needs an 'actions' list") from None
        actions = []
        for item in raw:
            if "insert" in item:
                ins = item["insert"]
                actions.append(MongoInsertion(ins["database"], ins["collection"],
                                              from_json(ins["document"])))
            elif "call" in item:
                call = item["call"]
                params = tuple((k, from_json(v)) for k, v in call.get("params", {}).items())
                actions.append(EndpointCall(call["endpoint"], params))
            else:
                raise TestCaseError(f"unknown action {item!r}")
        return cls.from_actions(actions)
