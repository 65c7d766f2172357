"""In-memory monitored document store.

Every ``find`` is logged as an :class:`ExecutedFindRecord`. After a test case
finishes, :func:`recompute_distances` replays the logged filters that came back
empty and scores how close the stored documents are to satisfying them.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from nosqlfuzz.distance import DEFAULT_CONFIG, DistanceConfig, collection_distance
from nosqlfuzz.filters import Filter, matches
from nosqlfuzz.values import ObjectId, to_json

CollectionKey = Tuple[str, str]


class DuplicateId(ValueError):
    pass


@dataclass(frozen=True)
class ExecutedFindRecord:
    database: str
    collection: str
    filter: Filter
    returned_empty: bool
    action_index: Optional[int]


@dataclass
class NoSqlDistanceReport:
    entries: List[Tuple[ExecutedFindRecord, float]] = field(default_factory=list)
    commands: Dict[Optional[int], int] = field(default_factory=dict)

    def distances_for(self, action_index: Optional[int]) -> List[float]:
        return [dist for rec, dist in self.entries if rec.action_index == action_index]

    def command_count(self, action_index: Optional[int]) -> int:
        return self.commands.get(action_index, 0)


class DatabaseState:
    """Collections of documents keyed by ``(database, collection)``.

    Documents without an ``_id`` get one drawn from an RNG seeded with
    ``seed``; :meth:`reset` reseeds it so each execution is reproducible.
    """

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed
        self.collections: Dict[CollectionKey, List[dict]] = {}
        self.records: List[ExecutedFindRecord] = []
        self.commands: Dict[Optional[int], int] = defaultdict(int)
        self.current_action: Optional[int] = None
        self._ids: Dict[CollectionKey, set] = {}
        self._rng = random.Random(seed)

    def reset(self) -> "DatabaseState":
        self.collections.clear()
        self.records.clear()
        self.commands.clear()
        self._ids.clear()
        self.current_action = None
        self._rng.seed(self.seed)
        return self

    def _new_id(self) -> ObjectId:
        return ObjectId(f"{self._rng.getrandbits(96):024x}")

    def insert(self, db: str, coll: str, d: dict) -> ObjectId:
        key = (db, coll)
        ids = self._ids.setdefault(key, set())
        if "_id" in d:
            oid = d["_id"]
            marker = (type(oid).__name__, str(oid))
            if marker in ids:
                raise DuplicateId(f"duplicate _id {oid!r} in {db}.{coll}")
            stored = dict(d)
        else:
            oid = self._new_id()
            while ("ObjectId", str(oid)) in ids:
                oid = self._new_id()
            marker = ("ObjectId", str(oid))
            stored = {"_id": oid}
            stored.update(d)
        ids.add(marker)
        self.collections.setdefault(key, []).append(stored)
        self.commands[self.current_action] += 1
        return oid

    def find(self, db: str, coll: str, f: Filter) -> List[dict]:
        docs = self.collections.get((db, coll), ())
        result = [d for d in docs if matches(d, f)]
        self.records.append(
            ExecutedFindRecord(db, coll, f, not result, self.current_action)
        )
        self.commands[self.current_action] += 1
        return result

    def documents(self, db: str, coll: str) -> List[dict]:
        return self.collections.get((db, coll), [])

    def dump(self) -> dict:
        """JSON-ready view of every collection, keyed ``"db.coll"``."""
        return {
            f"{db}.{coll}": [to_json(d) for d in docs]
            for (db, coll), docs in sorted(self.collections.items())
        }


def recompute_distances(
    state: DatabaseState,
    records: Optional[List[ExecutedFindRecord]] = None,
    cfg: DistanceConfig = DEFAULT_CONFIG,
) -> NoSqlDistanceReport:
    """Score every empty find against the collection contents as they are now.

    Records whose collection is empty, or whose filter now matches a document,
    are left out of the report.
    """
    if records is None:
        records = state.records
    report = NoSqlDistanceReport(commands=dict(state.commands))
    for rec in records:
        if not rec.returned_empty:
            continue
        docs = state.documents(rec.database, rec.collection)
        if not docs:
            continue
        if any(matches(d, rec.filter) for d in docs):
            continue
        report.entries.append((rec, collection_distance(docs, rec.filter, cfg)))
    return report
