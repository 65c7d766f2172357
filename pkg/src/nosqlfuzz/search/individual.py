"""Evaluated test cases and the per-target fitness ordering."""

from __future__ import annotations

from typing import Dict, Optional, Tuple

from nosqlfuzz.distance import mean_normalized
from nosqlfuzz.sut.executor import ExecutionResult
from nosqlfuzz.sut.testcase import TestCase


class UnevaluatedIndividual(RuntimeError):
    pass


FitnessKey = Tuple[float, int, float]


class Individual:
    """A test case together with the result of its single evaluation."""

    __slots__ = ("tc", "result", "use_nosql", "_keys")

    def __init__(self, tc: TestCase, result: Optional[ExecutionResult] = None,
                 use_nosql: bool = True) -> None:
        self.tc = tc
        self.result = result
        self.use_nosql = use_nosql
        self._keys: Dict[str, FitnessKey] = {}

    def h(self, target: str) -> float:
        if self.result is None:
            raise UnevaluatedIndividual("individual has not been executed")
        return self.result.h(target)

    def secondary(self, target: str) -> Tuple[int, float]:
        """Command count k of the best action for ``target`` and its mean normalized distance."""
        if self.result is None:
            raise UnevaluatedIndividual("individual has not been executed")
        action = self.result.best_action(target)
        if action is None:
            return 0, 1.0
        k = self.result.commands.get(action, 0)
        if not self.use_nosql:
            return k, 1.0
        return k, mean_normalized(self.result.report.distances_for(action))

    def key(self, target: str) -> FitnessKey:
        """Sort key for ``target``: larger is fitter."""
        key = self._keys.get(target)
        if key is None:
            k, mean_d = self.secondary(target)
            key = (self.h(target), k, -mean_d)
            self._keys[target] = key
        return key

    def __repr__(self) -> str:
        return f"Individual({self.tc!r})"


def compare_for_target(t1: Individual, t2: Individual, target: str) -> int:
    """Return 1 if ``t1`` is fitter for ``target``, -1 if ``t2`` is, 0 on a full tie.

    Higher h wins. On equal h the individual whose best action issued more
    database commands wins; with equal command counts the lower mean of the
    normalized find distances wins.
    """
    a, b = t1.key(target), t2.key(target)
    return (a > b) - (a < b)
