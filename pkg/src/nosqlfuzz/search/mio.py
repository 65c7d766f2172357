"""Many Independent Objective search over a scenario's coverage targets."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from nosqlfuzz.distance import DEFAULT_CONFIG, DistanceConfig
from nosqlfuzz.schema import SchemaRegistry, SynthesisConfig
from nosqlfuzz.search.individual import Individual
from nosqlfuzz.search.mutation import DEFAULT_MUTATION, MutationConfig, mutate, sample_random
from nosqlfuzz.store import DatabaseState
from nosqlfuzz.sut.executor import execute, list_targets
from nosqlfuzz.sut.scenario import Scenario
from nosqlfuzz.sut.testcase import TestCase


@dataclass(frozen=True)
class SearchConfig:
    budget: int = 10_000
    seed: int = 0
    population_size: int = 10
    p_random: float = 0.5
    # fraction of the budget after which sampling stops and populations shrink to one
    focus_start: float = 0.5
    p_insertion: float = 0.5
    nosql_heuristic: bool = True
    insertion: bool = True
    distance: DistanceConfig = DEFAULT_CONFIG
    synthesis: SynthesisConfig = field(default_factory=SynthesisConfig)
    mutation: MutationConfig = DEFAULT_MUTATION

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.population_size < 1:
            raise ValueError("population_size must be at least 1")
        for name in ("p_random", "focus_start", "p_insertion"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


@dataclass
class SuiteResult:
    targets: List[str]
    covered: List[str]
    suite: List[TestCase]
    # target -> 1-based index of the evaluation that first covered it
    first_cover: Dict[str, int]
    evaluations: int

    @property
    def coverage_ratio(self) -> float:
        return len(self.covered) / len(self.targets) if self.targets else 1.0


class Archive:
    """Per-target populations sorted best first, plus one test per covered target."""

    def __init__(self, targets: List[str]) -> None:
        self.targets = list(targets)
        self.populations: Dict[str, List[Individual]] = {t: [] for t in targets}
        self.covered: Dict[str, Individual] = {}
        self.first_cover: Dict[str, int] = {}
        self.counters: Dict[str, int] = {t: 0 for t in targets}

    def uncovered(self) -> List[str]:
        return [t for t in self.targets if t not in self.covered]

    def update(self, ind: Individual, evaluation: int, limit: int) -> None:
        for t in self.targets:
            h = ind.h(t)
            if h >= 1.0:
                best = self.covered.get(t)
                if best is None:
                    self.covered[t] = ind
                    self.first_cover[t] = evaluation
                    self.populations[t] = []
                elif len(ind.tc) < len(best.tc):
                    self.covered[t] = ind
                continue
            if h <= 0.0 or t in self.covered:
                continue
            pop = self.populations[t]
            key = ind.key(t)
            if not pop or key > pop[0].key(t):
                self.counters[t] = 0
            if len(pop) >= limit:
                # ties with the worst member replace it, letting plateaus drift
                if key < pop[-1].key(t):
                    continue
                pop.pop()
            pop.insert(_insert_pos(pop, key, t), ind)

    def shrink(self, limit: int) -> None:
        for t, pop in self.populations.items():
            if len(pop) > limit:
                del pop[limit:]


def _insert_pos(pop: List[Individual], key, t: str) -> int:
    lo, hi = 0, len(pop)
    while lo < hi:
        mid = (lo + hi) // 2
        if pop[mid].key(t) >= key:
            lo = mid + 1
        else:
            hi = mid
    return lo


ProgressHook = Callable[[int, int], None]


def fuzz(
    scenario: Scenario,
    cfg: SearchConfig,
    on_evaluation: Optional[ProgressHook] = None,
) -> SuiteResult:
    """Search for tests covering every target of ``scenario`` within ``cfg.budget`` evaluations.

    Stops early once everything is covered. ``on_evaluation(evaluations, covered)``
    is called after each evaluation.
    """
    rng = random.Random(cfg.seed)
    targets = list_targets(scenario)
    archive = Archive(targets)
    state = DatabaseState(cfg.seed)
    registry = SchemaRegistry()
    for key, decl in scenario.collections.items():
        if decl is not None:
            registry.declare_schema(key, decl)
    mcfg = cfg.mutation
    target_set = set(targets)

    def evaluate(tc: TestCase) -> Individual:
        result = execute(scenario, tc, state, cfg.distance,
                         nosql_heuristic=cfg.nosql_heuristic, registry=registry)
        result.covered &= target_set
        return Individual(tc, result, use_nosql=cfg.nosql_heuristic)

    evaluations = 0
    limit = cfg.population_size
    while evaluations < cfg.budget:
        progress = evaluations / cfg.budget
        if progress < cfg.focus_start and cfg.focus_start > 0:
            frac = progress / cfg.focus_start
            p_random = cfg.p_random * (1.0 - frac)
            new_limit = max(1, round(cfg.population_size - (cfg.population_size - 1) * frac))
        else:
            p_random = 0.0
            new_limit = 1
        if new_limit < limit:
            archive.shrink(new_limit)
        limit = new_limit

        open_targets = [t for t in archive.uncovered() if archive.populations[t]]
        if not open_targets or rng.random() < p_random:
            tc = sample_random(scenario, mcfg, rng)
        else:
            low = min(archive.counters[t] for t in open_targets)
            target = rng.choice([t for t in open_targets if archive.counters[t] == low])
            archive.counters[target] += 1
            parent = rng.choice(archive.populations[target])
            empties = parent.result.empty_find_collections() if cfg.insertion else None
            tc = mutate(parent.tc, scenario, mcfg, rng, registry=registry,
                        empty_collections=empties, p_insertion=cfg.p_insertion,
                        synthesis=cfg.synthesis)

        ind = evaluate(tc)
        evaluations += 1
        archive.update(ind, evaluations, limit)
        if on_evaluation is not None:
            on_evaluation(evaluations, len(archive.covered))
        if len(archive.covered) == len(targets):
            break

    covered = [t for t in targets if t in archive.covered]
    suite: List[TestCase] = []
    seen = set()
    for t in covered:
        tc = archive.covered[t].tc
        if id(tc) not in seen:
            seen.add(id(tc))
            suite.append(tc)
    return SuiteResult(targets, covered, suite, dict(archive.first_cover), evaluations)
