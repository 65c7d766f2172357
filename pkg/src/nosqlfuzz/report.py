"""Run reports: the JSON summary of a fuzzing run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

from nosqlfuzz.search.mio import SearchConfig, SuiteResult

REPORT_VERSION = 1


@dataclass
class RunReport:
    scenario: str
    config: Dict[str, Any]
    targets: List[str]
    covered: List[str]
    first_cover: Dict[str, int]
    evaluations: int
    suite: List[dict]
    duration_seconds: float = 0.0
    # (evaluation, covered count) each time coverage grew
    history: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def coverage_ratio(self) -> float:
        return len(self.covered) / len(self.targets) if self.targets else 1.0

    def to_json(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "scenario": self.scenario,
            "config": self.config,
            "targets": self.targets,
            "covered": self.covered,
            "coverage_ratio": self.coverage_ratio,
            "first_cover": self.first_cover,
            "evaluations": self.evaluations,
            "suite": self.suite,
            "duration_seconds": self.duration_seconds,
        }


def config_echo(cfg: SearchConfig) -> Dict[str, Any]:
    return {
        "seed": cfg.seed,
        "budget": cfg.budget,
        "k": cfg.distance.K,
        "p_insertion": cfg.p_insertion,
        "conform_probability": cfg.synthesis.conform_probability,
        "nosql_heuristic": cfg.nosql_heuristic,
        "insertion": cfg.insertion,
        "population_size": cfg.population_size,
        "p_random": cfg.p_random,
        "focus_start": cfg.focus_start,
    }


def build_report(scenario_name: str, cfg: SearchConfig, result: SuiteResult,
                 duration: float = 0.0, history=None) -> RunReport:
    return RunReport(
        scenario=scenario_name,
        config=config_echo(cfg),
        targets=list(result.targets),
        covered=list(result.covered),
        first_cover={t: result.first_cover[t] for t in result.covered},
        evaluations=result.evaluations,
        suite=[tc.to_json() for tc in result.suite],
        duration_seconds=round(duration, 6),
        history=list(history or []),
    )


def dumps_report(obj: Any) -> str:
    """Stable text form; field order is fixed so equal runs give equal bytes."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"
