"""Seeded Born-rule sampling of a sequential MC measurement.

Trials are split into fixed-size blocks; block ``b`` draws from its own
substream ``SeedSequence(seed, spawn_key=(b,))`` and every trial inside it
consumes a fixed number of uniforms. The summary therefore depends only on
``(seed, trials)``, not on how blocks are scheduled.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import DEFAULT_TOL, QStateError, Tolerances
from .smc import SmcPlan, Termination

BLOCK = 8192
Z_THRESHOLD = 4.0
LOW_POWER_N = 30


@dataclass(frozen=True)
class SeedConfig:
    seed: int
    trials: int

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise QStateError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if self.trials < 1:
            raise QStateError(f"trials must be >= 1, got {self.trials!r}")


@dataclass
class StageCounts:
    correct: int
    wrong: int
    descended: int

    @property
    def conclusive(self) -> int:
        return self.correct + self.wrong

    def confidence(self) -> tuple[float | None, float | None]:
        """Empirical confidence and its standard error (None without conclusive events)."""
        n = self.conclusive
        if n == 0:
            return None, None
        p = self.correct / n
        return p, math.sqrt(p * (1 - p) / n)


@dataclass
class SimSummary:
    seed: int
    trials: int
    stages: list[StageCounts]
    inconclusive: int

    @property
    def correct(self) -> int:
        return sum(s.correct for s in self.stages)

    @property
    def wrong(self) -> int:
        return sum(s.wrong for s in self.stages)

    @property
    def p_correct(self) -> float:
        return self.correct / self.trials

    @property
    def p_error(self) -> float:
        return self.wrong / self.trials

    @property
    def p_inconclusive(self) -> float:
        return self.inconclusive / self.trials

    def to_dict(self) -> dict:
        stages = []
        for i, s in enumerate(self.stages, start=1):
            conf, se = s.confidence()
            stages.append({"index": i, **asdict(s), "confidence": conf, "standard_error": se})
        return {
            "seed": self.seed,
            "trials": self.trials,
            "stages": stages,
            "inconclusive": self.inconclusive,
            "p_correct": self.p_correct,
            "p_error": self.p_error,
            "p_inconclusive": self.p_inconclusive,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _cdf_rows(rows: np.ndarray, tol: Tolerances) -> np.ndarray:
    sums = rows.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > tol.eps_prob):
        raise QStateError(f"outcome distribution does not sum to 1 (max deviation {np.abs(sums - 1).max():.3e})")
    cdf = np.cumsum(rows / sums[:, None], axis=1)
    cdf[:, -1] = 1.0
    return cdf


def _run_block(p: SmcPlan, cdfs, u: np.ndarray):
    n = p.n
    n_st = len(p.stages)
    j = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
    active = np.ones(len(u), dtype=bool)
    counts = []
    for s, stage in enumerate(p.stages):
        ok = active & (u[:, 1 + 2 * s] < stage.success_probability)
        rows = cdfs[s][j[ok]]
        k = (u[ok, 2 + 2 * s][:, None] >= rows).sum(axis=1)
        k = np.minimum(k, n - 1)
        correct = int(np.count_nonzero(k == j[ok]))
        failed = active & ~ok
        descended = int(np.count_nonzero(failed)) if s < n_st - 1 else 0
        counts.append([correct, int(ok.sum()) - correct, descended])
        active = failed
    return counts, int(active.sum())


def simulate(p: SmcPlan, cfg: SeedConfig, tol: Tolerances = DEFAULT_TOL) -> SimSummary:
    if p.termination is Termination.UNIFORM and p.stages[-1].failure_probability != 0.0:
        raise QStateError("plan ends on uniform coefficients but its last stage can fail")
    cdfs = [_cdf_rows(s.realization.conclusive.outcome_probabilities, tol) for s in p.stages]
    width = 1 + 2 * len(p.stages)
    totals = np.zeros((len(p.stages), 3), dtype=np.int64)
    inconclusive = 0
    for b, start in enumerate(range(0, cfg.trials, BLOCK)):
        size = min(BLOCK, cfg.trials - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed, spawn_key=(b,))))
        u = rng.random((size, width))
        counts, inc = _run_block(p, cdfs, u)
        totals += np.asarray(counts, dtype=np.int64)
        inconclusive += inc
    stages = [StageCounts(int(c), int(w), int(d)) for c, w, d in totals]
    return SimSummary(cfg.seed, cfg.trials, stages, inconclusive)


# -- comparison against the analytic plan -----------------------------------


@dataclass
class StatCheck:
    name: str
    empirical: float | None
    expected: float
    n: int
    z: float | None
    passed: bool
    low_power: bool


def _check(name: str, successes: int, n: int, expected: float) -> StatCheck:
    if n == 0:
        return StatCheck(name, None, expected, 0, None, True, True)
    emp = successes / n
    se = math.sqrt(expected * (1 - expected) / n)
    if se == 0.0:
        z = 0.0 if emp == expected else math.inf
    else:
        z = (emp - expected) / se
    return StatCheck(name, emp, expected, n, z, abs(z) <= Z_THRESHOLD, n < LOW_POWER_N)


def consistency_report(summary: SimSummary, p: SmcPlan) -> list[StatCheck]:
    """z-scores of every sampled statistic against the plan; pass iff |z| <= 4.

    Standard errors use the analytic value so an empirical 0 or 1 at small
    sample sizes cannot produce a zero denominator.
    """
    if len(summary.stages) != len(p.stages):
        raise QStateError("summary and plan have different numbers of stages")
    checks = []
    reached = summary.trials
    for i, (counts, stage) in enumerate(zip(summary.stages, p.stages), start=1):
        checks.append(_check(f"stage{i}_confidence", counts.correct, counts.conclusive, stage.confidence))
        checks.append(_check(f"stage{i}_success", counts.conclusive, reached, 1.0 - stage.failure_probability))
        reached = counts.descended
    checks.append(_check("p_correct", summary.correct, summary.trials, p.p_correct_total))
    checks.append(_check("p_error", summary.wrong, summary.trials, p.p_error_total))
    checks.append(_check("p_inconclusive", summary.inconclusive, summary.trials, p.p_inconclusive_total))
    return checks


def report_to_dict(checks: list[StatCheck]) -> dict:
    items = []
    for c in checks:
        d = asdict(c)
        # strict JSON has no infinity; an impossible event observed is reported as a string
        if d["z"] is not None and not math.isfinite(d["z"]):
            d["z"] = "inf" if d["z"] > 0 else "-inf"
        items.append(d)
    return {
        "threshold": Z_THRESHOLD,
        "passed": all(c.passed for c in checks),
        "checks": items,
    }
