"""Sequential maximum-confidence measurements.

After an inconclusive outcome the states live on a smaller set of modes and
are again symmetric, so the optimal MC measurement can be repeated. The
sequence stops when the remaining coefficients have equal magnitudes (the
last stage never fails) or only one mode is left (nothing more to learn).
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import DEFAULT_TOL, ParseError, QStateError, Tolerances
from .neumark import OneDimensional, StageRealization, build_stage, restrict, run_coupled
from .povm import me_confidence
from .symmetric import InvalidSetError, SymmetricSet, coefficient_profile, make_root_set, state

# a gap between magnitude groups below this many eps_group is reported
NEAR_DEGENERATE_FACTOR = 1e3


class Termination(str, enum.Enum):
    UNIFORM = "UniformCoefficients"
    ONE_DIMENSIONAL = "OneDimensionalFailure"
    TRUNCATED = "Truncated"


class InequalityViolation(QStateError):
    pass


@dataclass(eq=False)
class StageRecord:
    index: int
    dim: int
    multiplicity: int
    confidence: float
    failure_probability: float
    realization: StageRealization

    @property
    def sset(self) -> SymmetricSet:
        return self.realization.sset

    @property
    def success_probability(self) -> float:
        return 1.0 - self.failure_probability


@dataclass(eq=False)
class SmcPlan:
    root: SymmetricSet
    stages: list[StageRecord]
    termination: Termination
    p_correct_total: float
    p_inconclusive_total: float
    p_error_total: float
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.root.n

    def truncated(self, n_stages: int) -> "SmcPlan":
        """The same plan stopped after ``n_stages`` (inconclusive afterwards)."""
        if n_stages >= len(self.stages):
            return self
        stages = self.stages[:n_stages]
        p_corr, p_inc, p_err = _totals(stages)
        return dataclasses.replace(
            self,
            stages=stages,
            termination=Termination.TRUNCATED,
            p_correct_total=p_corr,
            p_inconclusive_total=p_inc,
            p_error_total=p_err,
        )

    def summary(self) -> dict:
        return {
            "N": self.n,
            "D": self.root.dim,
            "termination": self.termination.value,
            "stages": [
                {
                    "index": s.index,
                    "dim": s.dim,
                    "multiplicity": s.multiplicity,
                    "confidence": s.confidence,
                    "failure_probability": s.failure_probability,
                }
                for s in self.stages
            ],
            "p_correct_total": self.p_correct_total,
            "p_inconclusive_total": self.p_inconclusive_total,
            "p_error_total": self.p_error_total,
            "diagnostics": list(self.diagnostics),
        }


def _clamp(x: float, eps: float = DEFAULT_TOL.eps_prob) -> float:
    if x < -eps or x > 1 + eps:
        raise QStateError(f"probability {x!r} outside [0, 1] beyond tolerance")
    return min(max(x, 0.0), 1.0)


def _totals(stages: Sequence[StageRecord]) -> tuple[float, float, float]:
    reach = 1.0
    terms = []
    for s in stages:
        terms.append(reach * (1.0 - s.failure_probability) * s.confidence)
        reach *= s.failure_probability
    p_corr = _clamp(math.fsum(terms))
    p_inc = _clamp(reach)
    p_err = _clamp(math.fsum([1.0, -p_corr, -p_inc]))
    return p_corr, p_inc, p_err


def _near_degenerate(sset: SymmetricSet, index: int, tol: Tolerances) -> list[str]:
    groups = [g for g, _ in coefficient_profile(sset, tol).magnitude_groups]
    gaps = [a - b for a, b in zip(groups, groups[1:])]
    out = []
    for gap in gaps:
        if gap < NEAR_DEGENERATE_FACTOR * tol.eps_group:
            out.append(
                f"stage {index}: magnitude groups separated by only {gap:.3e}; "
                f"stage structure depends on eps_group={tol.eps_group:g}"
            )
    return out


def plan(root: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> SmcPlan:
    stages: list[StageRecord] = []
    diagnostics: list[str] = []
    current = root
    while True:
        index = len(stages) + 1
        prof = coefficient_profile(current, tol)
        real = build_stage(current, tol)
        if prof.n_groups == 1:
            fail = 0.0
        else:
            fail = _clamp(1.0 - current.dim * prof.c_min**2, tol.eps_prob)
        stages.append(StageRecord(index, current.dim, prof.multiplicity_d, current.dim / root.n, fail, real))
        diagnostics += _near_degenerate(current, index, tol)
        nxt = real.failure
        if nxt is None:
            termination = Termination.UNIFORM
            break
        if isinstance(nxt, OneDimensional):
            termination = Termination.ONE_DIMENSIONAL
            break
        current = nxt
    p_corr, p_inc, p_err = _totals(stages)
    return SmcPlan(root, stages, termination, p_corr, p_inc, p_err, diagnostics)


def closed_form_totals(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Totals straight from the sorted squared magnitudes, without recursion.

    Writing the distinct squared magnitudes as ``g_1 < g_2 < ...`` and ``D_s``
    for the number of modes with ``|c|^2 >= g_s``, stage ``s`` succeeds with
    joint probability ``D_s (g_s - g_{s-1})`` and confidence ``D_s / N``.
    """
    mags = np.sort(np.abs(np.asarray(sset.coefficients)))
    anchors, counts = [], []
    for m in mags:
        if anchors and m - anchors[-1] <= tol.eps_group:
            counts[-1] += 1
        else:
            anchors.append(m)
            counts.append(1)
    g = [a * a for a in anchors]
    remaining = len(mags)
    prev = 0.0
    terms, dims = [], []
    p_inc = 0.0
    for level, count in zip(g, counts):
        if remaining == 1:
            p_inc = float(level - prev)
            break
        dims.append(remaining)
        terms.append(remaining * (level - prev) * remaining / sset.n)
        prev = level
        remaining -= count
    return {"p_correct": math.fsum(terms), "p_inconclusive": p_inc, "dims": dims}


def chain_distribution(p: SmcPlan, j: int) -> tuple[np.ndarray, float]:
    """Joint click probabilities ``[stage, k]`` and the final inconclusive probability.

    Computed by pushing ``|psi_j>`` through each stage's coupling unitary,
    ancilla readout and inverse DFT, carrying the failure branch forward.
    """
    vec = state(p.root, j)
    rows = []
    for i, s in enumerate(p.stages):
        if i > 0:
            vec = restrict(vec, p.stages[i - 1].sset, s.sset)
        probs, vec = run_coupled(s.realization, vec)
        rows.append(probs)
    residual = float(np.vdot(vec, vec).real)
    if p.termination is Termination.UNIFORM:
        # last stage has no failure branch; anything left is rounding
        residual = 0.0
    return np.array(rows), residual


# -- comparison with minimum error -------------------------------------------


@dataclass
class MeComparison:
    p_correct_smc: float
    p_correct_me: float
    stage_confidences: list[float]
    me_confidence: float

    @property
    def gap(self) -> float:
        return self.p_correct_me - self.p_correct_smc


def compare_me(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> MeComparison:
    pl = plan(sset, tol)
    me = me_confidence(sset)
    cmp = MeComparison(pl.p_correct_total, me, [s.confidence for s in pl.stages], me)
    if cmp.gap < -tol.eps_prob:
        raise InequalityViolation(
            f"SMC success {cmp.p_correct_smc!r} exceeds ME success {cmp.p_correct_me!r}"
        )
    return cmp


# -- qutrit sweeps ---------------------------------------------------------

SWEEP_COLUMNS = (
    "c0_abs",
    "c1_abs",
    "mc_confidence_stage1",
    "mc_confidence_stage2",
    "me_confidence",
    "p_inconclusive_stage1",
    "p_inconclusive_stage2",
    "p_correct_stage1_only",
    "p_correct_smc",
    "p_correct_me",
    "p_inconclusive_smc",
)


def qutrit_set(c0: float, c1: float, tol: Tolerances = DEFAULT_TOL) -> SymmetricSet:
    """Four symmetric qutrit states with real coefficients ``(c0, c1, c2 >= 0)``."""
    rest = 1.0 - c0 * c0 - c1 * c1
    if rest <= 0:
        raise InvalidSetError(f"|c0|^2 + |c1|^2 = {1 - rest!r} leaves no weight for c2")
    return make_root_set(4, [c0, c1, math.sqrt(rest)], tol)


def sweep_row(c0: float, c1: float, tol: Tolerances = DEFAULT_TOL) -> dict:
    sset = qutrit_set(c0, c1, tol)
    pl = plan(sset, tol)
    if len(pl.stages) > 1:
        p2 = pl.stages[1].failure_probability
    else:
        # no second stage: either nothing fails, or the failure space is a single mode
        p2 = 1.0 if pl.termination is Termination.ONE_DIMENSIONAL else 0.0
    me = me_confidence(sset)
    return {
        "c0_abs": c0,
        "c1_abs": c1,
        "mc_confidence_stage1": pl.stages[0].confidence,
        "mc_confidence_stage2": (sset.dim - 1) / sset.n,
        "me_confidence": me,
        "p_inconclusive_stage1": pl.stages[0].failure_probability,
        "p_inconclusive_stage2": p2,
        "p_correct_stage1_only": pl.truncated(1).p_correct_total,
        "p_correct_smc": pl.p_correct_total,
        "p_correct_me": me,
        "p_inconclusive_smc": pl.p_inconclusive_total,
    }


def sweep_qutrit(grid: Iterable[tuple[float, float]], tol: Tolerances = DEFAULT_TOL):
    """Rows for each feasible ``(|c0|, |c1|)`` point, plus the skipped points.

    Skipped entries are ``(c0, c1, reason)``.
    """
    rows, skipped = [], []
    for c0, c1 in grid:
        c0, c1 = float(c0), float(c1)
        try:
            rows.append(sweep_row(c0, c1, tol))
        except InvalidSetError as exc:
            skipped.append((c0, c1, str(exc)))
    return rows, skipped


def parse_axis(spec: str) -> np.ndarray:
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ParseError(f"axis spec must look like lo:hi:count, got {spec!r}") from exc
    if n < 1:
        raise ParseError(f"axis count must be positive, got {n}")
    return np.linspace(lo, hi, n)


def parse_grid(spec: str) -> list[tuple[float, float]]:
    """``"lo:hi:n"`` (both axes) or ``"lo:hi:n,lo:hi:n"`` for (|c0|, |c1|)."""
    parts = spec.split(",")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ParseError(f"grid spec must have one or two axes, got {spec!r}")
    a0, a1 = parse_axis(parts[0]), parse_axis(parts[1])
    return [(x, y) for x in a0 for y in a1]


def fmt(x: float) -> str:
    return f"{x:.12g}"


def rows_to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([fmt(r[c]) for c in SWEEP_COLUMNS])
    return buf.getvalue()
