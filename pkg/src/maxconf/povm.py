"""Maximum-confidence and minimum-error measurements.

The general construction works for any finite set of pure states with
explicit outcome weights. The symmetric specialisation fixes the weight at
``c_min**2 / N``, the largest value compatible with a positive inconclusive
element, which also minimises the inconclusive probability.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import (
    DEFAULT_TOL,
    DimensionError,
    ParseError,
    QStateError,
    Tolerances,
    as_matrix,
    as_vector,
    is_hermitian,
    max_abs,
    min_eigenvalue,
    projector,
)
from .symmetric import SymmetricSet, coefficient_profile, prior_density, state


class SupportError(QStateError):
    """A state has weight outside the support of the prior density."""


class Strategy(str, enum.Enum):
    MAX_CONFIDENCE = "MaxConfidence"
    MIN_ERROR = "MinError"


@dataclass(eq=False)
class Povm:
    dim: int
    elements: list[np.ndarray]
    inconclusive: np.ndarray | None = None

    def all_elements(self) -> list[np.ndarray]:
        extra = [] if self.inconclusive is None else [self.inconclusive]
        return list(self.elements) + extra

    def total(self) -> np.ndarray:
        return sum(self.all_elements(), np.zeros((self.dim, self.dim), dtype=complex))

    def probabilities(self, rho) -> np.ndarray:
        """Outcome probabilities ``Tr(Pi_k rho)``; the inconclusive one, if any, last."""
        rho = as_matrix(rho)
        return np.array([np.trace(e @ rho).real for e in self.all_elements()])


@dataclass
class DesignReport:
    strategy: Strategy
    confidence_per_outcome: list[float]
    inconclusive_probability: float
    notes: list[str] = field(default_factory=list)

    @property
    def success_probability(self) -> float:
        return 1.0 - self.inconclusive_probability

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "confidence_per_outcome": list(self.confidence_per_outcome),
            "inconclusive_probability": self.inconclusive_probability,
            "success_probability": self.success_probability,
            "notes": list(self.notes),
        }


# -- general pure-state construction ---------------------------------------


def _prior(states, priors):
    vecs = [as_vector(s) for s in states]
    dims = {v.size for v in vecs}
    if len(dims) != 1:
        raise DimensionError(f"states have different dimensions {sorted(dims)}")
    p = np.asarray(priors, dtype=float)
    if p.shape != (len(vecs),):
        raise DimensionError("one prior per state is required")
    if np.any(p < 0) or not math.isclose(float(p.sum()), 1.0, abs_tol=1e-12):
        raise QStateError(f"priors must be nonnegative and sum to 1, got {p.tolist()}")
    rho = sum(pi * projector(v) for pi, v in zip(p, vecs))
    return vecs, p, rho


def support_inverse(rho, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Pseudo-inverse of a density matrix and the projector onto its support.

    Eigenvalues at or below ``eps_psd`` are treated as outside the support.
    """
    w, v = np.linalg.eigh(as_matrix(rho))
    keep = w > tol.eps_psd
    vk = v[:, keep]
    inv = (vk / w[keep]) @ vk.conj().T
    return inv, vk @ vk.conj().T


def _check_support(vecs, proj, tol):
    for i, v in enumerate(vecs):
        leak = np.linalg.norm(v - proj @ v)
        if leak > math.sqrt(tol.eps_psd):
            raise SupportError(f"state {i} has weight {leak:.3e} outside the support of rho")


def mc_element_general(
    states: Sequence, priors: Sequence[float], j: int, weight: float, tol: Tolerances = DEFAULT_TOL
) -> np.ndarray:
    """``weight * rho^-1 rho_j rho^-1`` with ``rho^-1`` restricted to supp(rho)."""
    if not weight > 0:
        raise QStateError(f"weight must be positive, got {weight!r}")
    vecs, _, rho = _prior(states, priors)
    inv, proj = support_inverse(rho, tol)
    _check_support(vecs, proj, tol)
    x = inv @ vecs[j]
    return weight * np.outer(x, x.conj())


def max_confidence(states: Sequence, priors: Sequence[float], j: int, tol: Tolerances = DEFAULT_TOL) -> float:
    vecs, p, rho = _prior(states, priors)
    inv, proj = support_inverse(rho, tol)
    _check_support(vecs, proj, tol)
    value = float(p[j] * np.vdot(vecs[j], inv @ vecs[j]).real)
    return _clamp_prob(value, tol)


def confidence(element, states: Sequence, priors: Sequence[float], j: int) -> float:
    """Posterior ``p_j Tr(Pi rho_j) / Tr(Pi rho)`` for a given POVM element."""
    vecs, p, rho = _prior(states, priors)
    e = as_matrix(element)
    num = p[j] * np.vdot(vecs[j], e @ vecs[j]).real
    den = np.trace(e @ rho).real
    if den <= 0:
        raise QStateError("outcome has zero total probability; confidence undefined")
    return float(num / den)


def _clamp_prob(x: float, tol: Tolerances) -> float:
    if x < -tol.eps_prob or x > 1 + tol.eps_prob:
        raise QStateError(f"probability {x!r} outside [0, 1] beyond tolerance")
    return min(max(x, 0.0), 1.0)


# -- symmetric equiprobable sets ---------------------------------------------


def reciprocal_state(sset: SymmetricSet, j: int) -> np.ndarray:
    return state(sset, j) / np.abs(sset.coefficients) ** 2


def mc_povm_symmetric(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> tuple[Povm, DesignReport]:
    prof = coefficient_profile(sset, tol)
    n, d = sset.n, sset.dim
    c2 = sset.magnitudes**2
    a = prof.c_min**2 / n
    elements = [a * projector(reciprocal_state(sset, j)) for j in range(n)]
    notes = []
    diag = 1.0 - prof.c_min**2 / c2
    # magnitudes equal within eps_group but not exactly still need the tiny
    # inconclusive element, otherwise completeness is off by ~eps_group
    if diag.max() <= tol.eps_unitary:
        inconclusive = None
        p_fail = 0.0
    else:
        inconclusive = np.diag(diag).astype(complex)
        p_fail = _clamp_prob(1.0 - d * prof.c_min**2, tol)
    if prof.n_groups == 1:
        notes.append("MC = ME, no inconclusive element")
    report = DesignReport(Strategy.MAX_CONFIDENCE, [d / n] * n, p_fail, notes)
    return Povm(d, elements, inconclusive), report


def me_states(sset: SymmetricSet) -> list[np.ndarray]:
    phases = np.exp(1j * np.angle(sset.coefficients))
    m = np.asarray(sset.exponents)
    return [
        phases * np.exp(2j * np.pi * ((j * m) % sset.n) / sset.n) / math.sqrt(sset.dim)
        for j in range(sset.n)
    ]


def me_povm(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> tuple[Povm, DesignReport]:
    """Square-root measurement, the minimum-error POVM for these sets."""
    n, d = sset.n, sset.dim
    elements = [(d / n) * projector(mu) for mu in me_states(sset)]
    conf = _clamp_prob(me_confidence(sset), tol)
    report = DesignReport(Strategy.MIN_ERROR, [conf] * n, 0.0)
    return Povm(d, elements, None), report


def me_confidence(sset: SymmetricSet) -> float:
    return math.fsum(sset.magnitudes) ** 2 / sset.n


def povm_confidences(povm: Povm, sset: SymmetricSet) -> list[float]:
    """Posterior confidence of each conclusive outcome, evaluated from the matrices."""
    rho = prior_density(sset)
    out = []
    for j, e in enumerate(povm.elements):
        psi = state(sset, j)
        num = np.vdot(psi, e @ psi).real / sset.n
        out.append(float(num / np.trace(e @ rho).real))
    return out


# -- validation ------------------------------------------------------------


@dataclass
class Violation:
    kind: str  # "psd", "hermitian", "completeness", "shape"
    index: int | None
    magnitude: float

    def __str__(self) -> str:
        where = "" if self.index is None else f" (element {self.index})"
        return f"{self.kind}{where}: {self.magnitude:.3e}"


@dataclass
class ValidationReport:
    violations: list[Violation]
    completeness_error: float
    min_eigenvalues: list[float]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_povm(povm: Povm, tol: Tolerances = DEFAULT_TOL) -> ValidationReport:
    violations: list[Violation] = []
    mins: list[float] = []
    for i, e in enumerate(povm.all_elements()):
        e = np.asarray(e)
        if e.shape != (povm.dim, povm.dim):
            violations.append(Violation("shape", i, float("nan")))
            mins.append(float("nan"))
            continue
        if not is_hermitian(e, tol):
            violations.append(Violation("hermitian", i, max_abs(e - e.conj().T)))
        lam = min_eigenvalue(e)
        mins.append(lam)
        if lam < -tol.eps_psd:
            violations.append(Violation("psd", i, -lam))
    err = max_abs(povm.total() - np.eye(povm.dim)) if not any(v.kind == "shape" for v in violations) else float("nan")
    if not err <= tol.eps_unitary:
        violations.append(Violation("completeness", None, err))
    return ValidationReport(violations, err, mins)


# -- serialization ---------------------------------------------------------


def _fmt(x: float, digits: int | None):
    return float(x) if digits is None else float(f"{x:.{digits}g}")


def matrix_to_list(m, digits: int | None = None) -> list:
    a = np.asarray(m, dtype=complex)
    return [[[_fmt(z.real, digits), _fmt(z.imag, digits)] for z in row] for row in a]


def matrix_from_list(rows) -> np.ndarray:
    try:
        a = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"matrix must be rows of [re, im] pairs: {exc}") from exc
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParseError(f"matrix must be square, got shape {a.shape}")
    return a


def povm_to_dict(povm: Povm, digits: int | None = None) -> dict:
    return {
        "dim": povm.dim,
        "elements": [matrix_to_list(e, digits) for e in povm.elements],
        "inconclusive": None if povm.inconclusive is None else matrix_to_list(povm.inconclusive, digits),
    }


def povm_from_dict(doc: dict) -> Povm:
    if not isinstance(doc, dict) or "dim" not in doc or "elements" not in doc:
        raise ParseError("POVM document needs 'dim' and 'elements'")
    elements = [matrix_from_list(e) for e in doc["elements"]]
    inc = doc.get("inconclusive")
    return Povm(int(doc["dim"]), elements, None if inc is None else matrix_from_list(inc))


def dumps_povm(povm: Povm, digits: int | None = None) -> str:
    return json.dumps(povm_to_dict(povm, digits))


def loads_povm(text: str) -> Povm:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    return povm_from_dict(doc)

