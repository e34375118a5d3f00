"""Equiprobable symmetric pure-state ensembles.

A set of ``N`` states ``|psi_j> = sum_k c_k exp(2*pi*i*j*m_k/N) |k>`` is stored
as the symmetry order ``N``, the exponents ``m_k`` and the nonzero
coefficients ``c_k``. The root set uses ``m_k = k``; sets obtained after an
inconclusive outcome keep a subset of the original exponents, together with
the position each mode occupies in the ``N``-dimensional extended space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import DEFAULT_TOL, ParseError, QStateError, Tolerances


class InvalidSetError(QStateError):
    pass


@dataclass(frozen=True, eq=False)
class SymmetricSet:
    n: int
    exponents: tuple[int, ...]
    coefficients: np.ndarray
    embed_positions: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.exponents)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coefficients)

    @property
    def c_min(self) -> float:
        return float(self.magnitudes.min())

    def is_uniform(self, tol: Tolerances = DEFAULT_TOL) -> bool:
        return coefficient_profile(self, tol).n_groups == 1

    def state(self, j: int) -> np.ndarray:
        return state(self, j)

    def __repr__(self) -> str:
        coeffs = ", ".join(f"{c:.6g}" for c in self.coefficients)
        return f"SymmetricSet(n={self.n}, exponents={self.exponents}, coefficients=[{coeffs}])"


@dataclass(frozen=True)
class CoefficientProfile:
    c_min: float
    multiplicity_d: int
    magnitude_groups: tuple[tuple[float, int], ...]  # (magnitude, count), descending
    min_modes: tuple[int, ...]  # indices of the modes in the smallest group

    @property
    def n_groups(self) -> int:
        return len(self.magnitude_groups)


def _validate(n, exponents, coefficients, embed_positions, tol):
    if int(n) != n or n < 1:
        raise InvalidSetError(f"symmetry order must be a positive integer, got {n!r}")
    d = len(coefficients)
    if d < 1 or d > n:
        raise InvalidSetError(f"need 1 <= D <= N, got D={d}, N={n}")
    if len(exponents) != d or len(embed_positions) != d:
        raise InvalidSetError("exponents and embed positions must match the coefficients")
    for name, seq in (("exponents", exponents), ("embed positions", embed_positions)):
        if any(int(m) != m or not 0 <= m < n for m in seq):
            raise InvalidSetError(f"{name} must be integers in 0..{n - 1}, got {list(seq)}")
        if len(set(seq)) != d:
            raise InvalidSetError(f"{name} must be pairwise distinct, got {list(seq)}")
    mags = np.abs(coefficients)
    if np.any(mags <= tol.eps_group):
        raise InvalidSetError(f"all coefficients must be nonzero, got magnitudes {mags.tolist()}")
    norm2 = float(np.sum(mags**2))
    if abs(norm2 - 1.0) > tol.eps_norm:
        raise InvalidSetError(f"coefficients are not normalized (sum |c|^2 = {norm2!r})")


def make_set(
    n: int,
    coefficients: Sequence[complex],
    exponents: Sequence[int] | None = None,
    embed_positions: Sequence[int] | None = None,
    tol: Tolerances = DEFAULT_TOL,
) -> SymmetricSet:
    """Build a set with explicit exponents (defaults to ``0..D-1``)."""
    c = np.asarray(coefficients, dtype=complex).ravel()
    if exponents is None:
        exponents = range(c.size)
    exps = tuple(int(m) for m in exponents)
    pos = exps if embed_positions is None else tuple(int(p) for p in embed_positions)
    _validate(n, exps, c, pos, tol)
    c.setflags(write=False)
    return SymmetricSet(int(n), exps, c, pos)


def make_root_set(n: int, coefficients: Sequence[complex], tol: Tolerances = DEFAULT_TOL) -> SymmetricSet:
    return make_set(n, coefficients, None, None, tol)


def state(sset: SymmetricSet, j: int) -> np.ndarray:
    if int(j) != j or not 0 <= j < sset.n:
        raise InvalidSetError(f"state index must be in 0..{sset.n - 1}, got {j!r}")
    m = np.asarray(sset.exponents)
    return sset.coefficients * np.exp(2j * np.pi * ((int(j) * m) % sset.n) / sset.n)


def states(sset: SymmetricSet) -> list[np.ndarray]:
    return [state(sset, j) for j in range(sset.n)]


def generator_unitary(sset: SymmetricSet) -> np.ndarray:
    m = np.asarray(sset.exponents)
    return np.diag(np.exp(2j * np.pi * m / sset.n))


def prior_density(sset: SymmetricSet) -> np.ndarray:
    """Diagonal form ``diag(|c_k|^2)``; valid because exponents are distinct mod N."""
    return np.diag(sset.magnitudes**2).astype(complex)


def prior_density_explicit(sset: SymmetricSet) -> np.ndarray:
    rho = np.zeros((sset.dim, sset.dim), dtype=complex)
    for psi in states(sset):
        rho += np.outer(psi, psi.conj())
    return rho / sset.n


def coefficient_profile(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> CoefficientProfile:
    """Group coefficient magnitudes with absolute tolerance ``eps_group``.

    Groups are formed in ascending order, each anchored at its smallest
    member, so a long run of almost-equal values cannot drift into one group.
    """
    mags = sset.magnitudes
    order = np.argsort(mags, kind="stable")
    groups: list[list[int]] = []
    for idx in order:
        if groups and mags[idx] - mags[groups[-1][0]] <= tol.eps_group:
            groups[-1].append(int(idx))
        else:
            groups.append([int(idx)])
    summary = tuple((float(mags[g[0]]), len(g)) for g in reversed(groups))
    return CoefficientProfile(
        c_min=float(mags[groups[0][0]]),
        multiplicity_d=len(groups[0]),
        magnitude_groups=summary,
        min_modes=tuple(sorted(groups[0])),
    )


# -- serialization ---------------------------------------------------------


def set_to_dict(sset: SymmetricSet) -> dict:
    return {
        "N": sset.n,
        "coefficients": [{"re": float(c.real), "im": float(c.imag)} for c in sset.coefficients],
        "exponents": list(sset.exponents),
        "embed_positions": list(sset.embed_positions),
    }


def _parse_complex(item) -> complex:
    if isinstance(item, dict):
        extra = set(item) - {"re", "im"}
        if extra or "re" not in item:
            raise ParseError(f"coefficient must look like {{'re': x, 'im': y}}, got {item!r}")
        return complex(float(item["re"]), float(item.get("im", 0.0)))
    if isinstance(item, (int, float)) and not isinstance(item, bool):
        return complex(item)
    raise ParseError(f"cannot read coefficient {item!r}")


def set_from_dict(doc: dict, tol: Tolerances = DEFAULT_TOL) -> SymmetricSet:
    if not isinstance(doc, dict):
        raise ParseError("set description must be a JSON object")
    missing = {"N", "coefficients"} - set(doc)
    if missing:
        raise ParseError(f"set description is missing {sorted(missing)}")
    unknown = set(doc) - {"N", "coefficients", "exponents", "embed_positions", "comment"}
    if unknown:
        raise ParseError(f"unknown fields in set description: {sorted(unknown)}")
    n = doc["N"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ParseError(f"N must be an integer, got {n!r}")
    if not isinstance(doc["coefficients"], list):
        raise ParseError("coefficients must be a list")
    coeffs = [_parse_complex(c) for c in doc["coefficients"]]
    return make_set(n, coeffs, doc.get("exponents"), doc.get("embed_positions"), tol)


def dumps_set(sset: SymmetricSet) -> str:
    return json.dumps(set_to_dict(sset), indent=2)


def loads_set(text: str, tol: Tolerances = DEFAULT_TOL) -> SymmetricSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    return set_from_dict(doc, tol)
