"""Dense complex linear-algebra helpers shared by every other module.

Vectors and operators are plain ``numpy`` arrays of dtype ``complex128``.
Tensor products use system-major / ancilla-minor ordering, i.e.
``tensor(a, b)[i * nb + k, j * nb + l] == a[i, j] * b[k, l]``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np


class QStateError(ValueError):
    """Base class for domain errors raised by this package."""


class DimensionError(QStateError):
    pass


class ParseError(QStateError):
    """Malformed input document (as opposed to well-formed but invalid data)."""


class NotHermitianError(QStateError):
    """Raised when a PSD check is requested on a non-Hermitian matrix."""


@dataclass(frozen=True)
class Tolerances:
    eps_norm: float = 1e-10
    eps_herm: float = 1e-10
    eps_psd: float = 1e-10
    eps_unitary: float = 1e-10
    eps_prob: float = 1e-10
    eps_group: float = 1e-9

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v >= 0:
                raise QStateError(f"tolerance {f.name} must be nonnegative, got {v!r}")

    def override(self, **kwargs) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(kwargs) - known
        if bad:
            raise QStateError(f"unknown tolerance(s): {sorted(bad)}")
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update({k: float(v) for k, v in kwargs.items()})
        return Tolerances(**vals)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_TOL = Tolerances()


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"expected a nonempty square matrix, got shape {a.shape}")
    return a


def as_vector(v) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    if a.ndim != 1 or a.size == 0:
        raise DimensionError(f"expected a nonempty vector, got shape {a.shape}")
    return a


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT with entries ``exp(2*pi*i*k*l/n) / sqrt(n)``."""
    if int(n) != n or n < 1:
        raise DimensionError(f"DFT order must be a positive integer, got {n!r}")
    n = int(n)
    k = np.arange(n)
    # reduce k*l mod n before the exponential so phases stay exact for large k*l
    return np.exp(2j * np.pi * (np.outer(k, k) % n) / n) / np.sqrt(n)


def inverse_dft_matrix(n: int) -> np.ndarray:
    return dft_matrix(n).conj().T


def dagger(m) -> np.ndarray:
    return np.conjugate(np.asarray(m)).T


def max_abs(m) -> float:
    a = np.asarray(m)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(m, tol: Tolerances = DEFAULT_TOL) -> bool:
    a = as_matrix(m)
    return max_abs(a - a.conj().T) <= tol.eps_herm


def is_unitary(m, tol: Tolerances = DEFAULT_TOL) -> bool:
    a = as_matrix(m)
    return max_abs(a.conj().T @ a - np.eye(a.shape[0])) <= tol.eps_unitary


def min_eigenvalue(m) -> float:
    a = as_matrix(m)
    # symmetrize so eigvalsh sees an exactly Hermitian input
    return float(np.linalg.eigvalsh((a + a.conj().T) / 2)[0])


def check_positive(m, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff the Hermitian matrix ``m`` has no eigenvalue below ``-eps_psd``.

    Raises NotHermitianError for non-Hermitian input, which is a structural
    problem and not the same thing as failing positivity.
    """
    a = as_matrix(m)
    if not is_hermitian(a, tol):
        raise NotHermitianError(
            f"matrix is not Hermitian (deviation {max_abs(a - a.conj().T):.3e})"
        )
    return min_eigenvalue(a) >= -tol.eps_psd


def apply(m, v) -> np.ndarray:
    a = as_matrix(m)
    x = as_vector(v)
    if a.shape[1] != x.shape[0]:
        raise DimensionError(f"cannot apply {a.shape} operator to vector of length {x.shape[0]}")
    return a @ x


def tensor(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def projector(v) -> np.ndarray:
    x = as_vector(v)
    return np.outer(x, x.conj())


def normalize(v, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    x = as_vector(v)
    nrm = np.linalg.norm(x)
    if nrm <= tol.eps_norm:
        raise QStateError("cannot normalize a (near) zero vector")
    return x / nrm


def embed(v, positions, n: int) -> np.ndarray:
    """Place the entries of ``v`` at ``positions`` of an ``n``-dim zero vector."""
    x = as_vector(v)
    if len(positions) != x.size:
        raise DimensionError("one position per vector entry is required")
    out = np.zeros(n, dtype=complex)
    out[list(positions)] = x
    return out
