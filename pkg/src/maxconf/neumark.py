"""Physical realization of one maximum-confidence stage.

A stage is a two-outcome measurement implemented by coupling the system to a
qubit ancilla and reading the ancilla, followed (on success) by an inverse DFT
on an ``N``-dimensional direct-sum extension and a projective readout.

Ancilla conventions: ``|0>_a`` is success, ``|1>_a`` is failure, and the
coupling is ``A_s (x) I - A_f (x) (i sigma_y)`` with
``i sigma_y = |0><1| - |1><0|``, so ``|psi>|0> -> A_s|psi>|0> + A_f|psi>|1>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    DEFAULT_TOL,
    QStateError,
    Tolerances,
    as_vector,
    embed,
    inverse_dft_matrix,
    is_unitary,
    max_abs,
    tensor,
)
from .symmetric import SymmetricSet, coefficient_profile, make_set, state

I_SIGMA_Y = np.array([[0, 1], [-1, 0]], dtype=complex)


class ContractError(QStateError):
    pass


@dataclass(eq=False)
class TwoOutcomeRealization:
    a_success: np.ndarray
    a_fail: np.ndarray
    phase_removal: np.ndarray
    coupling: np.ndarray


@dataclass(eq=False)
class ExtendedProjective:
    order: int
    positions: tuple[int, ...]
    inverse_dft: np.ndarray
    leakage: np.ndarray  # beta_k for k = 0..N-1; beta_0 = sqrt(D'/N)
    outcome_probabilities: np.ndarray  # [j, k] = P(k | u_j)


@dataclass(frozen=True, eq=False)
class OneDimensional:
    """Failure space is a single mode; the N failure states coincide up to phase."""

    sset: SymmetricSet


@dataclass
class Branch:
    probability: float
    state: np.ndarray | None


@dataclass(eq=False)
class StageRealization:
    sset: SymmetricSet
    two_outcome: TwoOutcomeRealization
    success_states: list[np.ndarray]
    failure: SymmetricSet | OneDimensional | None
    success_probability: float
    conclusive: ExtendedProjective


def effect_operators(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> TwoOutcomeRealization:
    mags = sset.magnitudes
    c_min = mags.min()
    w = np.diag(np.exp(-1j * np.angle(sset.coefficients)))
    s = c_min / mags
    f = np.sqrt(np.clip(1.0 - s**2, 0.0, None))
    a_s = w @ np.diag(s)
    a_f = w @ np.diag(f)
    coupling = tensor(a_s, np.eye(2)) - tensor(a_f, I_SIGMA_Y)
    if not is_unitary(coupling, tol):
        raise ContractError("system-ancilla coupling is not unitary")
    return TwoOutcomeRealization(a_s, a_f, w, coupling)


def apply_stage(real: TwoOutcomeRealization, sset: SymmetricSet, j: int, tol: Tolerances = DEFAULT_TOL):
    """Success and failure branches for input ``|psi_j>``.

    Each branch is ``(probability, normalized post-measurement state)``; a
    branch of zero probability carries ``state=None``.
    """
    psi = state(sset, j)
    out = []
    for op in (real.a_success, real.a_fail):
        v = op @ psi
        p = float(np.vdot(v, v).real)
        out.append(Branch(p, v / math.sqrt(p) if p > tol.eps_prob else None))
    return out[0], out[1]


def failure_descendant(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL):
    """The set reached after an inconclusive outcome.

    Returns None when all magnitudes are equal (no inconclusive outcome),
    OneDimensional when a single mode survives, else a SymmetricSet that keeps
    the original exponents and embed positions of the surviving modes.
    """
    prof = coefficient_profile(sset, tol)
    if prof.n_groups == 1:
        return None
    keep = [k for k in range(sset.dim) if k not in prof.min_modes]
    weights = sset.magnitudes[keep] ** 2 - prof.c_min**2
    coeffs = np.sqrt(weights / weights.sum())
    exps = [sset.exponents[k] for k in keep]
    pos = [sset.embed_positions[k] for k in keep]
    child = make_set(sset.n, coeffs, exps, pos, tol)
    return OneDimensional(child) if len(keep) == 1 else child


def leakage_amplitudes(positions: Sequence[int], order: int) -> np.ndarray:
    pos = np.asarray(positions)
    k = np.arange(order)
    return np.exp(2j * np.pi * np.outer(k, pos) / order).sum(axis=1) / math.sqrt(order * len(pos))


def conclusive_measurement(
    success_states: Sequence, positions: Sequence[int], order: int, tol: Tolerances = DEFAULT_TOL
) -> ExtendedProjective:
    """Inverse-DFT projective measurement on the ``order``-dim extension."""
    positions = tuple(int(p) for p in positions)
    dprime = len(positions)
    finv = inverse_dft_matrix(order)
    rows = []
    for j, u in enumerate(success_states):
        u = as_vector(u)
        if u.size != dprime:
            raise ContractError(f"success state {j} has {u.size} entries for {dprime} positions")
        dev = max_abs(np.abs(u) - 1 / math.sqrt(dprime))
        if dev > tol.eps_norm:
            raise ContractError(f"success state {j} does not have uniform magnitudes (deviation {dev:.3e})")
        rows.append(np.abs(finv @ embed(u, positions, order)) ** 2)
    return ExtendedProjective(order, positions, finv, leakage_amplitudes(positions, order), np.array(rows))


def build_stage(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> StageRealization:
    real = effect_operators(sset, tol)
    # A_s|psi_j> = c_min * exp(2 pi i j m_k / N) exactly, so the normalized success
    # state needs no division even when D * c_min^2 is below eps_prob
    m = np.asarray(sset.exponents)
    states = [np.exp(2j * np.pi * ((j * m) % sset.n) / sset.n) / math.sqrt(sset.dim) for j in range(sset.n)]
    conclusive = conclusive_measurement(states, sset.embed_positions, sset.n, tol)
    return StageRealization(
        sset=sset,
        two_outcome=real,
        success_states=states,
        failure=failure_descendant(sset, tol),
        success_probability=sset.dim * float(sset.magnitudes.min()) ** 2,
        conclusive=conclusive,
    )


def run_coupled(stage: StageRealization, vec) -> tuple[np.ndarray, np.ndarray]:
    """Push an (unnormalized) system vector through coupling, readout and DFT.

    Returns the joint probabilities of the conclusive outcomes ``k`` (success
    and click ``k``), and the unnormalized failure-branch system vector.
    """
    v = as_vector(vec)
    d = stage.sset.dim
    out = stage.two_outcome.coupling @ tensor(v, np.array([1.0, 0.0]))
    out = out.reshape(d, 2)
    success, fail = out[:, 0], out[:, 1]
    amps = stage.conclusive.inverse_dft @ embed(success, stage.sset.embed_positions, stage.sset.n)
    return np.abs(amps) ** 2, fail


def restrict(vec, parent: SymmetricSet, child: SymmetricSet) -> np.ndarray:
    """Components of a parent-mode vector on the child's modes (matched by exponent)."""
    index = {m: k for k, m in enumerate(parent.exponents)}
    return np.asarray([vec[index[m]] for m in child.exponents], dtype=complex)
