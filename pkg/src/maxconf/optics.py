"""Linear-optical network for the two-stage measurement on four qutrit states.

The qutrit is carried by three spatial paths of one photon, its polarization
is the ancilla (``H`` = success, ``V`` = failure), and each conclusive readout
is an inverse DFT on four paths built from 50:50 beam splitters and phase
shifters in a triangular (Reck) mesh.

Conventions:
  * HWP with fast axis at ``chi`` from horizontal has Jones matrix
    ``[[cos 2chi, sin 2chi], [sin 2chi, -cos 2chi]]`` on ``(H, V)``.
  * PBS transmits ``V`` and reflects ``H``.
  * BS acts on ``(upper, lower)`` paths as ``[[1, i], [i, 1]] / sqrt(2)``.
  * A mesh cell ``T(theta, phi)`` is ``PS(phi)`` on the upper path, BS,
    ``PS(theta)`` on the upper path, BS.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .core import DEFAULT_TOL, ParseError, QStateError, Tolerances, as_matrix, inverse_dft_matrix, is_unitary, max_abs
from .neumark import effect_operators
from .smc import Termination, chain_distribution, plan
from .symmetric import SymmetricSet, coefficient_profile, set_from_dict, set_to_dict

BOXES = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII")
BS_MATRIX = np.array([[1, 1j], [1j, 1]]) / math.sqrt(2)


class UnsupportedInstanceError(QStateError):
    pass


class NotUnitaryError(QStateError):
    pass


def hwp_jones(angle: float) -> np.ndarray:
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


# -- angles ----------------------------------------------------------------


@dataclass(frozen=True)
class CompiledAngles:
    theta: float
    phi: float
    chi0: float
    chi1: float
    chi2: float
    alpha: tuple[float, float]
    beta0: float
    beta1: float
    beta0_by_convention: bool = False


def _real_qutrit(sset: SymmetricSet, tol: Tolerances) -> tuple[float, float, float]:
    if sset.n != 4 or sset.dim != 3 or sset.exponents != (0, 1, 2):
        raise UnsupportedInstanceError(
            f"optical compilation supports four qutrit states with exponents (0, 1, 2), got N={sset.n}, "
            f"exponents={sset.exponents}"
        )
    c = sset.coefficients
    if np.any(np.abs(c.imag) > tol.eps_norm) or np.any(c.real < 0):
        raise UnsupportedInstanceError("optical compilation needs real nonnegative coefficients")
    c0, c1, c2 = (float(x) for x in c.real)
    if c1 - c0 > tol.eps_group or c2 - c1 > tol.eps_group:
        raise UnsupportedInstanceError(f"coefficients must be ordered c2 <= c1 <= c0, got {(c0, c1, c2)}")
    return c0, c1, c2


def compile_angles(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> CompiledAngles:
    c0, c1, c2 = _real_qutrit(sset, tol)
    theta = math.acos(min(c0, 1.0))
    phi = math.atan2(c2, c1)
    alpha = tuple(0.5 * math.acos(min(c2 / cj, 1.0)) for cj in (c0, c1))
    spread = c0 * c0 - c2 * c2
    if spread <= tol.eps_group:
        # all three magnitudes equal: the ratio is 0/0 and stage 2 is never reached
        beta0, conv = math.pi / 4, True
    else:
        ratio = math.sqrt(max(c1 * c1 - c2 * c2, 0.0) / spread)
        beta0, conv = 0.5 * math.acos(min(ratio, 1.0)) + math.pi / 4, False
    return CompiledAngles(
        theta=theta,
        phi=phi,
        chi0=theta / 2,
        chi1=phi / 2 + math.pi / 4,
        chi2=math.pi / 4,
        alpha=alpha,
        beta0=beta0,
        beta1=math.pi / 4,
        beta0_by_convention=conv,
    )


def coupling_diagonals(angles: CompiledAngles) -> tuple[np.ndarray, np.ndarray]:
    """Success/failure amplitudes the box II plates give an H photon in each path."""
    s, f = [], []
    for a in angles.alpha:
        out = hwp_jones(a) @ np.array([1, 0])
        s.append(out[0])
        f.append(out[1])
    # path 2 carries the smallest coefficient and has no plate
    s.append(1.0)
    f.append(0.0)
    return np.array(s, dtype=complex), np.array(f, dtype=complex)


def stage2_diagonals(angles: CompiledAngles) -> tuple[np.ndarray, np.ndarray]:
    """Same for the box V plates acting on a V photon in paths 0 and 1."""
    s, f = [], []
    for b in (angles.beta0, angles.beta1):
        out = hwp_jones(b) @ np.array([0, 1])
        s.append(out[0])
        f.append(out[1])
    return np.array(s, dtype=complex), np.array(f, dtype=complex)


# -- triangular mesh -------------------------------------------------------


def mzi(theta: float, phi: float) -> np.ndarray:
    return BS_MATRIX @ np.diag([np.exp(1j * theta), 1]) @ BS_MATRIX @ np.diag([np.exp(1j * phi), 1])


@dataclass(frozen=True)
class MeshCell:
    upper: int  # acts on modes (upper, upper + 1)
    theta: float
    phi: float


@dataclass(eq=False)
class ReckMesh:
    target: np.ndarray
    layers: list[MeshCell]
    output_phases: np.ndarray

    @property
    def size(self) -> int:
        return self.target.shape[0]

    def matrix(self) -> np.ndarray:
        m = np.eye(self.size, dtype=complex)
        for cell in self.layers:
            t = np.eye(self.size, dtype=complex)
            t[cell.upper : cell.upper + 2, cell.upper : cell.upper + 2] = mzi(cell.theta, cell.phi)
            m = t @ m
        return np.diag(np.exp(1j * self.output_phases)) @ m

    def reconstruction_error(self) -> float:
        return max_abs(self.matrix() - self.target)


def reck_decompose(u, tol: Tolerances = DEFAULT_TOL) -> ReckMesh:
    """Null the lower triangle row by row from the right, ``U T_1^+ ... T_k^+ = D``.

    Then ``U = D T_k ... T_1``; cells are returned in propagation order.
    """
    target = as_matrix(u)
    if not is_unitary(target, tol):
        raise NotUnitaryError("mesh target is not unitary")
    n = target.shape[0]
    v = target.copy()
    cells = []
    for r in range(n - 1, 0, -1):
        for c in range(r):
            a, b = v[r, c], v[r, c + 1]
            if abs(a) < 1e-15:
                continue
            theta = 2 * math.atan2(abs(b), abs(a))
            phi = float(np.angle(a) - np.angle(b) + math.pi) if abs(b) > 0 else 0.0
            t = mzi(theta, phi)
            v[:, c : c + 2] = v[:, c : c + 2] @ t.conj().T
            v[r, c] = 0.0
            cells.append(MeshCell(c, theta, phi))
    phases = np.angle(np.diag(v))
    return ReckMesh(target, cells, phases)


# -- circuit ---------------------------------------------------------------


@dataclass
class Element:
    kind: str  # "HWP", "PBS", "PS", "BS", "DET"
    modes: tuple[str, ...]
    value: float | None = None  # HWP angle or PS phase, radians
    box: str = ""
    exponent: int | None = None  # PS only: adds 2*pi*j*exponent/N for input j
    label: str | None = None  # DET only


@dataclass(eq=False)
class OpticalCircuit:
    sset: SymmetricSet
    angles: CompiledAngles
    elements: list[Element]
    meshes: dict[str, ReckMesh] = field(default_factory=dict)
    stage2_inert: bool = False
    source: str = "in"

    @property
    def n(self) -> int:
        return self.sset.n

    @property
    def detectors(self) -> list[str]:
        return [e.label for e in self.elements if e.kind == "DET"]

    @property
    def modes(self) -> list[str]:
        seen = OrderedDict({self.source: None})
        for e in self.elements:
            for m in e.modes:
                seen.setdefault(m, None)
        return list(seen)

    def groups(self) -> "OrderedDict[str, list[Element]]":
        out = OrderedDict((b, []) for b in BOXES)
        for e in self.elements:
            out[e.box].append(e)
        return out


def mesh_elements(mesh: ReckMesh, ports: Sequence[str], box: str) -> list[Element]:
    out = []
    for cell in mesh.layers:
        up, lo = ports[cell.upper], ports[cell.upper + 1]
        out += [
            Element("PS", (up,), cell.phi, box),
            Element("BS", (up, lo), None, box),
            Element("PS", (up,), cell.theta, box),
            Element("BS", (up, lo), None, box),
        ]
    for port, delta in zip(ports, mesh.output_phases):
        if abs(delta) > 0:
            out.append(Element("PS", (port,), float(delta), box))
    return out


def build_circuit(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> OpticalCircuit:
    ang = compile_angles(sset, tol)
    finv = reck_decompose(inverse_dft_matrix(sset.n), tol)
    el: list[Element] = []

    # I: |H> -> c0|0,H> + c1 e^{i pi j/2}|1,H> + c2 e^{i pi j}|2,H>
    el += [
        Element("HWP", ("in",), ang.chi0, "I"),
        Element("PBS", ("in", "m0", "t"), None, "I"),
        Element("HWP", ("t",), ang.chi1, "I"),
        Element("PBS", ("t", "m1", "m2"), None, "I"),
        Element("HWP", ("m2",), ang.chi2, "I"),
        Element("PS", ("m1",), 0.0, "I", exponent=1),
        Element("PS", ("m2",), 0.0, "I", exponent=2),
    ]
    # II-III: polarization ancilla coupling and readout
    el += [Element("HWP", ("m0",), ang.alpha[0], "II"), Element("HWP", ("m1",), ang.alpha[1], "II")]
    el += [Element("PBS", ("m0", "a0", "b0"), None, "III"), Element("PBS", ("m1", "a1", "b1"), None, "III")]
    # IV: inverse DFT with one vacuum port
    ports1 = ["a0", "a1", "m2", "vac1"]
    el += mesh_elements(finv, ports1, "IV")
    el += [Element("DET", (p,), None, "IV", label=f"stage1:{k}") for k, p in enumerate(ports1)]
    # V-VI: second coupling on the failure paths
    el += [Element("HWP", ("b0",), ang.beta0, "V"), Element("HWP", ("b1",), ang.beta1, "V")]
    el += [Element("PBS", ("b0", "c0", "q"), None, "VI")]
    # VII: inverse DFT with two vacuum ports
    ports2 = ["c0", "b1", "vac2", "vac3"]
    el += mesh_elements(finv, ports2, "VII")
    el += [Element("DET", (p,), None, "VII", label=f"stage2:{k}") for k, p in enumerate(ports2)]
    # VIII
    el += [Element("DET", ("q",), None, "VIII", label="?")]

    inert = coefficient_profile(sset, tol).n_groups == 1
    return OpticalCircuit(sset, ang, el, {"IV": finv, "VII": finv}, inert)


def simulate_network(circuit: OpticalCircuit, j: int) -> "OrderedDict[str, float]":
    """Propagate a single photon prepared as input ``j``; click probability per detector."""
    if not 0 <= j < circuit.n:
        raise QStateError(f"input index must be in 0..{circuit.n - 1}, got {j!r}")
    zero = np.zeros(2, dtype=complex)
    amps: dict[str, np.ndarray] = {circuit.source: np.array([1, 0], dtype=complex)}
    clicks: "OrderedDict[str, float]" = OrderedDict()
    for e in circuit.elements:
        if e.kind == "HWP":
            (m,) = e.modes
            amps[m] = hwp_jones(e.value) @ amps.get(m, zero)
        elif e.kind == "PBS":
            m, refl, trans = e.modes
            v = amps.pop(m, zero)
            amps[refl] = amps.get(refl, zero) + np.array([v[0], 0])
            amps[trans] = amps.get(trans, zero) + np.array([0, v[1]])
        elif e.kind == "PS":
            (m,) = e.modes
            phase = e.value + (2 * math.pi * j * e.exponent / circuit.n if e.exponent else 0.0)
            amps[m] = np.exp(1j * phase) * amps.get(m, zero)
        elif e.kind == "BS":
            up, lo = e.modes
            a, b = amps.get(up, zero), amps.get(lo, zero)
            amps[up] = BS_MATRIX[0, 0] * a + BS_MATRIX[0, 1] * b
            amps[lo] = BS_MATRIX[1, 0] * a + BS_MATRIX[1, 1] * b
        elif e.kind == "DET":
            (m,) = e.modes
            v = amps.pop(m, zero)
            clicks[e.label] = float(np.vdot(v, v).real)
        else:
            raise ParseError(f"unknown element kind {e.kind!r}")
    lost = sum(float(np.vdot(v, v).real) for v in amps.values())
    if lost > DEFAULT_TOL.eps_prob:
        raise QStateError(f"photon amplitude {lost:.3e} never reached a detector")
    return clicks


def abstract_distribution(sset: SymmetricSet, j: int, tol: Tolerances = DEFAULT_TOL) -> "OrderedDict[str, float]":
    """Detector probabilities predicted by the coupled-chain model, same labels as the circuit."""
    p = plan(sset, tol)
    rows, residual = chain_distribution(p, j)
    out: "OrderedDict[str, float]" = OrderedDict()
    for s in (0, 1):
        for k in range(sset.n):
            out[f"stage{s + 1}:{k}"] = float(rows[s, k]) if s < len(rows) else 0.0
    out["?"] = residual if p.termination is not Termination.UNIFORM else 0.0
    return out


# -- serialization ---------------------------------------------------------

CIRCUIT_FORMAT = "maxconf-circuit/1"


def _g12(x: float | None):
    return None if x is None else float(f"{x:.12g}")


def circuit_to_dict(circuit: OpticalCircuit) -> dict:
    a = asdict(circuit.angles)
    angles = {k: ([_g12(x) for x in v] if isinstance(v, tuple) else (v if isinstance(v, bool) else _g12(v))) for k, v in a.items()}
    elements = []
    for e in circuit.elements:
        item = {"kind": e.kind, "modes": list(e.modes), "angle_or_phase": _g12(e.value), "stage_box": e.box}
        if e.exponent is not None:
            item["input_exponent"] = e.exponent
        if e.label is not None:
            item["label"] = e.label
        elements.append(item)
    return {
        "format": CIRCUIT_FORMAT,
        "set": set_to_dict(circuit.sset),
        "angles": angles,
        "stage2_inert": circuit.stage2_inert,
        "source": circuit.source,
        "detectors": circuit.detectors,
        "elements": elements,
    }


def circuit_from_dict(doc: dict, tol: Tolerances = DEFAULT_TOL) -> OpticalCircuit:
    if not isinstance(doc, dict) or doc.get("format") != CIRCUIT_FORMAT:
        raise ParseError(f"not a {CIRCUIT_FORMAT} document")
    try:
        sset = set_from_dict(doc["set"], tol)
        a = dict(doc["angles"])
        a["alpha"] = tuple(a["alpha"])
        angles = CompiledAngles(**a)
        elements = [
            Element(
                kind=e["kind"],
                modes=tuple(e["modes"]),
                value=e.get("angle_or_phase"),
                box=e.get("stage_box", ""),
                exponent=e.get("input_exponent"),
                label=e.get("label"),
            )
            for e in doc["elements"]
        ]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed circuit document: {exc!r}") from exc
    for e in elements:
        if e.kind not in {"HWP", "PBS", "PS", "BS", "DET"}:
            raise ParseError(f"unknown element kind {e.kind!r}")
        if e.box not in BOXES:
            raise ParseError(f"unknown stage box {e.box!r}")
    return OpticalCircuit(sset, angles, elements, {}, bool(doc.get("stage2_inert", False)), doc.get("source", "in"))


def dumps_circuit(circuit: OpticalCircuit) -> str:
    return json.dumps(circuit_to_dict(circuit), indent=2)


def loads_circuit(text: str, tol: Tolerances = DEFAULT_TOL) -> OpticalCircuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    return circuit_from_dict(doc, tol)


def effect_diagonals(sset: SymmetricSet, tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    real = effect_operators(sset, tol)
    return np.diag(real.a_success), np.diag(real.a_fail)
