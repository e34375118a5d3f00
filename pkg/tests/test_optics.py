import json
import math

import numpy as np
import pytest

from maxconf.core import ParseError, dft_matrix, inverse_dft_matrix
from maxconf.neumark import failure_descendant
from maxconf.optics import (
    NotUnitaryError,
    UnsupportedInstanceError,
    abstract_distribution,
    build_circuit,
    circuit_to_dict,
    compile_angles,
    coupling_diagonals,
    dumps_circuit,
    effect_diagonals,
    hwp_jones,
    loads_circuit,
    mzi,
    reck_decompose,
    simulate_network,
    stage2_diagonals,
)
from maxconf.symmetric import make_root_set, make_set

S = math.sqrt


def qset(c0, c1):
    return make_root_set(4, [c0, c1, S(1 - c0 * c0 - c1 * c1)])


EXAMPLE = (S(0.5), S(0.3))
CASES = {
    "example": EXAMPLE,
    "uniform": (1 / S(3), 1 / S(3)),
    "c0_eq_c1": (0.6, 0.6),
    "c1_eq_c2": (S(0.6), S(0.2)),
    "generic": (0.8, 0.5),
    "near_c0_eq_c1": (S(0.5), S(0.5) - 1e-6),
}


def test_example_angles():
    a = compile_angles(qset(*EXAMPLE))
    assert abs(a.theta - math.pi / 4) < 1e-12
    assert abs(a.phi - 0.68472) < 1e-5
    assert abs(a.alpha[0] - 0.44304) < 1e-5 and abs(a.alpha[1] - 0.30774) < 1e-5
    assert abs(a.beta0 - 1.26306) < 1e-5 and a.beta1 == math.pi / 4
    assert a.chi0 == a.theta / 2 and a.chi2 == math.pi / 4
    assert abs(a.chi1 - (a.phi / 2 + math.pi / 4)) < 1e-15


def test_uniform_angles():
    a = compile_angles(qset(*CASES["uniform"]))
    assert a.alpha == (0.0, 0.0) or max(abs(x) for x in a.alpha) < 1e-7
    assert a.beta0_by_convention and a.beta0 == math.pi / 4


@pytest.mark.parametrize("name", CASES)
def test_parametrisation_range(name):
    a = compile_angles(qset(*CASES[name]))
    assert -1e-12 <= a.phi <= math.pi / 4 + 1e-9
    assert 0 <= a.theta <= math.atan(1 / math.cos(a.phi)) + 1e-9


def test_boundaries():
    a = compile_angles(qset(*CASES["c1_eq_c2"]))
    assert abs(a.phi - math.pi / 4) < 1e-12
    a = compile_angles(qset(*CASES["c0_eq_c1"]))
    assert abs(a.theta - math.atan(1 / math.cos(a.phi))) < 1e-12
    assert abs(a.beta0 - math.pi / 4) < 1e-12 and not a.beta0_by_convention


@pytest.mark.parametrize(
    "sset",
    [
        make_root_set(4, [S(0.2), S(0.3), S(0.5)]),
        make_root_set(5, [S(0.5), S(0.3), S(0.2)]),
        make_root_set(4, [S(0.5), 1j * S(0.3), S(0.2)]),
        make_root_set(4, [S(0.6), S(0.4)]),
        make_set(4, [S(0.5), S(0.3), S(0.2)], exponents=[0, 1, 3]),
    ],
)
def test_unsupported_instances(sset):
    with pytest.raises(UnsupportedInstanceError):
        compile_angles(sset)


def test_hwp_is_involution():
    for chi in (0.1, 0.7, 2.0):
        np.testing.assert_allclose(hwp_jones(chi) @ hwp_jones(chi), np.eye(2), atol=1e-15)


def test_mzi_closed_form():
    th, ph = 0.7, 1.9
    s, c = math.sin(th / 2), math.cos(th / 2)
    want = 1j * np.exp(1j * th / 2) * np.array([[np.exp(1j * ph) * s, c], [np.exp(1j * ph) * c, -s]])
    np.testing.assert_allclose(mzi(th, ph), want, atol=1e-15)


def test_reck_identity():
    m = reck_decompose(np.eye(4))
    assert m.layers == [] and np.all(m.output_phases == 0)
    assert m.reconstruction_error() == 0


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_reck_dft(n):
    assert reck_decompose(inverse_dft_matrix(n)).reconstruction_error() <= 1e-9
    assert reck_decompose(dft_matrix(n)).reconstruction_error() <= 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_reck_random(seed):
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    m = reck_decompose(u)
    assert m.reconstruction_error() <= 1e-9
    assert len(m.layers) <= 6


def test_reck_rejects_non_unitary():
    with pytest.raises(NotUnitaryError):
        reck_decompose(np.diag([1, 2]))


def test_circuit_structure():
    c = build_circuit(qset(*EXAMPLE))
    assert len(c.detectors) == 9 and c.detectors[-1] == "?"
    groups = c.groups()
    assert len(groups) == 8 and all(groups.values())
    known = set(c.modes)
    for e in c.elements:
        assert set(e.modes) <= known
    assert not c.stage2_inert
    assert build_circuit(qset(*CASES["uniform"])).stage2_inert
    for mesh in c.meshes.values():
        assert mesh.reconstruction_error() <= 1e-9


@pytest.mark.parametrize("name", CASES)
def test_network_matches_chain(name):
    sset = qset(*CASES[name])
    c = build_circuit(sset)
    for j in range(4):
        got = simulate_network(c, j)
        want = abstract_distribution(sset, j)
        assert list(got) == list(want)
        assert max(abs(got[k] - want[k]) for k in got) <= 1e-10
        assert abs(sum(got.values()) - 1) <= 1e-10


@pytest.mark.parametrize("name", ["example", "generic", "c0_eq_c1"])
def test_detector_structure(name):
    c0, c1 = CASES[name]
    sset = qset(c0, c1)
    c2sq = 1 - c0 * c0 - c1 * c1
    c = build_circuit(sset)
    for j in range(4):
        d = simulate_network(c, j)
        for k in range(4):
            want = 3 * c2sq * (0.75 if k == j else 1 / 12)
            assert abs(d[f"stage1:{k}"] - want) <= 1e-10
        assert abs(d[f"stage2:{(j + 2) % 4}"]) <= 1e-10
        assert abs(d["?"] - (c0 * c0 - c1 * c1)) <= 1e-10


def test_example_detector_values():
    d = simulate_network(build_circuit(qset(*EXAMPLE)), 0)
    assert abs(d["stage1:0"] - 0.45) < 1e-12 and abs(d["?"] - 0.2) < 1e-12


def test_uniform_network():
    c = build_circuit(qset(*CASES["uniform"]))
    for j in range(4):
        d = simulate_network(c, j)
        assert d["?"] < 1e-12
        assert all(d[f"stage2:{k}"] < 1e-12 for k in range(4))


@pytest.mark.parametrize("name", ["example", "generic", "c1_eq_c2"])
def test_hwp_round_trip(name):
    sset = qset(*CASES[name])
    a = compile_angles(sset)
    s, f = coupling_diagonals(a)
    es, ef = effect_diagonals(sset)
    np.testing.assert_allclose(s, es, atol=1e-12)
    np.testing.assert_allclose(f, ef, atol=1e-12)


@pytest.mark.parametrize("name", ["example", "generic", "c0_eq_c1"])
def test_stage2_round_trip(name):
    sset = qset(*CASES[name])
    s, f = stage2_diagonals(compile_angles(sset))
    es, ef = effect_diagonals(failure_descendant(sset))
    np.testing.assert_allclose(s, es, atol=1e-12)
    np.testing.assert_allclose(f, ef, atol=1e-12)


def test_serialisation_round_trip():
    sset = qset(*EXAMPLE)
    c = build_circuit(sset)
    text = dumps_circuit(c)
    back = loads_circuit(text)
    assert dumps_circuit(back) == text
    for j in range(4):
        a, b = simulate_network(c, j), simulate_network(back, j)
        assert max(abs(a[k] - b[k]) for k in a) < 1e-10
    doc = circuit_to_dict(c)
    hwp = [e for e in doc["elements"] if e["kind"] == "HWP"]
    assert all(e["angle_or_phase"] == float(f"{e['angle_or_phase']:.12g}") for e in hwp)
    with pytest.raises(ParseError):
        loads_circuit('{"format": "other"}')
    bad = dict(doc, elements=[dict(doc["elements"][0], kind="LASER")])
    with pytest.raises(ParseError):
        loads_circuit(json.dumps(bad))
