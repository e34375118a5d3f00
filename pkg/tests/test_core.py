import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from maxconf.core import (
    DEFAULT_TOL,
    DimensionError,
    NotHermitianError,
    QStateError,
    Tolerances,
    apply,
    check_positive,
    dft_matrix,
    embed,
    inverse_dft_matrix,
    is_unitary,
    normalize,
    tensor,
)


def test_dft_small_cases():
    np.testing.assert_allclose(dft_matrix(1), [[1]])
    np.testing.assert_allclose(dft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)
    assert abs(dft_matrix(4)[1, 1] - 0.5j) < 1e-15


def test_dft_rejects_zero():
    with pytest.raises(DimensionError):
        dft_matrix(0)


@pytest.mark.parametrize("n", range(1, 17))
def test_dft_unitary(n):
    assert is_unitary(dft_matrix(n))
    np.testing.assert_allclose(inverse_dft_matrix(n) @ dft_matrix(n), np.eye(n), atol=1e-12)


def test_check_positive():
    assert check_positive(np.eye(3))
    assert check_positive(np.diag([0.6, 1 / 3, 0]))
    assert not check_positive(np.diag([1, -1e-3]))


def test_check_positive_structural_error():
    with pytest.raises(NotHermitianError):
        check_positive(np.array([[1, 1], [0, 1]]))


def test_apply():
    np.testing.assert_allclose(apply(np.eye(2), [1, 0]), [1, 0])
    np.testing.assert_allclose(apply(dft_matrix(2), [1, 0]), [2**-0.5, 2**-0.5])
    a, b, c = 0.3, 0.4 - 0.1j, 2.0
    np.testing.assert_allclose(apply(np.diag([1, 1j, -1]), [a, b, c]), [a, 1j * b, -c])
    with pytest.raises(DimensionError):
        apply(np.eye(2), [1, 0, 0])


def test_tensor_examples():
    np.testing.assert_allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_allclose(tensor(np.diag([2, 3]), np.eye(2)), np.diag([2, 2, 3, 3]))
    isy = np.array([[0, 1], [-1, 0]])
    t = tensor(np.eye(2), isy)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    assert t[2 * i + k, 2 * j + l] == (i == j) * isy[k, l]


small = arrays(np.float64, (2, 2), elements=st.floats(-2, 2))


@given(small, small, small)
def test_tensor_associative(a, b, c):
    np.testing.assert_allclose(tensor(tensor(a, b), c), tensor(a, tensor(b, c)), atol=1e-12)


def test_tolerances():
    assert DEFAULT_TOL.eps_prob == 1e-10 and DEFAULT_TOL.eps_group == 1e-9
    t = DEFAULT_TOL.override(eps_psd=1e-9)
    assert t.eps_psd == 1e-9 and t.eps_norm == 1e-10
    with pytest.raises(QStateError):
        DEFAULT_TOL.override(eps_nope=1.0)
    with pytest.raises(QStateError):
        Tolerances(eps_norm=-1.0)


def test_normalize_and_embed():
    np.testing.assert_allclose(normalize([3, 4]), [0.6, 0.8])
    with pytest.raises(QStateError):
        normalize([0, 0])
    np.testing.assert_allclose(embed([1, 2], (3, 0), 4), [2, 0, 0, 1])
