"""Eigensolver wrapper: validation, exact cases, spectral invariants."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from specdens.errors import InvalidInputError
from specdens.linalg import MAX_SIZE, as_complex_matrix, eigenvalues


def _sorted(vals):
    return np.sort_complex(np.asarray(vals))


def test_diagonal_matrix_returns_diagonal():
    d = [3.0, -1.5 + 2.0j, 0.25j]
    got = _sorted(eigenvalues(np.diag(d)))
    assert np.allclose(got, _sorted(d), rtol=1e-13, atol=1e-14)


def test_nilpotent_matrix_is_all_zeros():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 1] = 7.0
    m[1, 2] = -2.0j
    m[2, 3] = 3.5
    assert np.max(np.abs(eigenvalues(m))) < 1e-8


def test_rotation_block_pair():
    # [[0, -1], [1, 0]] has eigenvalues +-i exactly; sort on the imaginary
    # axis because the computed real parts are roundoff-level
    got = sorted(eigenvalues([[0.0, -1.0], [1.0, 0.0]]), key=lambda v: v.imag)
    assert np.allclose(got, [-1j, 1j], atol=1e-14)


complex_entries = st.complex_numbers(
    max_magnitude=10, allow_nan=False, allow_infinity=False
)


def square(n):
    return hnp.arrays(np.complex128, (n, n), elements=complex_entries)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(square))
def test_trace_and_determinant_invariants(m):
    vals = eigenvalues(m)
    assert np.sum(vals) == pytest.approx(np.trace(m), rel=1e-9, abs=1e-8)
    det = np.linalg.det(m)
    assert np.prod(vals) == pytest.approx(det, rel=1e-8, abs=1e-8)


def _char_poly_leverrier(m):
    """Characteristic polynomial coefficients by the trace recursion.

    Independent of any eigendecomposition: c_0 = 1 and
    c_k = -(1/k) sum_(j<k) c_j tr(M^(k-j)).
    """
    n = m.shape[0]
    powers = [np.eye(n, dtype=complex)]
    for _ in range(n):
        powers.append(powers[-1] @ m)
    traces = [np.trace(p) for p in powers]
    coeffs = [1.0 + 0j]
    for k in range(1, n + 1):
        acc = 0j
        for j in range(k):
            acc += coeffs[j] * traces[k - j]
        coeffs.append(-acc / k)
    return coeffs  # lambda^n + c_1 lambda^(n-1) + ... + c_n


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5).flatmap(square))
def test_eigenvalues_are_char_poly_roots(m):
    coeffs = _char_poly_leverrier(m)
    scale = max(1.0, float(np.max(np.abs(m)))) ** m.shape[0]
    for lam in eigenvalues(m):
        acc = 0j
        for c in coeffs:
            acc = acc * lam + c
        assert abs(acc) < 1e-7 * scale


def test_similarity_invariance():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    q, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    sim = q @ m @ q.conj().T
    assert np.allclose(_sorted(eigenvalues(sim)), _sorted(eigenvalues(m)), atol=1e-10)


def test_rejects_oversized_matrix():
    with pytest.raises(InvalidInputError):
        eigenvalues(np.eye(MAX_SIZE + 1))


def test_max_size_matrix_is_accepted():
    vals = eigenvalues(np.eye(MAX_SIZE))
    assert vals.shape == (MAX_SIZE,)
    assert np.allclose(vals, 1.0)


def test_rejects_bad_shapes_and_values():
    with pytest.raises(InvalidInputError):
        as_complex_matrix([[1.0, 2.0]])
    with pytest.raises(InvalidInputError):
        as_complex_matrix(np.zeros((0, 0)))
    with pytest.raises(InvalidInputError):
        as_complex_matrix([[np.nan, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidInputError):
        as_complex_matrix([[np.inf, 0.0], [0.0, 1.0]])
    with pytest.raises(InvalidInputError):
        as_complex_matrix("not a matrix")
