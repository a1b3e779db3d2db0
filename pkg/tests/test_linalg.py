import math

import numpy as np
import pytest

from sisio.linalg import eigvalsh, jacobi_eigh, lambda_max, lambda_min, pinv, rank, spectral_norm


def eig2_closed_form(M):
    a, b, d = M[0, 0], M[0, 1], M[1, 1]
    mid, rad = 0.5 * (a + d), math.hypot(0.5 * (a - d), b)
    return np.array([mid - rad, mid + rad])


def eig3_closed_form(M):
    """Trigonometric solution of the characteristic cubic of a symmetric 3x3 matrix."""
    p1 = M[0, 1] ** 2 + M[0, 2] ** 2 + M[1, 2] ** 2
    q = np.trace(M) / 3.0
    if p1 == 0:
        return np.sort(np.diag(M))
    p2 = sum((M[i, i] - q) ** 2 for i in range(3)) + 2 * p1
    p = math.sqrt(p2 / 6.0)
    B = (M - q * np.eye(3)) / p
    r = np.linalg.det(B) / 2.0
    phi = math.acos(min(1.0, max(-1.0, r))) / 3.0
    e1 = q + 2 * p * math.cos(phi)
    e3 = q + 2 * p * math.cos(phi + 2 * math.pi / 3)
    return np.sort([e1, 3 * q - e1 - e3, e3])


def random_symmetric(rng, n):
    A = rng.uniform(-5, 5, (n, n))
    return 0.5 * (A + A.T)


def test_eigenvalues_match_characteristic_polynomial(rng):
    for _ in range(500):
        M = random_symmetric(rng, 2)
        np.testing.assert_allclose(eigvalsh(M), eig2_closed_form(M), atol=1e-8)
        M = random_symmetric(rng, 3)
        np.testing.assert_allclose(eigvalsh(M), eig3_closed_form(M), atol=1e-8)


def test_eigenvectors_diagonalize(rng):
    for n in (1, 2, 4, 7, 12):
        M = random_symmetric(rng, n)
        w, V = jacobi_eigh(M)
        np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
        np.testing.assert_allclose(V @ np.diag(w) @ V.T, M, atol=1e-10)
        assert np.all(np.diff(w) >= 0)


def test_asymmetric_input_is_symmetrized():
    w = eigvalsh([[1.0, 2.0], [0.0, 1.0]])
    np.testing.assert_allclose(w, [0.0, 2.0], atol=1e-14)


def test_tiny_and_huge_scales(rng):
    for scale in (1e-200, 1e-20, 1e20, 1e200):
        M = random_symmetric(rng, 3) * scale
        np.testing.assert_allclose(eigvalsh(M) / scale, eig3_closed_form(M / scale), atol=1e-8)


def test_denormal_off_diagonal():
    w = eigvalsh([[1.0, 1e-310], [1e-310, 2.0]])
    np.testing.assert_array_equal(w, [1.0, 2.0])


def test_rejects_non_square():
    with pytest.raises(ValueError):
        jacobi_eigh(np.zeros((2, 3)))


def test_extreme_eigenvalues():
    M = np.diag([3.0, -1.0, 0.5])
    assert lambda_max(M) == 3.0 and lambda_min(M) == -1.0


def test_spectral_norm_and_rank():
    A = np.array([[3.0, 0.0], [4.0, 0.0]])
    assert spectral_norm(A) == pytest.approx(5.0, rel=1e-14)
    assert spectral_norm(np.zeros((2, 3))) == 0.0
    assert rank(A) == 1
    H = np.array([[-0.1, 0.3], [0.5, -0.7]])
    np.testing.assert_allclose(pinv(H) @ H, np.eye(2), atol=1e-12)
