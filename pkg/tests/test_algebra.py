import numpy as np
import pytest

from rpm3.algebra import (
    DEFAULT_Q,
    FMatrix,
    batch_inv,
    field_inv,
    is_prime,
    linear_combination,
    make_rng,
    mat_axpy,
    mat_mul,
    mat_mul_schoolbook,
    random_matrix,
)
from rpm3.errors import DimensionMismatch, ZeroInverse


def ext_euclid_inv(a, q):
    """Independent extended-Euclid inverse, used as the oracle for field_inv."""
    old_r, r = a % q, q
    old_s, s = 1, 0
    while r:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_s, s = s, old_s - quot * s
    assert old_r == 1
    return old_s % q


def test_field_inv_identity():
    assert field_inv(1, 7) == 1
    assert field_inv(1, DEFAULT_Q) == 1


def test_field_inv_small_prime():
    assert field_inv(3, 7) == 5  # 3*5 = 15 = 1 mod 7


def test_field_inv_matches_euclid_oracle():
    assert field_inv(2, DEFAULT_Q) == 1 << 30
    rng = np.random.default_rng(7)
    for a in rng.integers(1, DEFAULT_Q, size=50):
        a = int(a)
        assert field_inv(a, DEFAULT_Q) == ext_euclid_inv(a, DEFAULT_Q)


def test_field_inv_zero_raises():
    with pytest.raises(ZeroInverse):
        field_inv(0, 7)


def test_field_inv_involution():
    rng = np.random.default_rng(3)
    for q in (5, 13, DEFAULT_Q):
        for a in rng.integers(1, q, size=30):
            a = int(a)
            assert field_inv(field_inv(a, q), q) == a


def test_batch_inv_agrees_with_single():
    rng = np.random.default_rng(11)
    vals = [int(v) for v in rng.integers(1, DEFAULT_Q, size=40)]
    assert batch_inv(vals, DEFAULT_Q) == [field_inv(v, DEFAULT_Q) for v in vals]
    with pytest.raises(ZeroInverse):
        batch_inv([3, 0, 5], 7)


def test_is_prime():
    assert is_prime(DEFAULT_Q)
    assert is_prime(5) and is_prime(13)
    assert not is_prime(1) and not is_prime(2**31) and not is_prime(91)


def test_mat_mul_identity():
    b = FMatrix.from_rows([[3, 1], [4, 1], [5, 9]], q=11)
    eye = FMatrix.identity(3, q=11)
    assert mat_mul(eye, b) == b


def test_mat_mul_small_case():
    a = FMatrix.from_rows([[1, 2], [3, 4]], q=7)
    b = FMatrix.from_rows([[5], [6]], q=7)
    assert mat_mul(a, b) == FMatrix.from_rows([[3], [4]], q=7)  # 17, 39 mod 7


@pytest.mark.parametrize("shape", [(4, 3, 2), (1, 5, 1), (6, 2, 6), (3, 3, 3)])
def test_mat_mul_matches_schoolbook_oracle(shape):
    r, s, c = shape
    for seed in range(25):
        rng = make_rng(seed, 9)
        a = random_matrix(rng, r, s)
        b = random_matrix(rng, s, c)
        assert mat_mul(a, b) == mat_mul_schoolbook(a, b)


def test_mat_mul_associativity_2x2_q5():
    rng = make_rng(123, 0)
    for _ in range(300):
        a = random_matrix(rng, 2, 2, q=5)
        b = random_matrix(rng, 2, 2, q=5)
        c = random_matrix(rng, 2, 2, q=5)
        assert mat_mul(mat_mul(a, b), c) == mat_mul(a, mat_mul(b, c))


def test_mat_mul_dimension_mismatch():
    a = FMatrix.zeros(2, 3)
    b = FMatrix.zeros(2, 3)
    with pytest.raises(DimensionMismatch):
        mat_mul(a, b)


def test_mat_axpy():
    acc = FMatrix.from_rows([[1]], q=5)
    m = FMatrix.from_rows([[4]], q=5)
    assert mat_axpy(acc, 0, m) == acc
    assert mat_axpy(FMatrix.zeros(1, 1, q=5), 1, m) == m
    assert mat_axpy(acc, 3, m) == FMatrix.from_rows([[3]], q=5)  # 1 + 12 mod 5
    with pytest.raises(DimensionMismatch):
        mat_axpy(acc, 2, FMatrix.zeros(2, 2, q=5))


def test_linear_combination_matches_axpy_chain():
    rng = make_rng(5, 1)
    mats = [random_matrix(rng, 3, 2, q=97) for _ in range(6)]
    coeffs = [int(c) for c in rng.integers(0, 97, size=6)]
    acc = FMatrix.zeros(3, 2, q=97)
    for c, m in zip(coeffs, mats):
        acc = mat_axpy(acc, c, m)
    assert linear_combination(coeffs, mats, 97) == acc


def test_random_matrix_deterministic():
    a = random_matrix(make_rng(99, 4), 5, 5)
    b = random_matrix(make_rng(99, 4), 5, 5)
    assert a == b
    c = random_matrix(make_rng(100, 4), 5, 5)
    assert a != c


def test_random_matrix_uniformity_q5():
    # 10^4 scalar draws; each residue count within 5 sigma of 2000
    rng = make_rng(2024, 0)
    m = random_matrix(rng, 100, 100, q=5)
    counts = np.bincount(np.array(m.tolist(), dtype=np.int64).ravel(), minlength=5)
    sigma = np.sqrt(10_000 * 0.2 * 0.8)
    assert all(abs(int(c) - 2000) <= 5 * sigma for c in counts)


def test_random_matrix_rejects_degenerate_dims():
    with pytest.raises(DimensionMismatch):
        random_matrix(make_rng(1, 0), 0, 3)
