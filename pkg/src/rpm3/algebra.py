"""Prime-field scalar and matrix arithmetic.

Everything the protocol touches lives in GF(q) for a prime q. The default
modulus is the Mersenne prime 2^31 - 1, large enough that the evaluation
points (n workers plus d_max + z interpolation nodes) are all distinct;
small primes (q >= 5) are accepted so privacy audits can enumerate the
whole randomness space.

Matrices are dense and row-major. Entries are Python ints held in numpy
object arrays: products of two 31-bit values accumulated over an inner
dimension would overflow int64, while Python ints never do and the block
sizes used here are tiny.

Randomness comes from numpy's Philox counter-based generator. Substreams
are derived as SeedSequence(entropy=seed, spawn_key=key), and every
consumer documents its draw order so runs replay bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ZeroInverse

DEFAULT_Q = (1 << 31) - 1

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, valid for all n < 3.3e24."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the substream (seed, key)."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def field_inv(a: int, q: int) -> int:
    """Multiplicative inverse of a mod q (q prime), via Fermat."""
    a %= q
    if a == 0:
        raise ZeroInverse("0 has no multiplicative inverse")
    return pow(a, q - 2, q)


def batch_inv(values, q: int):
    """Invert many nonzero field elements with one modular exponentiation.

    Montgomery's trick: prefix products, one inversion, then unwind.
    """
    values = [v % q for v in values]
    prefix = [1] * (len(values) + 1)
    for i, v in enumerate(values):
        if v == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        prefix[i + 1] = prefix[i] * v % q
    inv_all = field_inv(prefix[-1], q)
    out = [0] * len(values)
    for i in range(len(values) - 1, -1, -1):
        out[i] = prefix[i] * inv_all % q
        inv_all = inv_all * values[i] % q
    return out


def _obj_array(rows, cols, fill=0):
    arr = np.empty((rows, cols), dtype=object)
    arr[...] = fill
    return arr


@dataclass(eq=False)
class FMatrix:
    """Dense matrix over GF(q); entries are reduced Python ints."""

    q: int
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.data.ndim != 2:
            raise DimensionMismatch("FMatrix requires a 2-d array")
        if self.data.dtype != object:
            self.data = self.data.astype(object)
        self.data %= self.q

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_rows(cls, rows, q: int = DEFAULT_Q) -> "FMatrix":
        arr = np.array(rows, dtype=object)
        if arr.ndim != 2:
            raise DimensionMismatch("from_rows expects a list of equal-length rows")
        return cls(q, arr)

    @classmethod
    def zeros(cls, rows: int, cols: int, q: int = DEFAULT_Q) -> "FMatrix":
        return cls(q, _obj_array(rows, cols))

    @classmethod
    def identity(cls, n: int, q: int = DEFAULT_Q) -> "FMatrix":
        arr = _obj_array(n, n)
        for i in range(n):
            arr[i, i] = 1
        return cls(q, arr)

    # -- shape & access ----------------------------------------------------

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def __getitem__(self, idx) -> int:
        return self.data[idx]

    def tolist(self):
        return self.data.tolist()

    def __eq__(self, other) -> bool:
        if not isinstance(other, FMatrix):
            return NotImplemented
        return (
            self.q == other.q
            and self.shape == other.shape
            and bool((self.data == other.data).all())
        )

    def is_zero(self) -> bool:
        return bool((self.data == 0).all())

    # -- arithmetic --------------------------------------------------------

    def _check_same(self, other: "FMatrix"):
        if self.q != other.q:
            raise DimensionMismatch("mixed moduli")
        if self.shape != other.shape:
            raise DimensionMismatch(f"shape {self.shape} vs {other.shape}")

    def __add__(self, other: "FMatrix") -> "FMatrix":
        self._check_same(other)
        return FMatrix(self.q, (self.data + other.data) % self.q)

    def __sub__(self, other: "FMatrix") -> "FMatrix":
        self._check_same(other)
        return FMatrix(self.q, (self.data - other.data) % self.q)

    def scale(self, c: int) -> "FMatrix":
        c %= self.q
        if c == 0:
            return FMatrix.zeros(self.rows, self.cols, self.q)
        if c == 1:
            return self
        return FMatrix(self.q, (self.data * c) % self.q)

    def copy(self) -> "FMatrix":
        return FMatrix(self.q, self.data.copy())


def mat_mul(a: FMatrix, b: FMatrix) -> FMatrix:
    """Matrix product over GF(q)."""
    if a.q != b.q:
        raise DimensionMismatch("mixed moduli")
    if a.cols != b.rows:
        raise DimensionMismatch(f"{a.shape} @ {b.shape}")
    return FMatrix(a.q, (a.data @ b.data) % a.q)


def mat_mul_schoolbook(a: FMatrix, b: FMatrix) -> FMatrix:
    """Independent triple-loop product, kept as a test oracle for mat_mul."""
    if a.q != b.q:
        raise DimensionMismatch("mixed moduli")
    if a.cols != b.rows:
        raise DimensionMismatch(f"{a.shape} @ {b.shape}")
    q = a.q
    out = _obj_array(a.rows, b.cols)
    for i in range(a.rows):
        for j in range(b.cols):
            acc = 0
            for t in range(a.cols):
                acc += a.data[i, t] * b.data[t, j]
            out[i, j] = acc % q
    return FMatrix(q, out)


def mat_axpy(acc: FMatrix, c: int, m: FMatrix) -> FMatrix:
    """acc + c * m elementwise over GF(q)."""
    acc._check_same(m)
    c %= acc.q
    if c == 0:
        return acc
    return FMatrix(acc.q, (acc.data + m.data * c) % acc.q)


def linear_combination(coeffs, matrices, q: int) -> FMatrix:
    """Sum of c_j * M_j over GF(q); all matrices share one shape."""
    if len(coeffs) != len(matrices):
        raise DimensionMismatch("coefficient/matrix count mismatch")
    first = matrices[0]
    acc = np.zeros(first.shape, dtype=object)
    for c, m in zip(coeffs, matrices):
        first._check_same(m)
        c %= q
        if c:
            acc = acc + m.data * c
    return FMatrix(q, acc % q)


def random_matrix(rng: np.random.Generator, rows: int, cols: int, q: int = DEFAULT_Q) -> FMatrix:
    """Uniform matrix over GF(q); consumes rows*cols draws in row-major order."""
    if rows < 1 or cols < 1:
        raise DimensionMismatch("matrix dimensions must be positive")
    vals = rng.integers(0, q, size=(rows, cols), dtype=np.int64)
    return FMatrix(q, vals.astype(object))
