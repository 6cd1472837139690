"""Combinatorial linear algebra: permanents, elementary symmetric functions,
subset enumeration and the random-determinant expectation they encode.

Rectangular permanents follow the wide-matrix definition (sum over all
injections of rows into columns).  A tall matrix is handled through its
transpose, which is the convention under which ``E{|X^H X|} = Perm(A)``
holds for an ``m x n`` matrix ``X`` with ``m >= n`` and ``A = E{X o X}``.
"""

import math
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import DimensionError, SizeLimitError

MAX_PERM_SIZE = 14

__all__ = [
    "MAX_PERM_SIZE",
    "perm_square",
    "perm_rect",
    "esf",
    "esf_all",
    "subsets",
    "complement",
    "expected_gram_det_oracle",
]


def _as_matrix(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(0, 0)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


@lru_cache(maxsize=None)
def _ryser_tables(n):
    # All nonempty column subsets as 0/1 rows, with Ryser's sign per subset.
    masks = np.arange(1, 1 << n, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    sizes = bits.sum(axis=1).astype(int)
    signs = np.where((n - sizes) % 2 == 0, 1.0, -1.0)
    bits.setflags(write=False)
    signs.setflags(write=False)
    return bits, signs


def perm_square(a):
    """Permanent of a square matrix by Ryser's inclusion-exclusion formula.

    The signed terms are accumulated with ``math.fsum`` so that the
    alternating sum does not shed digits.

    Parameters
    ----------
    a : array_like, shape (n, n)

    Returns
    -------
    float
        ``sum over permutations s of prod_i a[i, s(i)]``; 1 for the 0x0 matrix.
    """
    a = _as_matrix(a)
    n, m = a.shape
    if n != m:
        raise DimensionError(f"perm_square needs a square matrix, got {a.shape}")
    if n > MAX_PERM_SIZE:
        raise SizeLimitError(f"permanent of size {n} exceeds guard {MAX_PERM_SIZE}")
    if n == 0:
        return 1.0
    if n == 1:
        return float(a[0, 0])
    if n == 2:
        return float(a[0, 0] * a[1, 1] + a[0, 1] * a[1, 0])
    bits, signs = _ryser_tables(n)
    row_sums = bits @ a.T  # (2^n - 1, n): row sums restricted to each subset
    terms = signs * np.prod(row_sums, axis=1)
    return math.fsum(terms)


def perm_rect(a):
    """Permanent of an arbitrary rectangular matrix.

    For ``m <= n`` this is the sum over all injections of the ``m`` rows into
    the ``n`` columns, evaluated as a sum of square permanents over column
    subsets.  For ``m > n`` the transpose is used.  The empty matrix has
    permanent 1.
    """
    a = _as_matrix(a)
    m, n = a.shape
    if m > n:
        a = a.T
        m, n = n, m
    if m == 0:
        return 1.0
    if m > MAX_PERM_SIZE:
        raise SizeLimitError(f"permanent of min dimension {m} exceeds guard {MAX_PERM_SIZE}")
    if m == n:
        return perm_square(a)
    return math.fsum(perm_square(a[:, list(cols)]) for cols in combinations(range(n), m))


def esf_all(d):
    """All elementary symmetric functions ``Tr_0 .. Tr_n`` of the values ``d``.

    These are the coefficients of ``prod_i (1 + d_i x)`` in ascending powers.
    """
    coeffs = np.zeros(len(d) + 1)
    coeffs[0] = 1.0
    for k, x in enumerate(np.asarray(d, dtype=float), start=1):
        coeffs[1 : k + 1] = coeffs[1 : k + 1] + x * coeffs[:k]
    return coeffs


def esf(d, i):
    """The ``i``-th elementary symmetric function of ``d`` (``Tr_i(diag(d))``)."""
    if i < 0:
        raise ValueError("esf order must be nonnegative")
    d = np.asarray(d, dtype=float).ravel()
    if i > d.size:
        return 0.0
    return float(esf_all(d)[i])


def subsets(n, k):
    """Yield every ``k``-subset of ``range(n)`` once, in lexicographic order."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    return combinations(range(n), k)


def complement(subset, n):
    """Indices of ``range(n)`` not in ``subset``, ascending."""
    members = set(subset)
    return tuple(i for i in range(n) if i not in members)


def expected_gram_det_oracle(q, samples, seed, weights=None):
    """Monte Carlo estimate of ``E{|X^H diag(w) X|}``.

    ``X`` has independent zero-mean circular complex Gaussian entries with
    variances ``q[i, k]``.  With ``weights=None`` the diagonal is the identity.

    Returns
    -------
    estimate, std_error : float
    """
    q = _as_matrix(q)
    if np.any(q < 0):
        raise ValueError("variances must be nonnegative")
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    m, n = q.shape
    rng = np.random.default_rng(seed)
    scale = np.sqrt(q / 2.0)
    x = scale * (rng.standard_normal((samples, m, n)) + 1j * rng.standard_normal((samples, m, n)))
    if weights is None:
        gram = np.conj(np.swapaxes(x, 1, 2)) @ x
    else:
        w = np.asarray(weights, dtype=float)
        gram = np.conj(np.swapaxes(x, 1, 2)) @ (w[:, None] * x)
    dets = np.linalg.det(gram).real
    return float(dets.mean()), float(dets.std(ddof=1) / math.sqrt(samples))
