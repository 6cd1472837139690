"""Approximate output-SNR law of the zero-forcing receiver.

The Laplace-type approximation of the characteristic function is

    CF(t) ~= Perm(Q2) / (|D| Perm(D^-1 Q2)),   D = I - (jt / sigma^2) P1,

whose denominator is a degree ``L = n_r - n + 1`` polynomial in ``-jt``.
Coefficients are built for the unit-noise variable ``sigma^2 * SNR`` so no
``sigma^-2i`` factors appear until the caller asks for them.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .linalg import complement, esf_all, perm_rect, perm_square, subsets
from .mixture import mixture_from_polynomial
from .profile import user_view

__all__ = [
    "DenominatorPoly",
    "zf_denominator_coeffs",
    "zf_mixture",
    "zf_special_case_rate",
    "zf_k0",
]


@dataclass(frozen=True)
class DenominatorPoly:
    """``sum_i coeffs[i] (-jt)^i``; ``unit_coeffs`` are the same at unit noise."""

    unit_coeffs: np.ndarray
    noise_variance: float

    @property
    def degree(self):
        return len(self.unit_coeffs) - 1

    @property
    def coeffs(self):
        return self.unit_coeffs * self.noise_variance ** -np.arange(len(self.unit_coeffs), dtype=float)

    def __call__(self, u):
        """Evaluate at ``u = -jt`` (any real or complex ``u``)."""
        return np.polynomial.polynomial.polyval(u, self.coeffs)


def _check_dims(view):
    if view.n_r < view.n:
        raise DimensionError(f"ZF needs n_r >= n, got n_r={view.n_r}, n={view.n}")


def zf_unit_coeffs(view):
    """``|P1[s']| perm(Q2[s])`` summed over (n-1)-row subsets ``s``, by power."""
    _check_dims(view)
    n_r, n = view.n_r, view.n
    L = n_r - n + 1
    out = np.zeros(L + 1)
    for rows in subsets(n_r, n - 1):
        weight = perm_square(view.q2[list(rows), :])
        out += weight * esf_all(view.p1[list(complement(rows, n_r))])
    return out


def zf_denominator_coeffs(view, noise_variance):
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    return DenominatorPoly(zf_unit_coeffs(view), float(noise_variance))


def zf_mixture(view, noise_variance):
    """Generalized mixture of ``L`` exponentials approximating the ZF SNR law."""
    den = zf_denominator_coeffs(view, noise_variance)
    return mixture_from_polynomial(perm_rect(view.q2), den.unit_coeffs, rate_scale=noise_variance)


def zf_special_case_rate(profile, user, noise_variance):
    """Rate ``sigma^2 Perm(Q2) / perm(P)`` of the single exponential when n_r = n."""
    if profile.n_r != profile.n:
        raise DimensionError(f"special case needs a square profile, got {profile.p.shape}")
    view = user_view(profile, user)
    return noise_variance * perm_rect(view.q2) / perm_square(profile.p)


def zf_k0(view):
    """High-SNR constant ``Perm(Q2) / (|P1| Perm(P1^-1 Q2))``."""
    view.require_invertible()
    _check_dims(view)
    p1 = view.p1
    return perm_rect(view.q2) / (np.prod(p1) * perm_rect(view.q2 / p1[:, None]))
