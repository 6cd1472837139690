"""Approximate output-SINR law of the MMSE receiver and its high-SNR constants.

With ``Theta(Q2) = E{|sigma^2 I + H2^H H2|}`` the approximate characteristic
function is ``Theta(Q2) / sum_i phi_i (-jt)^i``, a degree ``n_r`` polynomial
whose coefficients come from the table

    phi_hat[i, k] = sum over k-row subsets s of Tr_i(P1[s']) Perm(Q2[s, :])

via ``phi_i = sum_k phi_hat[i, k] sigma^(2(n-i-k-1))``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRootsError
from .linalg import complement, esf_all, perm_rect, subsets
from .mixture import mixture_from_polynomial
from .zf import zf_k0

__all__ = [
    "MmseDenominator",
    "HighSnrK0",
    "mmse_numerator",
    "mmse_denominator_coeffs",
    "mmse_mixture",
    "mmse_k0_terms",
]


def theta(q2, noise_variance):
    """``E{|s I + X^H X|}`` for ``E{X o X} = q2`` and ``s = noise_variance``."""
    n_r, n_int = q2.shape
    total = 0.0
    for k in range(n_int + 1):
        level = sum(perm_rect(q2[:, list(cols)]) for cols in subsets(n_int, k))
        total += level * noise_variance ** (n_int - k)
    return float(total)


def mmse_numerator(view, noise_variance):
    """``Theta(Q2)``; reduces to ``Perm(Q2)`` at zero noise."""
    if noise_variance < 0:
        raise ValueError("noise_variance must be nonnegative")
    return theta(view.q2, noise_variance)


@dataclass(frozen=True)
class MmseDenominator:
    """Coefficient table ``phi_hat[i, k]`` plus the noise level it is evaluated at."""

    table: np.ndarray
    noise_variance: float

    @property
    def degree(self):
        return self.table.shape[0] - 1

    @property
    def unit_coeffs(self):
        """Coefficients for the unit-noise variable ``sigma^2 * SINR``.

        ``sum_k phi_hat[i, k] sigma^(2(n-k-1))``: only nonnegative powers, and
        at ``sigma^2 = 0`` only the ``k = n-1`` column survives.
        """
        n = self.table.shape[1]
        powers = np.array([self.noise_variance ** (n - k - 1) for k in range(n)])
        return self.table @ powers

    @property
    def coeffs(self):
        """Literal coefficients ``phi_i`` of ``(-jt)^i``; needs positive noise."""
        if self.noise_variance <= 0:
            raise ValueError("literal coefficients need positive noise")
        return self.unit_coeffs * self.noise_variance ** -np.arange(self.degree + 1, dtype=float)

    def __call__(self, u):
        return np.polynomial.polynomial.polyval(u, self.coeffs)


def mmse_table(view):
    n_r, n = view.n_r, view.n
    table = np.zeros((n_r + 1, n))
    for k in range(n):
        for rows in subsets(n_r, k):
            comp = list(complement(rows, n_r))
            e = esf_all(view.p1[comp])
            table[: len(e), k] += e * perm_rect(view.q2[list(rows), :])
    return table


def mmse_denominator_coeffs(view, noise_variance):
    if noise_variance < 0:
        raise ValueError("noise_variance must be nonnegative")
    return MmseDenominator(mmse_table(view), float(noise_variance))


def mmse_mixture(view, noise_variance):
    """Generalized mixture of ``n_r`` exponentials approximating the MMSE SINR law."""
    if noise_variance <= 0:
        raise ValueError("noise_variance must be positive")
    den = mmse_denominator_coeffs(view, noise_variance)
    return mixture_from_polynomial(mmse_numerator(view, noise_variance), den.unit_coeffs, rate_scale=noise_variance)


@dataclass(frozen=True)
class HighSnrK0:
    """``K0(s) = c0 * sum_i chis[i] / (thetas[i] + s)^orders[i]``.

    ``c0`` is the ZF constant; ``zetas`` are the coefficients of
    ``sum_i zeta_i s^(n-1-i)`` whose roots are ``-thetas``.  For a single
    user there is no interference and ``K0`` is the constant ``c0``.
    """

    c0: float
    zetas: np.ndarray
    thetas: np.ndarray
    chis: np.ndarray
    orders: np.ndarray

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        if len(self.thetas) == 0:
            return np.full(s.shape, self.c0) if s.ndim else self.c0
        ss = s.reshape(-1, 1)
        if np.all(self.orders == 1):
            vals = (self.chis / (self.thetas + ss)).sum(axis=1)
        else:
            vals = (self.chis / (self.thetas + ss) ** self.orders).sum(axis=1)
        vals = self.c0 * vals
        return vals[0].real if s.ndim == 0 else vals.reshape(s.shape)

    def direct(self, s):
        """``c0 * zeta_(n-1) / sum_i zeta_i s^(n-1-i)`` without the partial fractions."""
        return self.c0 * self.zetas[-1] / np.polyval(self.zetas, s)


def mmse_k0_terms(view):
    view.require_invertible()
    c0 = zf_k0(view)
    a = view.q2 / view.p1[:, None]
    n_int = a.shape[1]
    zetas = np.array(
        [sum(perm_rect(a[:, list(cols)]) for cols in subsets(n_int, i)) for i in range(n_int + 1)]
    )
    if n_int == 0:
        empty = np.zeros(0)
        return HighSnrK0(c0, zetas, empty.astype(complex), empty.astype(complex), empty.astype(int))
    try:
        mix = mixture_from_polynomial(zetas[-1], zetas[::-1])
    except ValueError as exc:
        raise DegenerateRootsError(f"interference polynomial roots: {exc}") from exc
    return HighSnrK0(c0, zetas, mix.rates, mix.amplitudes, mix.orders)
