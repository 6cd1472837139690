"""Generalized mixtures of exponentials built from a rational characteristic
function ``CF(t) = numerator / sum_i a_i (-jt)^i``.

The denominator is factored through the eigenvalues of its companion matrix
(``numpy.roots``).  Distinct poles give the familiar weights
``eta_i = 1 / prod_{k != i} (w_k - w_i)``.  Poles that are numerically the
same root of multiplicity ``m`` (flat profiles, duplicated antennas with no
interference) are merged and expanded as confluent partial fractions, giving
Erlang-type terms ``z^(k-1) e^(-w z) / (k-1)!``.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc

from .errors import DegenerateRootsError

log = logging.getLogger(__name__)

SNAP_REAL = 1e-8
CLUSTER_TOL = 1e-6
MERGE_CANDIDATE_TOL = 1e-2
PERTURBATION = 1e-9


@dataclass(frozen=True)
class ExponentialMixture:
    """Density ``f(z) = scale * sum_i weights[i] z^(k_i-1)/(k_i-1)! exp(-rates[i] z)``.

    ``orders`` holds the ``k_i`` (all 1 for a plain mixture).  When
    ``factored`` is set, the terms are the partial fractions of
    ``scale / prod_i (rates[i] + s)^k_i`` and transforms are evaluated in
    that product form, which avoids cancellation at large ``s``.
    """

    scale: complex
    weights: np.ndarray
    rates: np.ndarray
    orders: np.ndarray = None
    factored: bool = False

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=complex))
        r = np.atleast_1d(np.asarray(self.rates, dtype=complex))
        k = np.ones(r.shape, dtype=int) if self.orders is None else np.atleast_1d(np.asarray(self.orders, dtype=int))
        if not (w.shape == r.shape == k.shape) or w.ndim != 1:
            raise ValueError("weights, rates and orders must be 1-D and of equal length")
        if np.any(r.real <= 0):
            raise ValueError("all rates need a positive real part")
        if np.any(k < 1):
            raise ValueError("orders must be positive")
        for name, val in (("weights", w), ("rates", r), ("orders", k)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def terms(self):
        return list(zip(self.weights.tolist(), self.rates.tolist()))

    @property
    def degree(self):
        """Degree of the denominator polynomial (one term per pole order)."""
        return len(self.rates)

    def poles(self):
        """Distinct rates and their multiplicities."""
        uniq, counts = [], []
        for r in self.rates:
            for i, u in enumerate(uniq):
                if u == r:
                    counts[i] += 1
                    break
            else:
                uniq.append(r)
                counts.append(1)
        return np.array(uniq, dtype=complex), np.array(counts, dtype=int)

    @property
    def amplitudes(self):
        return self.scale * self.weights

    def __len__(self):
        return len(self.rates)

    # -- evaluation -----------------------------------------------------

    def _grid(self, z):
        z = np.asarray(z, dtype=float)
        return z, z.reshape(-1, 1)

    @staticmethod
    def _out(z, vals):
        return float(vals[0]) if z.ndim == 0 else vals.reshape(z.shape)

    def pdf_complex(self, z):
        z0, zz = self._grid(z)
        k = self.orders
        fact = np.array([math.factorial(int(m) - 1) for m in k], dtype=float)
        vals = (self.amplitudes * zz ** (k - 1) / fact * np.exp(-self.rates * zz)).sum(axis=1)
        vals = np.where(zz[:, 0] < 0, 0.0, vals)
        return vals[0] if z0.ndim == 0 else vals.reshape(z0.shape)

    def pdf(self, z):
        z0 = np.asarray(z, dtype=float)
        return self._out(z0, np.atleast_1d(self.pdf_complex(z)).real)

    def cdf_complex(self, z):
        z0, zz = self._grid(z)
        zz = np.maximum(zz, 0.0)
        x = self.rates * zz
        k = self.orders
        reg = np.empty(x.shape, dtype=complex)
        for j, (rate, m) in enumerate(zip(self.rates, k)):
            col = x[:, j]
            if m == 1:
                reg[:, j] = -np.expm1(-col)
            elif rate.imag == 0:
                reg[:, j] = gammainc(m, col.real)
            else:
                partial = sum(col**i / math.factorial(i) for i in range(m))
                reg[:, j] = 1.0 - np.exp(-col) * partial
        vals = (self.amplitudes / self.rates**k * reg).sum(axis=1)
        return vals[0] if z0.ndim == 0 else vals.reshape(z0.shape)

    def cdf(self, z):
        z0 = np.asarray(z, dtype=float)
        return self._out(z0, np.atleast_1d(self.cdf_complex(z)).real)

    def laplace(self, s):
        """``E{exp(-s Z)}``; equals ``scale * sum eta_i / (w_i + s)^k_i``."""
        s = np.asarray(s, dtype=complex)
        ss = s.reshape(-1, 1)
        if self.factored:
            poles, mult = self.poles()
            vals = self.scale / np.prod((poles + ss) ** mult, axis=1)
        else:
            vals = (self.amplitudes / (self.rates + ss) ** self.orders).sum(axis=1)
        return vals[0] if s.ndim == 0 else vals.reshape(s.shape)

    def cf(self, t):
        """Characteristic function ``E{exp(j t Z)}``."""
        return self.laplace(-1j * np.asarray(t, dtype=float))

    @property
    def total_mass(self):
        return complex((self.amplitudes / self.rates**self.orders).sum())

    @property
    def mean(self):
        return float((self.amplitudes * self.orders / self.rates ** (self.orders + 1)).sum().real)

    def quantile(self, q):
        if not 0 < q < 1:
            raise ValueError("quantile level must lie in (0, 1)")
        hi = 1.0 / float(np.min(self.rates.real))
        while self.cdf(hi) < q:
            hi *= 2.0
        return brentq(lambda z: self.cdf(z) - q, 0.0, hi, xtol=1e-15 * hi, rtol=1e-13)

    def scaled(self, factor):
        """Law of ``factor * Z``."""
        factor = float(factor)
        if factor <= 0:
            raise ValueError("factor must be positive")
        n = self.degree
        return ExponentialMixture(
            scale=self.scale * factor ** (-n),
            weights=self.weights * factor ** (n - self.orders),
            rates=self.rates / factor,
            orders=self.orders,
            factored=self.factored,
        )


# -- construction ------------------------------------------------------


def _snap(roots):
    roots = np.asarray(roots, dtype=complex)
    small = np.abs(roots.imag) < SNAP_REAL * np.abs(roots.real)
    roots = np.where(small, roots.real + 0j, roots)
    # enforce exact conjugate pairs
    upper = [r for r in roots if r.imag > 0]
    real = [r for r in roots if r.imag == 0]
    lower = [r for r in roots if r.imag < 0]
    paired = []
    for r in upper:
        j = int(np.argmin([abs(r.conjugate() - x) for x in lower]))
        partner = lower.pop(j)
        mid = 0.5 * (r + partner.conjugate())
        paired += [mid, mid.conjugate()]
    if lower:
        raise DegenerateRootsError("unpaired complex roots of a real polynomial", lower)
    return np.array(real + paired, dtype=complex)


def _poly_from_roots(roots, mult):
    coeffs = np.array([1.0 + 0j])
    for r, m in zip(roots, mult):
        for _ in range(m):
            coeffs = np.convolve(coeffs, [1.0, r])  # factor (v + r), highest power first
    return coeffs


def _coeff_error(monic_desc, roots, mult):
    recon = _poly_from_roots(roots, mult)
    scale = np.maximum(np.abs(monic_desc), 1e-300)
    return float(np.max(np.abs(recon - monic_desc) / scale))


def _candidate_clusters(roots):
    order = np.argsort(roots.real)
    groups, current = [], [order[0]]
    for a, b in zip(order[:-1], order[1:]):
        ra, rb = roots[a], roots[b]
        if abs(ra - rb) < MERGE_CANDIDATE_TOL * max(abs(ra), abs(rb)):
            current.append(b)
        else:
            groups.append(current)
            current = [b]
    groups.append(current)
    return groups


def _resolve_roots(monic_desc, roots):
    """Merge clusters that the coefficients identify as one multiple root."""
    distinct = list(roots)
    mult = [1] * len(distinct)
    base_err = _coeff_error(monic_desc, np.array(distinct), mult)
    for group in _candidate_clusters(roots):
        if len(group) < 2:
            continue
        members = [roots[i] for i in group]
        merged = complex(np.mean(members))
        if abs(merged.imag) < SNAP_REAL * abs(merged.real):
            merged = complex(merged.real)
        trial_roots, trial_mult = [], []
        for r, m in zip(distinct, mult):
            if any(r == x for x in members):
                continue
            trial_roots.append(r)
            trial_mult.append(m)
        trial_roots.append(merged)
        trial_mult.append(len(members))
        err = _coeff_error(monic_desc, np.array(trial_roots), trial_mult)
        if err <= max(100.0 * base_err, 1e-12):
            log.debug("merged %d roots near %s (coeff err %.2e)", len(members), merged, err)
            distinct, mult = trial_roots, trial_mult
    return np.array(distinct, dtype=complex), np.array(mult, dtype=int)


def _min_separation(roots):
    """Smallest pairwise distance relative to the larger root of the pair."""
    if len(roots) < 2:
        return np.inf, None
    mag = np.maximum(np.abs(roots[:, None]), np.abs(roots[None, :]))
    diff = np.abs(roots[:, None] - roots[None, :]) / mag
    np.fill_diagonal(diff, np.inf)
    i, j = np.unravel_index(np.argmin(diff), diff.shape)
    return diff[i, j], (roots[i], roots[j])


def confluent_weights(rates, orders):
    """Partial fractions of ``1 / prod_j (rates[j] + u)^orders[j]``.

    Returns ``(rates, weights, orders)`` flattened so that term ``i`` is
    ``weights[i] / (rates[i] + u)^orders[i]``.
    """
    out_r, out_w, out_k = [], [], []
    for j, (wj, mj) in enumerate(zip(rates, orders)):
        series = np.zeros(mj, dtype=complex)
        series[0] = 1.0
        for i, (wi, mi) in enumerate(zip(rates, orders)):
            if i == j:
                continue
            d = wi - wj
            # (d + delta)^(-mi) = d^(-mi) sum_l (-1)^l C(mi+l-1, l) (delta/d)^l
            factor = np.array([(-1) ** l * math.comb(mi + l - 1, l) / d**l for l in range(mj)]) / d**mi
            series = np.convolve(series, factor)[:mj]
        for k in range(1, mj + 1):
            out_r.append(wj)
            out_w.append(series[mj - k])
            out_k.append(k)
    return np.array(out_r), np.array(out_w), np.array(out_k, dtype=int)


def _factor(coeffs):
    """Rates and multiplicities of the denominator ``sum_i a_i u^i``."""
    monic_desc = (coeffs / coeffs[-1])[::-1].astype(complex)
    # u-roots of the polynomial are -rate
    rates = _snap(-np.roots(coeffs[::-1]))
    return _resolve_roots(monic_desc, rates)


def mixture_from_polynomial(numerator, coeffs, rate_scale=1.0):
    """Invert ``CF(t) = numerator / sum_i coeffs[i] (-j t)^i`` for ``Z = Y / rate_scale``.

    ``coeffs`` describe the law of the unit-noise variable ``Y``; the
    returned mixture describes ``Z``, whose rates are ``rate_scale`` times
    the polynomial's rates.  Coefficients must be real and nonnegative
    with a positive constant term.
    """
    coeffs = np.asarray(coeffs, dtype=float).copy()
    if coeffs.ndim != 1 or coeffs.size == 0 or coeffs[0] <= 0 or np.any(coeffs < 0):
        raise ValueError("need nonnegative coefficients with positive constant term")
    nz = np.flatnonzero(coeffs)
    coeffs = coeffs[: nz[-1] + 1]
    if coeffs.size == 1:
        raise ValueError("denominator is constant; no distribution")

    roots, mult = _factor(coeffs)
    sep, pair = _min_separation(roots)
    if sep < CLUSTER_TOL:
        log.info("clustered roots %s; retrying with perturbed coefficients", pair)
        signs = np.where(np.arange(coeffs.size) % 2 == 0, 1.0, -1.0)
        roots, mult = _factor(coeffs * (1.0 + PERTURBATION * signs))
        sep, pair = _min_separation(roots)
        if sep < CLUSTER_TOL:
            raise DegenerateRootsError(f"denominator roots too close ({sep:.3g})", pair)
    if np.any(roots.real <= 0):
        raise DegenerateRootsError("denominator has a root with nonpositive rate", roots[roots.real <= 0])
    if np.any(roots.imag != 0):
        log.info("complex-conjugate rates in mixture: %s", roots[roots.imag != 0])

    rates, weights, orders = confluent_weights(roots, mult)
    n = coeffs.size - 1
    c = float(numerator) / coeffs[-1]
    rate_scale = float(rate_scale)
    return ExponentialMixture(
        scale=c * rate_scale**n,
        weights=weights * rate_scale ** (orders - n).astype(float),
        rates=rates * rate_scale,
        orders=orders,
        factored=True,
    )
