"""Symbol error rates from the moment generating function.

For M-PSK the error probability is ``(1/pi) int_0^T M(-g / sin^2 t) dt``; for
square M-QAM the usual two-integral combination is used.  High-SNR
asymptotes take the form ``(G_a * snr)^(-G_d)``.
"""

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, quad_vec

from .errors import DegenerateRootsError, QuadratureError
from .mmse import mmse_k0_terms
from .zf import zf_k0

__all__ = [
    "ModulationSpec",
    "HighSnrAsymptote",
    "integrate",
    "angular_average",
    "ser_from_mixture",
    "conditional_sep",
    "zf_high_snr",
    "mmse_high_snr",
    "jm_integral",
]

EPSABS = 1e-12
EPSREL = 1e-10
LIMIT = 10_000


@dataclass(frozen=True)
class ModulationSpec:
    kind: str
    m: int

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in ("MPSK", "MQAM"):
            raise ValueError(f"unknown modulation kind {self.kind!r}")
        if self.m < 2:
            raise ValueError("constellation size must be at least 2")
        if kind == "MQAM":
            root = math.isqrt(self.m)
            if root * root != self.m:
                raise ValueError("M-QAM needs a square constellation size")

    @property
    def g(self):
        if self.kind == "MPSK":
            return math.sin(math.pi / self.m) ** 2
        return 1.5 / (self.m - 1)

    @property
    def t_upper(self):
        return (self.m - 1) * math.pi / self.m

    @classmethod
    def from_name(cls, name):
        """Parse ``bpsk``, ``qpsk``, ``8psk``, ``16qam``, ``4qam`` and so on."""
        key = name.strip().lower()
        if key == "bpsk":
            return cls("MPSK", 2)
        if key == "qpsk":
            return cls("MPSK", 4)
        match = re.fullmatch(r"(\d+)-?(psk|qam)", key)
        if not match:
            raise ValueError(f"unrecognised modulation {name!r}")
        return cls("M" + match.group(2).upper(), int(match.group(1)))

    @property
    def name(self):
        if self.kind == "MPSK" and self.m in (2, 4):
            return {2: "bpsk", 4: "qpsk"}[self.m]
        return f"{self.m}{self.kind[1:].lower()}"


def integrate(f, a, b, epsabs=EPSABS, epsrel=EPSREL):
    """Adaptive Gauss-Kronrod quadrature; raises instead of warning."""
    val, err, _info, *warning = quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=LIMIT, full_output=True)
    if warning:
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge (err {err:.3g})", achieved=err)
    return val


def _segments(mod):
    """``(weight, upper limit)`` pairs so that SER = sum w * (1/pi) int_0^c."""
    if mod.kind == "MPSK":
        return [(1.0, mod.t_upper)]
    q = 1.0 - 1.0 / math.sqrt(mod.m)
    return [(4.0 * q, math.pi / 2), (-4.0 * q * q, math.pi / 4)]


def angular_average(mod, h, epsabs=EPSABS, epsrel=EPSREL):
    """Apply the modulation's angular functional to ``h(theta)``."""
    return sum(w * integrate(h, 0.0, c, epsabs, epsrel) / math.pi for w, c in _segments(mod))


def ser_from_mixture(mix, mod):
    """SER of an exponential-mixture SINR law."""
    g = mod.g

    def h(t):
        s2 = math.sin(t) ** 2
        if s2 == 0.0:
            return 0.0
        return float(mix.laplace(g / s2).real)

    return angular_average(mod, h)


def conditional_sep(x, mod, epsabs=1e-9):
    """Exact symbol error probability given SINR values ``x`` (vectorised)."""
    x = np.asarray(x, dtype=float)
    g = mod.g

    def h(t):
        s2 = math.sin(t) ** 2
        if s2 == 0.0:
            return np.zeros_like(x)
        return np.exp(-g * x / s2)

    total = np.zeros_like(x)
    for w, c in _segments(mod):
        val, err = quad_vec(h, 0.0, c, epsabs=epsabs, epsrel=0.0, norm="max", limit=LIMIT)
        if err > 10 * epsabs * c:
            raise QuadratureError("conditional SEP quadrature did not converge", achieved=err)
        total += w * val / math.pi
    return total


def jm_integral(m, c, a):
    """``(1/pi) int_0^c sin^(2m) t / (a + sin^2 t) dt`` for ``m >= 1``, ``a >= 0``."""
    if m < 1 or not 0 < c < math.pi or a < 0:
        raise ValueError(f"jm_integral domain: m >= 1, 0 < c < pi, a >= 0 (got {m}, {c}, {a})")

    def h(t):
        s2 = math.sin(t) ** 2
        return s2**m / (a + s2) if s2 > 0 else 0.0

    return integrate(h, 0.0, c, epsabs=EPSABS, epsrel=1e-12) / math.pi


def _jm_complex(m, c, a):
    def h(t):
        s2 = math.sin(t) ** 2
        return s2**m / (a + s2) if s2 > 0 else 0j

    re_part = integrate(lambda t: h(t).real, 0.0, c)
    im_part = integrate(lambda t: h(t).imag, 0.0, c)
    return complex(re_part, im_part) / math.pi


@dataclass(frozen=True)
class HighSnrAsymptote:
    """``SER ~ (array_gain * snr)^(-diversity)`` with ``snr = 1 / sigma^2``."""

    diversity: int
    array_gain: float
    k0: float
    integral: float

    def ser(self, snr):
        return (self.array_gain * np.asarray(snr, dtype=float)) ** (-self.diversity)

    def ser_at_noise(self, noise_variance):
        return self.ser(1.0 / np.asarray(noise_variance, dtype=float))


def zf_high_snr(view, mod):
    k0 = zf_k0(view)
    L = view.n_r - view.n + 1
    g = mod.g
    integral = angular_average(mod, lambda t: (math.sin(t) ** 2 / g) ** L)
    return HighSnrAsymptote(L, (k0 * integral) ** (-1.0 / L), k0, integral)


def mmse_high_snr(view, mod):
    """MMSE asymptote; the array gain is ``(c0 * I(P))^(-1/L)``."""
    if view.n == 1:
        return zf_high_snr(view, mod)
    terms = mmse_k0_terms(view)
    L = view.n_r - view.n + 1
    g = mod.g
    if np.all(terms.orders == 1):
        total = 0.0
        for chi, th in zip(terms.chis, terms.thetas):
            a = g / th
            if th.imag == 0:
                jsum = sum(w * jm_integral(L + 1, c, a.real) for w, c in _segments(mod))
            else:
                jsum = sum(w * _jm_complex(L + 1, c, a) for w, c in _segments(mod))
            total += chi / th * jsum
        integral = float(np.real(total)) / g**L
    else:
        # confluent interference roots: integrate K0 directly
        integral = angular_average(
            mod,
            lambda t: (math.sin(t) ** 2 / g) ** L * terms.direct(g / math.sin(t) ** 2) / terms.c0
            if math.sin(t) != 0
            else 0.0,
        )
    if not integral > 0:
        raise DegenerateRootsError(f"nonpositive high-SNR integral {integral}")
    return HighSnrAsymptote(L, (terms.c0 * integral) ** (-1.0 / L), terms.c0, integral)
