"""Monte Carlo ground truth: Rayleigh channel draws, exact MMSE/ZF output
statistics, empirical distributions and semi-analytic SER.

Random streams
--------------
Draws are generated in blocks of ``BLOCK`` realizations.  Block ``b`` of a
run with seed ``seed`` is drawn from ``numpy.random.SeedSequence(seed,
spawn_key=(b,))``, whose entropy mixing is a documented 32-bit-word hash of
``(seed, b)``.  Blocks are independent, can be computed by any worker, and
are merged in block order, so results do not depend on the worker count
(``MACRODIV_THREADS``).
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import kstest

from .errors import DimensionError, MacrodivError
from .ser import conditional_sep

log = logging.getLogger(__name__)

BLOCK = 4096
COND_LIMIT = 1e12

__all__ = [
    "ChannelRealization",
    "EmpiricalDistribution",
    "SingularChannelError",
    "sample_channel",
    "sample_channels",
    "mmse_sinr",
    "zf_snr",
    "zf_snr_projection",
    "receiver_samples",
    "empirical_cdf",
    "semi_analytic_ser",
]


class SingularChannelError(MacrodivError, ArithmeticError):
    """``H^H H`` is too ill-conditioned for the ZF receiver."""


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray


def worker_count():
    env = os.environ.get("MACRODIV_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def stream_rng(seed, stream):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def _block(p, seed, b, size=BLOCK):
    rng = stream_rng(seed, b)
    z = rng.standard_normal((size, *p.shape, 2))
    return np.sqrt(p / 2.0) * (z[..., 0] + 1j * z[..., 1])


def sample_channel(profile, seed, index):
    """Realization ``index`` of the run keyed by ``seed``.

    Identical to ``sample_channels(profile, n, seed)[index]`` for any
    ``n > index``.
    """
    b, i = divmod(index, BLOCK)
    return ChannelRealization(_block(profile.p, seed, b)[i])


def _map_blocks(func, count, workers=None):
    blocks = [(b, min(BLOCK, count - b * BLOCK)) for b in range(math.ceil(count / BLOCK))]
    workers = worker_count() if workers is None else workers
    if workers == 1 or len(blocks) == 1:
        return [func(b, n) for b, n in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bn: func(*bn), blocks))


def sample_channels(profile, count, seed):
    """``count`` realizations as a ``(count, n_r, n)`` complex array."""
    parts = _map_blocks(lambda b, n: _block(profile.p, seed, b)[:n], count)
    return np.concatenate(parts, axis=0)


def _as_array(h):
    return h.h if isinstance(h, ChannelRealization) else np.asarray(h)


def mmse_sinr(h, noise_variance, user):
    """``h1^H R^-1 h1`` with ``R = sum_{k != user} h_k h_k^H + sigma^2 I``.

    Accepts one realization or a stack of shape ``(..., n_r, n)``.
    """
    h = _as_array(h)
    n_r = h.shape[-2]
    h1 = h[..., :, user]
    h2 = np.delete(h, user, axis=-1)
    r = h2 @ np.conj(np.swapaxes(h2, -1, -2)) + noise_variance * np.eye(n_r)
    x = np.linalg.solve(r, h1[..., None])[..., 0]
    out = np.einsum("...i,...i->...", np.conj(h1), x).real
    return float(out) if out.ndim == 0 else out


def _zf_core(h, noise_variance, user):
    n_r, n = h.shape[-2:]
    if n_r < n:
        raise DimensionError("ZF needs n_r >= n")
    gram = np.conj(np.swapaxes(h, -1, -2)) @ h
    e = np.zeros(n)
    e[user] = 1.0
    e = np.broadcast_to(e, gram.shape[:-1])[..., None]
    with np.errstate(all="ignore"):
        x = np.linalg.solve(gram, e)[..., user, 0].real
        snr = 1.0 / (noise_variance * x)
    ok = np.linalg.cond(gram) < COND_LIMIT
    return snr, ok


def zf_snr(h, noise_variance, user):
    """``1 / (sigma^2 [(H^H H)^-1]_uu)``."""
    h = _as_array(h)
    try:
        snr, ok = _zf_core(h, noise_variance, user)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError(str(exc)) from exc
    if np.ndim(snr) == 0:
        if not ok:
            raise SingularChannelError("H^H H is numerically singular")
        return float(snr)
    if not np.all(ok):
        raise SingularChannelError(f"{np.count_nonzero(~ok)} singular realizations")
    return snr


def zf_snr_projection(h, noise_variance, user):
    """Same statistic via ``h1^H (I - H2 (H2^H H2)^-1 H2^H) h1 / sigma^2``."""
    h = _as_array(h)
    h1 = h[..., :, user]
    h2 = np.delete(h, user, axis=-1)
    if h2.shape[-1] == 0:
        resid = h1
    else:
        q, _ = np.linalg.qr(h2)
        resid = h1 - (q @ (np.conj(np.swapaxes(q, -1, -2)) @ h1[..., None]))[..., 0]
    out = np.sum(np.abs(resid) ** 2, axis=-1) / noise_variance
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EmpiricalDistribution:
    sorted_samples: np.ndarray
    discarded: int = 0

    @property
    def count(self):
        return len(self.sorted_samples)

    def cdf(self, x):
        return np.searchsorted(self.sorted_samples, x, side="right") / self.count

    def quantile(self, q):
        return float(np.quantile(self.sorted_samples, q))

    @property
    def mean(self):
        return float(self.sorted_samples.mean())

    @property
    def std_error(self):
        return float(self.sorted_samples.std(ddof=1) / math.sqrt(self.count))

    def ks_distance(self, cdf):
        """Kolmogorov-Smirnov statistic against a callable CDF."""
        return float(kstest(self.sorted_samples, cdf).statistic)


def receiver_samples(profile, user, noise_variance, samples, seed, receivers=("mmse", "zf")):
    """Per-draw receiver statistics on shared channel draws.

    Returns ``(stats, ok)`` where ``stats[name]`` is an array of length
    ``samples`` and ``ok`` flags draws whose ZF Gram matrix is usable.
    """
    for name in receivers:
        if name not in ("mmse", "zf"):
            raise ValueError(f"unknown receiver {name!r}")

    def work(b, n):
        h = _block(profile.p, seed, b)[:n]
        out = {}
        ok = np.ones(n, dtype=bool)
        if "zf" in receivers:
            out["zf"], ok = _zf_core(h, noise_variance, user)
        if "mmse" in receivers:
            out["mmse"] = mmse_sinr(h, noise_variance, user)
        return out, ok

    parts = _map_blocks(work, samples)
    stats = {name: np.concatenate([p[0][name] for p in parts]) for name in receivers}
    ok = np.concatenate([p[1] for p in parts])
    return stats, ok


def empirical_cdf(profile, receiver, user, noise_variance, samples, seed):
    """Empirical law of the chosen receiver's output SINR/SNR."""
    if samples < 1000:
        raise ValueError("use at least 1000 samples")
    stats, ok = receiver_samples(profile, user, noise_variance, samples, seed, (receiver,))
    discarded = int(np.count_nonzero(~ok)) if receiver == "zf" else 0
    if discarded:
        log.warning("discarded %d ill-conditioned draws", discarded)
    values = stats[receiver][ok] if receiver == "zf" else stats[receiver]
    return EmpiricalDistribution(np.sort(values), discarded)


def semi_analytic_ser(profile, receiver, user, noise_variance, mod, samples, seed):
    """Average of the exact conditional SEP over channel draws.

    Returns ``(ser, std_error)``.
    """
    if samples < 1000:
        raise ValueError("use at least 1000 samples")

    def work(b, n):
        h = _block(profile.p, seed, b)[:n]
        if receiver == "zf":
            x, ok = _zf_core(h, noise_variance, user)
            x = x[ok]
        elif receiver == "mmse":
            x = mmse_sinr(h, noise_variance, user)
        else:
            raise ValueError(f"unknown receiver {receiver!r}")
        sep = conditional_sep(x, mod)
        return sep.sum(), (sep**2).sum(), len(sep)

    parts = _map_blocks(work, samples)
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    count = sum(p[2] for p in parts)
    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0) * count / (count - 1)
    return mean, math.sqrt(var / count)
