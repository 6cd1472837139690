import math

import numpy as np
import pytest
from scipy.stats import gamma

from macrodiv.montecarlo import (
    BLOCK,
    SingularChannelError,
    empirical_cdf,
    mmse_sinr,
    receiver_samples,
    sample_channel,
    sample_channels,
    semi_analytic_ser,
    zf_snr,
    zf_snr_projection,
)
from macrodiv.profile import PowerProfile, builtin_profile, normalize_columns
from macrodiv.ser import ModulationSpec
from oracles import random_profile

QPSK = ModulationSpec.from_name("qpsk")
BPSK = ModulationSpec.from_name("bpsk")


def random_h(rng, n_r, n):
    return (rng.standard_normal((n_r, n)) + 1j * rng.standard_normal((n_r, n))) / math.sqrt(2)


def test_zero_power_links_are_zero():
    prof = PowerProfile([[1.0, 0.0], [0.0, 2.0]])
    h = sample_channels(prof, 100, seed=0)
    assert np.all(h[:, 0, 1] == 0) and np.all(h[:, 1, 0] == 0)


def test_link_powers():
    p = builtin_profile("P_D4").p
    h = sample_channels(PowerProfile(p), 100_000, seed=1)
    pw = np.abs(h) ** 2
    se = pw.std(axis=0, ddof=1) / math.sqrt(len(pw))
    assert np.all(np.abs(pw.mean(axis=0) - p) <= 3.5 * se)


def test_single_draw_matches_bulk():
    prof = builtin_profile("P_M")
    bulk = sample_channels(prof, BLOCK + 50, seed=9)
    for idx in (0, 17, BLOCK - 1, BLOCK, BLOCK + 49):
        np.testing.assert_array_equal(sample_channel(prof, 9, idx).h, bulk[idx])
    np.testing.assert_array_equal(sample_channel(prof, 9, 3).h, sample_channel(prof, 9, 3).h)


def test_worker_count_does_not_change_results(monkeypatch):
    prof = builtin_profile("P_D4")
    runs = []
    for threads in ("1", "3"):
        monkeypatch.setenv("MACRODIV_THREADS", threads)
        stats, _ = receiver_samples(prof, 0, 0.1, 3 * BLOCK + 11, seed=4)
        runs.append(stats)
    for name in ("mmse", "zf"):
        np.testing.assert_array_equal(runs[0][name], runs[1][name])


def test_mmse_without_interference():
    rng = np.random.default_rng(0)
    h = random_h(rng, 4, 1)
    assert mmse_sinr(h, 0.5, 0) == pytest.approx(np.sum(np.abs(h) ** 2) / 0.5, rel=1e-12)


def test_orthogonal_interferer_is_harmless():
    h = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 1.0j]])
    norm = 1.0
    assert mmse_sinr(h, 0.25, 0) == pytest.approx(norm / 0.25, rel=1e-12)
    assert zf_snr(h, 0.25, 0) == pytest.approx(mmse_sinr(h, 0.25, 0), rel=1e-12)


def test_mmse_matches_sherman_morrison():
    rng = np.random.default_rng(1)
    for _ in range(20):
        h = random_h(rng, 5, 3) * random_profile(rng, 5, 3)
        s2 = 0.3
        rinv = np.eye(5) / s2
        for k in (1, 2):
            v = h[:, k]
            rv = rinv @ v
            rinv = rinv - np.outer(rv, np.conj(rv)) / (1 + np.conj(v) @ rv)
        want = (np.conj(h[:, 0]) @ rinv @ h[:, 0]).real
        assert mmse_sinr(h, s2, 0) == pytest.approx(want, rel=1e-10)


def test_zf_two_forms_agree():
    rng = np.random.default_rng(2)
    h = random_h(rng, 6, 4)[None] * random_profile(rng, 6, 4) * np.ones((50, 1, 1))
    h = h * np.exp(1j * rng.uniform(0, 6, h.shape))
    for user in range(4):
        np.testing.assert_allclose(zf_snr(h, 0.2, user), zf_snr_projection(h, 0.2, user), rtol=1e-9)


def test_zf_single_user():
    h = np.array([[1.0], [2.0j]])
    assert zf_snr(h, 0.5, 0) == pytest.approx(10.0)


def test_zf_singular():
    h = np.array([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularChannelError):
        zf_snr(h, 1.0, 0)


def test_per_draw_dominance():
    prof = builtin_profile("P_D4")
    stats, ok = receiver_samples(prof, 1, 0.05, 100_000, seed=3)
    assert ok.all()
    assert np.all(stats["mmse"] >= stats["zf"] * (1 - 1e-9))


def test_flat_zf_is_erlang():
    prof = PowerProfile(np.ones((4, 2)))
    emp = empirical_cdf(prof, "zf", 0, 1.0, 100_000, seed=5)
    assert emp.ks_distance(gamma(3).cdf) <= 0.01
    assert emp.discarded == 0


def test_mmse_mean_above_zf_mean():
    prof = normalize_columns(builtin_profile("P_M"))
    for k in range(3):
        a = empirical_cdf(prof, "mmse", k, 0.1, 20_000, seed=k)
        b = empirical_cdf(prof, "zf", k, 0.1, 20_000, seed=k)
        assert a.mean >= b.mean


def test_zf_scales_with_noise():
    prof = builtin_profile("P_M")
    a = empirical_cdf(prof, "zf", 0, 0.2, 5000, seed=6)
    b = empirical_cdf(prof, "zf", 0, 0.4, 5000, seed=6)
    np.testing.assert_allclose(b.sorted_samples, a.sorted_samples / 2, rtol=1e-12)


def test_empirical_distribution_api():
    emp = empirical_cdf(builtin_profile("P_P"), "mmse", 0, 1.0, 2000, seed=0)
    assert emp.count == 2000
    assert np.all(np.diff(emp.sorted_samples) >= 0)
    med = emp.quantile(0.5)
    assert emp.cdf(med) == pytest.approx(0.5, abs=1e-3)
    assert emp.cdf(emp.sorted_samples[-1]) == 1.0
    with pytest.raises(ValueError):
        empirical_cdf(builtin_profile("P_P"), "mmse", 0, 1.0, 999, seed=0)
    with pytest.raises(ValueError):
        receiver_samples(builtin_profile("P_P"), 0, 1.0, 1000, 0, receivers=("mrc",))


def test_running_mean_is_stable():
    emp_half = empirical_cdf(builtin_profile("P_D4"), "mmse", 0, 0.5, 50_000, seed=7)
    emp_full = empirical_cdf(builtin_profile("P_D4"), "mmse", 0, 0.5, 100_000, seed=7)
    assert emp_half.mean == pytest.approx(emp_full.mean, rel=0.01)


def test_seed_contract():
    a = semi_analytic_ser(builtin_profile("P_M"), "zf", 0, 0.1, QPSK, 5000, seed=3)
    b = semi_analytic_ser(builtin_profile("P_M"), "zf", 0, 0.1, QPSK, 5000, seed=3)
    assert a == b


def test_semi_analytic_vanishes_at_high_snr():
    prof = PowerProfile([[1.0], [1.0]])
    ser, _ = semi_analytic_ser(prof, "mmse", 0, 1e-8, QPSK, 2000, seed=0)
    assert ser < 1e-12


@pytest.mark.parametrize("snr_db", [0, 10, 20])
def test_semi_analytic_bpsk_closed_form(snr_db):
    snr = 10 ** (snr_db / 10)
    ser, se = semi_analytic_ser(PowerProfile([[1.0]]), "zf", 0, 1 / snr, BPSK, 100_000, seed=snr_db)
    assert abs(ser - 0.5 * (1 - math.sqrt(snr / (1 + snr)))) <= 3 * se


def test_symmetric_profile_users_agree():
    prof = normalize_columns(builtin_profile("P_P"))
    res = [semi_analytic_ser(prof, "zf", k, 10**-1.5, QPSK, 50_000, seed=k) for k in range(3)]
    for a, sa in res:
        for b, sb in res:
            assert abs(a - b) <= 3 * math.hypot(sa, sb)


def test_semi_analytic_rejects_unknown_receiver():
    with pytest.raises(ValueError):
        semi_analytic_ser(builtin_profile("P_P"), "mrc", 0, 1.0, QPSK, 1000, seed=0)
