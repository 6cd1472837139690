"""Scheduling metric and high-SNR constants for the 6x4 reference drop."""

import math

from macrodiv import ModulationSpec, builtin_profile, mmse_high_snr, user_view, zf_high_snr

qpsk = ModulationSpec.from_name("qpsk")
prof = builtin_profile("P_D4")
print("user,zf_k0,diversity,zf_array_gain_db,mmse_array_gain_db")
for k in range(prof.n):
    view = user_view(prof, k)
    zf, mm = zf_high_snr(view, qpsk), mmse_high_snr(view, qpsk)
    print(f"{k + 1},{zf.k0:.4g},{zf.diversity},{10 * math.log10(zf.array_gain):.2f},{10 * math.log10(mm.array_gain):.2f}")
