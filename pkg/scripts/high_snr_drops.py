"""Ratio of the high-SNR SER asymptote to the mixture SER on random 6x4 drops."""

import argparse

import numpy as np

from macrodiv import ModulationSpec, Scenario, generate_drop, user_view
from macrodiv import mmse_high_snr, mmse_mixture, ser_from_mixture, zf_high_snr, zf_k0, zf_mixture


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--drops", type=int, default=10)
    ap.add_argument("--mod", default="qpsk")
    ap.add_argument("--max-ser", type=float, default=1e-4)
    args = ap.parse_args()
    mod = ModulationSpec.from_name(args.mod)
    scenario = Scenario(users=4, antennas_per_bs=2)

    print("seed,zf_k0,receiver,array_gain,min_ratio,max_ratio,worst_snr_db")
    for seed in range(args.drops):
        view = user_view(generate_drop(scenario, seed), 0)
        for rx, asym_f, mixf in (("zf", zf_high_snr, zf_mixture), ("mmse", mmse_high_snr, mmse_mixture)):
            asym = asym_f(view, mod)
            rows = []
            for db in np.arange(0, 61, 1.0):
                s2 = 10 ** (-db / 10)
                sm = ser_from_mixture(mixf(view, s2), mod)
                if sm <= args.max_ser:
                    rows.append((db, float(asym.ser_at_noise(s2)) / sm))
            db, r = np.array(rows).T
            worst = db[np.argmax(np.abs(np.log(r)))]
            print(f"{seed},{zf_k0(view):.4g},{rx},{asym.array_gain:.4g},{r.min():.3f},{r.max():.3f},{worst:g}")


if __name__ == "__main__":
    main()
