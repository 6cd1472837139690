"""K-S distance between approximate and simulated SINR/SNR laws over random drops."""

import argparse
import math

import numpy as np

from macrodiv import Scenario, generate_drop, mmse_mixture, receiver_samples, user_view, zf_mixture
from macrodiv.montecarlo import EmpiricalDistribution


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--drops", type=int, default=10)
    ap.add_argument("--users", type=int, default=3)
    ap.add_argument("--antennas-per-bs", type=int, default=1)
    ap.add_argument("--mean-db", type=float, default=10.0, help="target approximate mean ZF SNR")
    ap.add_argument("--samples", type=int, default=100_000)
    args = ap.parse_args()

    scenario = Scenario(users=args.users, antennas_per_bs=args.antennas_per_bs)
    print("seed,noise_variance,receiver,mean_db_sim,mean_db_approx,ks")
    for seed in range(args.drops):
        prof = generate_drop(scenario, seed)
        view = user_view(prof, 0)
        s2 = zf_mixture(view, 1.0).mean / 10 ** (args.mean_db / 10)
        stats, ok = receiver_samples(prof, 0, s2, args.samples, seed=seed)
        for rx, mixf in (("zf", zf_mixture), ("mmse", mmse_mixture)):
            emp = EmpiricalDistribution(np.sort(stats[rx][ok] if rx == "zf" else stats[rx]))
            mix = mixf(view, s2)
            ks = emp.ks_distance(mix.cdf)
            print(
                f"{seed},{s2:.4g},{rx},{10 * math.log10(emp.mean):.2f},"
                f"{10 * math.log10(mix.mean):.2f},{ks:.4f}"
            )


if __name__ == "__main__":
    main()
