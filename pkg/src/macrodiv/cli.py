"""``macrodiv`` command line.

User indices are 1-based here and 0-based everywhere else.  ``--noise-db``
sets the noise variance in dB; ``--snr-db a:s:b`` sweeps the transmit SNR
``1 / sigma^2`` in dB.  Exit codes: 0 ok, 2 bad configuration, 3 numerical
degeneracy.
"""

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRootsError, QuadratureError, SingularProfileError
from .mmse import mmse_mixture
from .montecarlo import SingularChannelError, empirical_cdf, semi_analytic_ser
from .profile import (
    BUILTIN_NAMES,
    Scenario,
    builtin_profile,
    drop_with_details,
    dump_profile,
    load_profile,
    load_scenario,
    normalize_columns,
    user_view,
)
from .ser import ModulationSpec, mmse_high_snr, ser_from_mixture, zf_high_snr
from .zf import zf_k0, zf_mixture

log = logging.getLogger("macrodiv")

COMMANDS = ("analyze", "ser", "metric", "simulate", "drop", "compare")
GRID_POINTS = 400


class ConfigError(Exception):
    pass


@dataclass
class Table:
    columns: dict
    summary: dict

    def to_csv(self):
        names = list(self.columns)
        lines = [",".join(names)]
        for row in zip(*self.columns.values()):
            lines.append(",".join(_fmt(v) for v in row))
        for key, value in self.summary.items():
            lines.append(f"# {key}={_fmt(value)}")
        return "\n".join(lines) + "\n"

    def to_object(self):
        def clean(v):
            if isinstance(v, (float, np.floating)):
                return float(v) if math.isfinite(v) else None
            if isinstance(v, (np.integer,)):
                return int(v)
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v

        obj = {
            "columns": {k: [clean(v) for v in col] for k, col in self.columns.items()},
            "summary": {k: clean(v) for k, v in self.summary.items()},
        }
        return json.dumps(obj, indent=2) + "\n"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def parse_sweep(text):
    """``a:s:b`` (inclusive) or a single value, in dB."""
    parts = text.split(":")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad sweep {text!r}") from None
    if not all(math.isfinite(v) for v in values):
        raise ConfigError("sweep bounds must be finite")
    if len(values) == 1:
        return np.array(values)
    if len(values) != 3:
        raise ConfigError(f"sweep must be a:s:b, got {text!r}")
    a, s, b = values
    if s == 0 or (b - a) * s < 0:
        raise ConfigError(f"sweep step {s} does not reach {b} from {a}")
    count = int(math.floor((b - a) / s + 1e-9)) + 1
    return a + s * np.arange(count)


def build_parser():
    parser = argparse.ArgumentParser(prog="macrodiv", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--profile", help="macrodiv-profile-v1 JSON file")
        src.add_argument("--builtin", choices=BUILTIN_NAMES)
        src.add_argument("--drop-spec", help="macrodiv-scenario-v1 JSON file; drawn with --seed")
        p.add_argument("--normalize", action="store_true", help="scale each column to unit sum")
        p.add_argument("--user", type=int, default=1, help="1-based user index")
        p.add_argument("--receiver", choices=("mmse", "zf"), default="zf")
        noise = p.add_mutually_exclusive_group()
        noise.add_argument("--noise-db", type=float, help="noise variance in dB")
        noise.add_argument("--snr-db", help="transmit SNR sweep a:s:b in dB")
        p.add_argument("--mod", default="qpsk")
        p.add_argument("--samples", type=int, default=0)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out")
        p.add_argument("--format", choices=("csv", "object"), default="csv")
        if name == "drop":
            p.add_argument("--users", type=int)
            p.add_argument("--antennas-per-bs", type=int)
    return parser


# -- config helpers ---------------------------------------------------------


def _profile(args):
    if args.profile:
        prof = load_profile(args.profile)
    elif args.builtin:
        prof = builtin_profile(args.builtin)
    elif args.drop_spec:
        prof = drop_with_details(load_scenario(args.drop_spec), args.seed).profile
    else:
        raise ConfigError("one of --profile, --builtin or --drop-spec is required")
    return normalize_columns(prof) if args.normalize else prof


def _user(args, prof):
    if not 1 <= args.user <= prof.n:
        raise ConfigError(f"--user must be in 1..{prof.n}")
    return args.user - 1


def _noise_levels(args, default_snr_db=None):
    """``(snr_db, noise_variance)`` arrays."""
    if args.noise_db is not None:
        noise = np.array([10.0 ** (args.noise_db / 10.0)])
        return -np.array([args.noise_db]), noise
    if args.snr_db is not None:
        snr_db = parse_sweep(args.snr_db)
    elif default_snr_db is not None:
        snr_db = parse_sweep(default_snr_db)
    else:
        raise ConfigError("--noise-db or --snr-db is required")
    return snr_db, 10.0 ** (-snr_db / 10.0)


def _samples(args):
    if args.samples < 0:
        raise ConfigError("--samples must be nonnegative")
    if 0 < args.samples < 1000:
        raise ConfigError("use --samples 0 or at least 1000")
    return args.samples


def _mod(args):
    try:
        return ModulationSpec.from_name(args.mod)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _mixture(receiver, view, noise):
    if receiver == "zf":
        return zf_mixture(view, noise)
    return mmse_mixture(view, noise)


def _asymptote(receiver, view, mod):
    try:
        return (zf_high_snr if receiver == "zf" else mmse_high_snr)(view, mod)
    except SingularProfileError as exc:
        log.warning("no high-SNR asymptote: %s", exc)
        return None


# -- commands ---------------------------------------------------------------


def cmd_analyze(args):
    prof = _profile(args)
    user = _user(args, prof)
    _, noise = _noise_levels(args)
    if len(noise) != 1:
        raise ConfigError("analyze needs a single noise level")
    noise = float(noise[0])
    samples = _samples(args)
    mix = _mixture(args.receiver, user_view(prof, user), noise)
    summary = {"noise_variance": noise, "mean_approx": mix.mean}
    emp = None
    if samples:
        emp = empirical_cdf(prof, args.receiver, user, noise, samples, args.seed)
        lo, hi = emp.quantile(0.001), emp.quantile(0.999)
    else:
        lo, hi = mix.quantile(0.001), mix.quantile(0.999)
    z = np.geomspace(lo, hi, GRID_POINTS)
    cols = {"z": z, "pdf_approx": mix.pdf(z), "cdf_approx": mix.cdf(z)}
    if emp is not None:
        cols["cdf_empirical"] = emp.cdf(z)
        summary["ks_distance"] = emp.ks_distance(mix.cdf)
        summary["mean_empirical"] = emp.mean
        summary["discarded"] = emp.discarded
    return Table(cols, summary)


def cmd_ser(args):
    prof = _profile(args)
    user = _user(args, prof)
    snr_db, noise = _noise_levels(args)
    mod = _mod(args)
    samples = _samples(args)
    view = user_view(prof, user)
    asym = _asymptote(args.receiver, view, mod)
    cols = {"snr_db": snr_db, "ser_mixture": [], "ser_highsnr": []}
    if samples:
        cols["ser_mc"], cols["mc_stderr"] = [], []
    for s2 in noise:
        cols["ser_mixture"].append(ser_from_mixture(_mixture(args.receiver, view, s2), mod))
        cols["ser_highsnr"].append(float(asym.ser_at_noise(s2)) if asym else math.nan)
        if samples:
            ser, se = semi_analytic_ser(prof, args.receiver, user, s2, mod, samples, args.seed)
            cols["ser_mc"].append(ser)
            cols["mc_stderr"].append(se)
    summary = {"modulation": mod.name, "receiver": args.receiver}
    if asym:
        summary.update(diversity=asym.diversity, array_gain=asym.array_gain)
    return Table(cols, summary)


def cmd_metric(args):
    prof = _profile(args)
    mod = _mod(args)
    cols = {"user": [], "zf_k0": [], "diversity": [], "zf_array_gain": []}
    if prof.n >= 2:
        cols["mmse_array_gain"] = []
    for k in range(prof.n):
        view = user_view(prof, k)
        zf = zf_high_snr(view, mod)
        cols["user"].append(k + 1)
        cols["zf_k0"].append(zf.k0)
        cols["diversity"].append(zf.diversity)
        cols["zf_array_gain"].append(zf.array_gain)
        if prof.n >= 2:
            cols["mmse_array_gain"].append(mmse_high_snr(view, mod).array_gain)
    return Table(cols, {"modulation": mod.name})


def cmd_simulate(args):
    prof = _profile(args)
    user = _user(args, prof)
    snr_db, noise = _noise_levels(args)
    mod = _mod(args)
    samples = _samples(args) or 10_000
    cols = {k: [] for k in ("snr_db", "mean_sinr", "mean_stderr", "ser_mc", "mc_stderr", "discarded")}
    for db, s2 in zip(snr_db, noise):
        emp = empirical_cdf(prof, args.receiver, user, s2, samples, args.seed)
        ser, se = semi_analytic_ser(prof, args.receiver, user, s2, mod, samples, args.seed)
        cols["snr_db"].append(db)
        cols["mean_sinr"].append(emp.mean)
        cols["mean_stderr"].append(emp.std_error)
        cols["ser_mc"].append(ser)
        cols["mc_stderr"].append(se)
        cols["discarded"].append(emp.discarded)
    return Table(cols, {"samples": samples, "receiver": args.receiver, "modulation": mod.name})


def cmd_drop(args):
    scenario = load_scenario(args.drop_spec) if args.drop_spec else Scenario()
    overrides = {}
    if args.users is not None:
        overrides["users"] = args.users
    if args.antennas_per_bs is not None:
        overrides["antennas_per_bs"] = args.antennas_per_bs
    if overrides:
        scenario = Scenario(**{**scenario.__dict__, **overrides})
    if scenario.users > scenario.n_r:
        raise ConfigError(f"{scenario.users} users exceed {scenario.n_r} receive antennas")
    drop = drop_with_details(scenario, args.seed)
    for k, t in enumerate(drop.transmit_db):
        print(f"user {k + 1}: T = {t:.3f} dB", file=sys.stderr)
    return dump_profile(drop.profile)


def cmd_compare(args):
    prof = _profile(args)
    snr_db, noise = _noise_levels(args, default_snr_db="0:5:30")
    mod = _mod(args)
    cols = {"snr_db": snr_db}
    for k in range(prof.n):
        view = user_view(prof, k)
        for rx in ("zf", "mmse"):
            cols[f"{rx}_user{k + 1}"] = [ser_from_mixture(_mixture(rx, view, s2), mod) for s2 in noise]
    k0 = [zf_k0(user_view(prof, k)) for k in range(prof.n)]
    last = [cols[f"zf_user{k + 1}"][-1] for k in range(prof.n)]
    k0_order = [int(i) + 1 for i in np.argsort(k0, kind="stable")]
    ser_order = [int(i) + 1 for i in np.argsort(last, kind="stable")]
    summary = {
        "zf_k0": k0,
        "k0_order": k0_order,
        "ser_order": ser_order,
        "ordering_matches": k0_order == ser_order,
    }
    return Table(cols, summary)


HANDLERS = {
    "analyze": cmd_analyze,
    "ser": cmd_ser,
    "metric": cmd_metric,
    "simulate": cmd_simulate,
    "drop": cmd_drop,
    "compare": cmd_compare,
}


def _emit(result, args):
    if isinstance(result, Table):
        text = result.to_csv() if args.format == "csv" else result.to_object()
    else:
        text = result
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        _emit(HANDLERS[args.command](args), args)
    except (DegenerateRootsError, QuadratureError, SingularChannelError) as exc:
        print(f"macrodiv: numerical degeneracy: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ValueError, KeyError, IndexError, OSError) as exc:
        print(f"macrodiv: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
