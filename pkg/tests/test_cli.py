import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from macrodiv import cli
from macrodiv.errors import DegenerateRootsError
from macrodiv.linalg import perm_rect, perm_square
from macrodiv.profile import PowerProfile, builtin_profile, save_profile, user_view


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    rows = [line for line in text.splitlines() if not line.startswith("#")]
    data = list(csv.DictReader(io.StringIO("\n".join(rows))))
    summary = dict(line[2:].split("=", 1) for line in text.splitlines() if line.startswith("# "))
    return data, summary


def col(data, name):
    return np.array([float(r[name]) for r in data])


def test_sweep_parsing():
    np.testing.assert_allclose(cli.parse_sweep("0:5:20"), [0, 5, 10, 15, 20])
    np.testing.assert_allclose(cli.parse_sweep("7"), [7])
    np.testing.assert_allclose(cli.parse_sweep("10:-5:0"), [10, 5, 0])
    for bad in ("0:0:5", "0:1", "a:b:c", "0:1:inf", "5:1:0"):
        with pytest.raises(cli.ConfigError):
            cli.parse_sweep(bad)


def test_analyze_without_samples(capsys):
    code, out, _ = run(capsys, "analyze", "--builtin", "P_D4", "--noise-db", "0")
    assert code == 0
    data, summary = table(out)
    assert list(data[0]) == ["z", "pdf_approx", "cdf_approx"]
    assert len(data) == 400
    assert "ks_distance" not in summary
    cdf = col(data, "cdf_approx")
    assert cdf[0] == pytest.approx(0.001, abs=1e-9) and cdf[-1] == pytest.approx(0.999, abs=1e-9)


def test_analyze_square_profile_is_exponential(capsys, tmp_path):
    p = np.array([[1.0, 0.3, 0.2], [0.5, 2.0, 0.1], [0.2, 0.4, 1.5]])
    path = tmp_path / "p.json"
    save_profile(PowerProfile(p), path)
    code, out, _ = run(capsys, "analyze", "--profile", str(path), "--noise-db", "-3")
    assert code == 0
    data, _ = table(out)
    s2 = 10**-0.3
    theta = perm_rect(user_view(PowerProfile(p), 0).q2) / perm_square(p)
    z = col(data, "z")
    np.testing.assert_allclose(col(data, "cdf_approx"), 1 - np.exp(-s2 * theta * z), atol=1e-13)


def test_analyze_with_samples(capsys):
    code, out, _ = run(
        capsys, "analyze", "--builtin", "P_M", "--receiver", "zf", "--user", "1",
        "--noise-db", "-10", "--samples", "100000", "--seed", "1",
    )
    assert code == 0
    data, summary = table(out)
    assert "cdf_empirical" in data[0]
    assert float(summary["ks_distance"]) <= 0.02


def test_ser_asymptote_tracks_mixture(capsys):
    code, out, _ = run(capsys, "ser", "--builtin", "P_D4", "--receiver", "zf", "--snr-db", "0:2:40", "--mod", "qpsk")
    assert code == 0
    data, summary = table(out)
    assert int(summary["diversity"]) == 3
    mix, hi = col(data, "ser_mixture"), col(data, "ser_highsnr")
    low = mix <= 1e-4
    assert low.any()
    ratio = hi[low] / mix[low]
    assert np.all((ratio >= 0.8) & (ratio <= 1.2))


def test_ser_single_point(capsys):
    code, out, _ = run(capsys, "ser", "--builtin", "P_M", "--snr-db", "15")
    data, _ = table(out)
    assert code == 0 and len(data) == 1 and "ser_mc" not in data[0]


def test_ser_mmse_drop_agrees_with_simulation(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps({"format": "macrodiv-scenario-v1", "users": 3, "antennas_per_bs": 1}))
    code, out, _ = run(
        capsys, "ser", "--drop-spec", str(spec), "--seed", "0", "--receiver", "mmse",
        "--snr-db", "0:5:30", "--samples", "50000",
    )
    assert code == 0
    data, _ = table(out)
    mix, mc = col(data, "ser_mixture"), col(data, "ser_mc")
    sel = mix <= 1e-2
    assert sel.any()
    np.testing.assert_allclose(mix[sel], mc[sel], rtol=0.2)


def test_metric(capsys):
    code, out, _ = run(capsys, "metric", "--builtin", "P_D4")
    assert code == 0
    data, _ = table(out)
    assert float(f"{float(data[0]['zf_k0']):.2g}") == 1.3
    assert "mmse_array_gain" in data[0] and int(data[0]["diversity"]) == 3


def test_metric_symmetry_and_scaling(capsys, tmp_path):
    code, out, _ = run(capsys, "metric", "--builtin", "P_P", "--normalize")
    data, _ = table(out)
    assert len({r["zf_k0"] for r in data}) == 1
    assert len({r["mmse_array_gain"] for r in data}) == 1
    p = builtin_profile("P_M").p.copy()
    path = tmp_path / "a.json"
    save_profile(PowerProfile(p), path)
    _, base, _ = run(capsys, "metric", "--profile", str(path))
    p[:, 1:] *= 7
    save_profile(PowerProfile(p), path)
    _, scaled, _ = run(capsys, "metric", "--profile", str(path))
    assert col(table(base)[0], "zf_k0")[0] == pytest.approx(col(table(scaled)[0], "zf_k0")[0], rel=1e-12)


def test_metric_single_user(capsys, tmp_path):
    path = tmp_path / "one.json"
    save_profile(PowerProfile([[1.0], [2.0]]), path)
    code, out, _ = run(capsys, "metric", "--profile", str(path))
    data, _ = table(out)
    assert code == 0 and "mmse_array_gain" not in data[0]


def test_simulate(capsys):
    code, out, _ = run(capsys, "simulate", "--builtin", "P_M", "--snr-db", "10:10:20", "--samples", "2000")
    assert code == 0
    data, summary = table(out)
    assert len(data) == 2 and summary["samples"] == "2000"
    assert col(data, "ser_mc")[1] < col(data, "ser_mc")[0]


def test_drop(capsys, tmp_path):
    out_path = tmp_path / "d.json"
    code, out, err = run(capsys, "drop", "--users", "4", "--antennas-per-bs", "2", "--seed", "7", "--out", str(out_path))
    assert code == 0 and out == ""
    assert err.count("dB") == 4
    obj = json.loads(out_path.read_text())
    p = np.array(obj["p"])
    assert obj["format"] == "macrodiv-profile-v1" and p.shape == (6, 4)
    for b in range(3):
        np.testing.assert_array_equal(p[2 * b], p[2 * b + 1])
    again = tmp_path / "e.json"
    run(capsys, "drop", "--users", "4", "--antennas-per-bs", "2", "--seed", "7", "--out", str(again))
    assert again.read_bytes() == out_path.read_bytes()


def test_drop_too_many_users(capsys):
    code, _, err = run(capsys, "drop", "--users", "4")
    assert code == 2 and "exceed" in err


def test_compare_motivation(capsys):
    code, out, _ = run(capsys, "compare", "--builtin", "P_M", "--normalize", "--snr-db", "0:5:30")
    assert code == 0
    data, summary = table(out)
    assert summary["ordering_matches"] == "true"
    for k in (1, 2, 3):
        assert np.all(col(data, f"mmse_user{k}") <= col(data, f"zf_user{k}") * (1 + 1e-12))


def test_compare_symmetric(capsys):
    _, out, _ = run(capsys, "compare", "--builtin", "P_P", "--normalize", "--snr-db", "0:10:30")
    data, _ = table(out)
    for rx in ("zf", "mmse"):
        a, b, c = (col(data, f"{rx}_user{k}") for k in (1, 2, 3))
        np.testing.assert_allclose(a, b, atol=1e-12)
        np.testing.assert_allclose(a, c, atol=1e-12)


def test_object_format(capsys):
    _, out, _ = run(capsys, "metric", "--builtin", "P_D4", "--format", "object")
    obj = json.loads(out)
    assert obj["columns"]["user"] == [1, 2, 3, 4]
    assert obj["summary"]["modulation"] == "qpsk"
    _, csv_out, _ = run(capsys, "metric", "--builtin", "P_D4")
    assert [float(r["zf_k0"]) for r in table(csv_out)[0]] == obj["columns"]["zf_k0"]


def test_csv_round_trips_exactly(capsys):
    _, out, _ = run(capsys, "metric", "--builtin", "P_D4")
    k0 = float(table(out)[0][0]["zf_k0"])
    from macrodiv.zf import zf_k0

    assert k0 == zf_k0(user_view(builtin_profile("P_D4"), 0))


def test_output_is_byte_stable(capsys):
    args = ("analyze", "--builtin", "P_D4", "--noise-db", "0", "--samples", "2000", "--seed", "5")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["metric"],
        ["analyze", "--builtin", "P_M"],
        ["analyze", "--builtin", "P_M", "--noise-db", "0", "--user", "4"],
        ["analyze", "--builtin", "P_M", "--snr-db", "0:5:10"],
        ["ser", "--builtin", "P_M", "--snr-db", "0:0:1"],
        ["ser", "--builtin", "P_M", "--snr-db", "10", "--mod", "ook"],
        ["ser", "--builtin", "P_M", "--snr-db", "10", "--samples", "10"],
        ["metric", "--profile", "/nonexistent/profile.json"],
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("macrodiv:")


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["analyze", "--builtin", "P_Q"])
    assert info.value.code == 2


def test_degeneracy_exits_3(capsys, monkeypatch):
    def boom(*_):
        raise DegenerateRootsError("clustered", (1.0, 1.0))

    monkeypatch.setattr(cli, "zf_mixture", boom)
    code, _, err = run(capsys, "analyze", "--builtin", "P_M", "--noise-db", "0")
    assert code == 3 and "degeneracy" in err


def test_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "macrodiv", "metric", "--builtin", "P_D4"], capture_output=True, text=True
    )
    assert res.returncode == 0 and res.stdout.startswith("user,zf_k0")
