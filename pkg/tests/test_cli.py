import csv
import json
import math

import pytest

from subplanck.cli import main


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def read_table(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    header = json.loads(lines[0][2:])
    rows = list(csv.DictReader(lines[1:]))
    return header, rows


def test_state_ssdns_odd_support(tmp_path):
    code, out = run(tmp_path, "state", "ssdns", "--r", "0.3", "--alpha", "1.8", "--n", "1")
    assert code == 0
    header, rows = read_table(out)
    assert all(int(r["m"]) % 2 == 1 for r in rows)
    assert header["tail_mass"] <= 1e-12
    assert header["spec"] == {"kind": "ssdns", "r": 0.3, "alpha": 1.8, "n": 1}


def test_state_compass_step_four(tmp_path):
    code, out = run(tmp_path, "state", "compass", "--beta", "1.41", "--l", "2", "--sign", "+")
    assert code == 0
    header, rows = read_table(out)
    ms = [int(r["m"]) for r in rows]
    assert header["support_step"] == 4 and ms[0] == 2


def test_state_fock_single_row(tmp_path):
    code, out = run(tmp_path, "state", "fock", "--n", "0")
    _, rows = read_table(out)
    assert code == 0 and rows == [{"m": "0", "prob": "1.0"}]


def test_stdout_when_no_out(capsys):
    assert main(["state", "fock", "--n", "2"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "2,1.0"


def test_invalid_spec_exit_two(tmp_path):
    assert run(tmp_path, "state", "compass", "--beta", "1", "--l", "5")[0] == 2
    assert run(tmp_path, "state", "ssns", "--r", "0")[0] == 2
    assert run(tmp_path, "state")[0] == 2
    assert run(tmp_path, "nonsense")[0] == 2


def test_truncation_overflow_exit_three(tmp_path):
    assert run(tmp_path, "state", "coherent", "--alpha", "8", "--max-dim", "60")[0] == 3


def test_unstable_regime_exit_three(tmp_path):
    assert run(tmp_path, "prepare", "h1", "--Lambda", "1", "--G", "0.6")[0] == 3


def test_fidelity_table(tmp_path):
    code, out = run(tmp_path, "fidelity-table", "--debug-self")
    assert code == 0
    _, rows = read_table(out)
    assert len(rows) == 8
    row2 = rows[1]
    assert (row2["state"], row2["n"], row2["l"], row2["sign"]) == ("ssns", "2", "2", "+")
    assert abs(float(row2["fidelity"]) - 0.9997) <= 5e-4
    row4 = rows[3]
    assert row4["l"] == "1" and abs(float(row4["fidelity"]) - 0.9998) <= 5e-4
    assert rows[6]["note"] == "ambiguous_l"
    assert float(rows[7]["fidelity"]) == pytest.approx(1, abs=1e-12)


def test_fidelity_table_bad_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    assert run(tmp_path, "fidelity-table", "--config", str(cfg))[0] == 2
    assert run(tmp_path, "fidelity-table", "--config", str(tmp_path / "missing.cfg"))[0] == 2


def _small_grid():
    return ["--nx", "41", "--np", "41", "--x-min", "-4", "--x-max", "4",
            "--p-min", "-4", "--p-max", "4"]


def test_wigner_fock_peak_and_sidecar(tmp_path):
    code, out = run(tmp_path, "wigner", "fock", "--n", "0", *_small_grid())
    assert code == 0
    _, rows = read_table(out)
    peak = max(rows, key=lambda r: float(r["W"]))
    assert (float(peak["x"]), float(peak["p"])) == (0.0, 0.0)
    assert float(peak["W"]) == pytest.approx(1 / math.pi, abs=1e-6)
    side = json.loads((tmp_path / "out.csv.json").read_text())
    assert side["grid"]["nx"] == 41
    assert side["normalization"] == pytest.approx(1, abs=1e-3)


def test_wigner_ssdns_fringes(tmp_path):
    code, out = run(tmp_path, "wigner", "ssdns", "--r", "0.45", "--alpha", "2", "--n", "1",
                    *_small_grid())
    assert code == 0
    _, rows = read_table(out)
    W = {(float(r["x"]), float(r["p"])): float(r["W"]) for r in rows}
    xs = sorted({k[0] for k in W})
    centre_x = [W[(x, 0.0)] for x in xs if abs(x) <= 1]
    centre_p = [W[(0.0, p)] for p in xs if abs(p) <= 1]
    for line in (centre_x, centre_p):
        signs = [v > 0 for v in line if abs(v) > 1e-8]
        assert any(a != b for a, b in zip(signs, signs[1:]))


def test_wigner_ssns_n4(tmp_path):
    code, out = run(tmp_path, "wigner", "ssns", "--r", "0.45", "--n", "4", *_small_grid())
    assert code == 0 and len(read_table(out)[1]) == 41 * 41


def test_wigner_grid_overflow_is_usage_error(tmp_path):
    assert run(tmp_path, "wigner", "fock", "--nx", "1")[0] == 2


def test_overlap_with_wigner_column(tmp_path):
    code, out = run(tmp_path, "overlap", "coherent", "--alpha", "0.5", "--delta", "0.3",
                    "--delta", "0.2+0.1i", "--via-wigner", "--nx", "64")
    assert code == 2  # --nx is not an overlap flag
    code, out = run(tmp_path, "overlap", "coherent", "--alpha", "0.5", "--delta", "0.3",
                    "--delta", "0.2+0.1i")
    _, rows = read_table(out)
    assert code == 0
    assert float(rows[0]["overlap"]) == pytest.approx(math.exp(-0.09), abs=1e-12)
    assert float(rows[1]["delta_im"]) == 0.1


def test_sensitivity_table(tmp_path):
    code, out = run(tmp_path, "sensitivity", "fock", "--n", "1", "--R", "10")
    _, rows = read_table(out)
    assert code == 0 and len(rows) == 3
    for r in rows:
        assert float(r["c"]) == pytest.approx(3) and float(r["variance"]) == pytest.approx(1 / 30)


def test_sensitivity_protocol_reproducible(tmp_path):
    args = ("sensitivity", "compass", "--beta", "2", "--l", "0", "--sign", "-",
            "--shift", "0.05", "--R", "100000", "--seeds", "5", "--seed", "11")
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    _, rows = read_table(a)
    assert [r["seed"] for r in rows] == ["11", "12", "13", "14", "15"]


def test_sensitivity_shift_outside_window(tmp_path):
    assert run(tmp_path, "sensitivity", "compass", "--beta", "2", "--l", "0", "--sign", "-",
               "--shift", "1.0", "--R", "100")[0] == 2


def test_damping_fock(tmp_path):
    code, out = run(tmp_path, "damping", "--state", "fock", "--n", "1", "--kappa", "0", "--t", "1")
    _, rows = read_table(out)
    assert code == 0 and float(rows[0]["delta_kappa"]) == 0.0


def test_damping_vacuum_is_usage_error(tmp_path):
    assert run(tmp_path, "damping", "fock", "--n", "0", "--kappa", "0.1")[0] == 2


def test_damping_fig6(tmp_path):
    code, out = run(tmp_path, "damping", "--fig6", "--beta-min", "0.05", "--beta-max", "3",
                    "--beta-steps", "4")
    _, rows = read_table(out)
    assert code == 0 and len(rows) == 8
    assert list(rows[0]) == ["beta", "state", "var_over_mean_sq", "inv_mean"]


def test_ratio_from_config_has_crossings(tmp_path):
    cfg = tmp_path / "fig5b.cfg"
    cfg.write_text("# ratio crossing parameter set\nkind = ssdns\nr = 0.2\nalpha = 0.7\nn = 1\n"
                   "ks_l = 0\nks_sign = -\nbeta_min = 0.5\nbeta_max = 2\nbeta_steps = 31\n"
                   "theta = 0.7853981633974483\n")
    code, out = run(tmp_path, "ratio", "--config", str(cfg))
    header, rows = read_table(out)
    assert code == 0
    assert any(r["crossing"] for r in rows)
    assert header["variance_crossings"] and header["mean_n_crossings"]


def test_prepare_h1(tmp_path):
    code, out = run(tmp_path, "prepare", "h1", "--Lambda", "1", "--G", "0.3", "--g", "0.2")
    header, rows = read_table(out)
    assert code == 0 and header["residual"] < 1e-8
    assert all(float(r["fidelity"]) > 1 - 1e-8 for r in rows)


def test_prepare_h2_scan(tmp_path):
    code, out = run(tmp_path, "prepare", "h2", "--n", "0", "--g1", "0.1", "--g2", "0.2",
                    "--omega", "1", "--scan-t", "--t-min", "0.5", "--t-max", "3", "--t-steps", "6")
    header, rows = read_table(out)
    assert code == 0 and len(rows) == 6
    assert header["best"]["fidelity"] > 0.99


def test_config_round_trip(tmp_path):
    code, first = run(tmp_path, "sensitivity", "ssdns", "--r", "0.63", "--alpha", "1.2",
                      "--n", "1", "--theta", "0.3", "--theta", "1.1", "--R", "7", name="first.csv")
    assert code == 0
    header, _ = read_table(first)
    cfg = tmp_path / "echo.json"
    cfg.write_text(json.dumps(header["config"]))
    code, second = run(tmp_path, "sensitivity", "--config", str(cfg), name="second.csv")
    assert code == 0
    assert first.read_bytes() == second.read_bytes()


def test_cli_flags_override_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "fock", "n": 3}))
    _, out = run(tmp_path, "state", "--config", str(cfg), "--n", "1")
    _, rows = read_table(out)
    assert rows == [{"m": "1", "prob": "1.0"}]


def test_conflicting_kinds_rejected(tmp_path):
    assert run(tmp_path, "state", "fock", "--state", "coherent")[0] == 2


def test_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SUBPLANCK_OUTPUT_DIR", str(tmp_path / "results"))
    assert main(["state", "fock", "--n", "1", "--out", "f.csv"]) == 0
    assert (tmp_path / "results" / "f.csv").exists()


def test_reruns_are_byte_identical(tmp_path):
    args = ("damping", "--fig6", "--beta-steps", "3")
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert not list(tmp_path.glob(".*.tmp"))
