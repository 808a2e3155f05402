import json
import subprocess
import sys

import pytest

from ssbounds.cli import main
from ssbounds.output import read_csv_meta


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_exponents(capsys):
    code, out, _ = run(["exponents", "--snr", "20"], capsys)
    assert code == 0
    assert "C_bits: 2.19615871138938" in out


def test_exponents_rejects_zero_snr(capsys):
    code, _, err = run(["exponents", "--snr", "0"], capsys)
    assert code == 3 and "snr" in err


def test_missing_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["exponents"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_module_entry_point_usage_code():
    r = subprocess.run([sys.executable, "-m", "ssbounds", "bound"], capture_output=True, text=True)
    assert r.returncode == 2


def test_bound_gaussian_has_empty_bin_column(capsys):
    code, out, _ = run(["bound", "--L", "20", "--a", "1", "--snr", "20", "--rate-frac", "0.4"], capsys)
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert rows[0].split(",")[4] == "log10_err_bin"
    assert all(r.split(",")[4] == "" for r in rows[1:])
    assert "not applicable" in out


def test_bound_binomial_all_columns(capsys):
    code, out, _ = run(["bound", "--L", "20", "--a", "1", "--snr", "20", "--rate-frac", "0.4",
                        "--dict", "binomial", "--d", "1000"], capsys)
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")][1:]
    assert rows and all("" not in r.split(",")[1:] for r in rows[:-1])
    assert "iota1=" in out


def test_bound_rate_above_capacity(capsys):
    code, _, err = run(["bound", "--L", "20", "--a", "1", "--snr", "20", "--rate-frac", "1.01"],
                       capsys)
    assert code == 3 and "(0, C)" in err


def test_bound_requires_a(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bound", "--L", "20", "--snr", "20"])
    assert exc.value.code == 2


def test_rate_curve_files(tmp_path, capsys):
    code, _, _ = run(["rate-curve", "--snr", "20", "--a", "1", "--L-list", "20",
                      "--rate-fracs", "0.6,0.5,0.4", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    main_csv = tmp_path / "rate_curve.csv"
    assert (tmp_path / "rate_curve_points.csv").exists()
    meta = read_csv_meta(main_csv)
    assert meta["a"] == 1.0 and meta["L_list"] == [20]


def test_rate_curve_infeasible_everywhere(capsys):
    code, out, _ = run(["rate-curve", "--snr", "20", "--a", "1", "--dict", "bernoulli",
                        "--L-list", "20", "--rate-fracs", "0.5,0.3"], capsys)
    assert code == 4 and "infeasible" in out


def test_output_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("SSC_OUTPUT_DIR", str(tmp_path / "o"))
    assert main(["exponents", "--snr", "5"]) == 0
    assert (tmp_path / "o" / "exponents.csv").exists()


def test_threads_env_validation(monkeypatch, capsys):
    monkeypatch.setenv("SSC_THREADS", "many")
    code, _, err = run(["simulate", "--L", "2", "--M", "4", "--snr", "20", "--trials", "10"],
                       capsys)
    assert code == 3


def test_simulate_deterministic(tmp_path, capsys):
    argv = ["simulate", "--L", "2", "--M", "4", "--snr", "20", "--rate-frac", "0.5",
            "--trials", "2000", "--seed", "7"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["-o", str(a), "--threads", "1"]) == 0
    assert main(argv + ["-o", str(b), "--threads", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert rep["trials"] == 2000 and rep["power_check"]["verdict"] == "PASS"
    assert {v["ties"] for v in rep["consistency"]} == {"errors", "lexicographic", "favorable"}


def test_simulate_budget_is_domain_error(capsys):
    code, _, err = run(["simulate", "--L", "4", "--M", "64", "--snr", "20", "--trials", "10"],
                       capsys)
    assert code == 3 and "budget" in err


def test_verify_lemmas(tmp_path, capsys):
    path = tmp_path / "audit.csv"
    code, _, _ = run(["verify", "--suite", "lemmas", "--cases", "30", "--seed", "1",
                      "-o", str(path)], capsys)
    assert code == 0
    text = path.read_text()
    assert "FAIL" not in text and text.count("\n") > 90


def test_verify_phi_and_binomial(capsys):
    assert run(["verify", "--suite", "phi"], capsys)[0] == 0
    assert run(["verify", "--suite", "binomial", "--l-max", "200"], capsys)[0] == 0
