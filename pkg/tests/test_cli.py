import csv
import io
import json
import math
import subprocess
import sys
from fractions import Fraction

import mpmath
import pytest
from mpmath import mp

from specnorm import cli
from specnorm.numerics import PrecisionPolicy


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows_of(text):
    return list(csv.reader(io.StringIO(text)))


@pytest.mark.parametrize("text, value, pi_units", [
    ("0.1pi", Fraction(1, 10), True),
    ("pi/16", Fraction(1, 16), True),
    ("3pi/16", Fraction(3, 16), True),
    ("-pi/16", Fraction(-1, 16), True),
    ("pi", Fraction(1), True),
    ("0.19635", Fraction("0.19635"), False),
    ("1/5", Fraction(1, 5), False),
])
def test_parse_angle(text, value, pi_units):
    a = cli.parse_angle(text)
    assert (a.value, a.pi_units) == (value, pi_units)


@pytest.mark.parametrize("text", ["", "abc", "pi/0", "0.1 rad", "1/0", "pi pi"])
def test_parse_angle_rejects(text):
    with pytest.raises(ValueError):
        cli.parse_angle(text)


def test_malformed_angle_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["norm", "--theta", "bogus"])
    assert info.value.code == 2


def test_digits_floor(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["norm", "--theta", "0", "--digits", "3"])
    assert info.value.code == 2


def test_format_number():
    with mp.workdps(30):
        assert cli.format_number(Fraction(1, 8), 2) == "0.12"
        assert cli.format_number(Fraction(3, 8), 2) == "0.38"
        assert cli.format_number(Fraction(5, 2), 1) == "2"
        assert cli.format_number(1, 5) == "1"
        assert cli.format_number(123456.0, 3) == "1.23e+5"
        assert cli.format_number(0.0, 3) == "0"
        assert cli.format_number(None, 3) == ""
        assert cli.format_number(True, 3) == "true"


def test_norm_identity(capsys):
    code, out, _ = run(capsys, "norm", "--family", "hermite", "--theta", "0", "--n", "7")
    assert code == 0
    header, row = rows_of(out)
    rec = dict(zip(header, row))
    assert rec["N"] == "1.00000000000000000000000000000"
    assert rec["lower_ok"] == "true"


def test_norm_sector_violation(capsys):
    code, _, err = run(capsys, "norm", "--family", "laguerre", "--theta", "pi/2", "--n", "3")
    assert code == 3
    assert "sector" in err


def test_norm_table_scale(capsys):
    code, out, _ = run(capsys, "norm", "--theta", "0.1pi", "--n", "100", "--digits", "10")
    assert code == 0
    rec = dict(zip(*rows_of(out)))
    assert int(rec["certified_digits"]) >= 10


def test_table1(capsys):
    code, out, _ = run(capsys, "table1", "--digits", "8")
    assert code == 0
    rows = rows_of(out)
    assert rows[0] == ["theta_over_pi", "sec_2theta", "sigma_100", "four_sec_2theta", "mu"]
    by_label = {r[0]: r for r in rows[1:]}
    assert by_label["0"][1:] == ["1.0000000", "1.0000000", "4.0000000", "1.0000000"]
    sec, sigma, four, mu = (float(v) for v in by_label["0.1"][1:])
    assert round(sec, 3) == 1.236
    assert math.ceil(four * 1000) / 1000 == 4.945  # reference column is rounded up
    assert round(mu, 3) == 2.068
    assert abs(sigma / 1.953 - 1) < 1e-3
    sec, sigma, four, mu = (float(v) for v in by_label["0.05"][1:])
    assert (round(sec, 3), round(four, 3), round(mu, 3)) == (1.051, 4.206, 1.384)


def test_table1_json_provenance(capsys):
    code, out, _ = run(capsys, "table1", "--digits", "6", "--format", "json", "--n", "20")
    assert code == 0
    doc = json.loads(out)
    assert doc["tool"] == "specnorm" and doc["n"] == 20
    assert doc["digits_requested"] == 6
    assert len(doc["rows_theta_rad"]) == 6
    assert doc["rows"][3]["theta_over_pi"] == "0.1"


def test_bounds_sweep(capsys):
    code, out, err = run(capsys, "bounds", "--family", "hermite", "--theta", "0.15pi",
                         "--n-max", "200", "--stride", "2", "--digits", "20")
    assert code == 0
    rows = rows_of(out)
    assert rows[0] == cli.BOUNDS_COLUMNS
    assert len(rows) == 102
    assert all(r[5] == "true" and r[6] == "true" for r in rows[1:])
    assert "violations=0" in err


def test_bounds_json_has_precision(capsys):
    code, out, _ = run(capsys, "bounds", "--family", "laguerre", "--theta", "0.6", "--n-max", "6",
                       "--stride", "1", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["certified_digits_min"] >= 30
    assert doc["precision_bits_max"] > 0
    assert doc["theta"]["radians"].startswith("0.6")
    assert doc["weight"]["family"] == "laguerre"


def test_bounds_plain_polyexp(capsys):
    code, out, _ = run(capsys, "bounds", "--family", "polyexp", "--coeffs", "1,0,0,1", "--theta", "pi/16",
                       "--n-max", "4", "--format", "plain", "--digits", "10")
    assert code == 0
    assert "NA" in out


def test_expansion_divergent_at_zero(capsys):
    code, _, err = run(capsys, "expansion", "--theta", "0.1pi", "--t", "0", "--n-max", "60")
    assert code == 0
    assert "verdict=divergent" in err


def test_expansion_convergent(capsys):
    code, _, err = run(capsys, "expansion", "--theta", "0.1pi", "--t", "1.9755", "--n-max", "60")
    assert code == 0
    assert "verdict=convergent" in err


def test_growth(capsys):
    code, _, err = run(capsys, "growth", "--family", "hermite", "--theta", "pi/16", "--n-max", "300",
                       "--digits", "15")
    assert code == 0
    summary = dict(line.split("=", 1) for line in err.splitlines() if "=" in line)
    assert 0.35 <= float(summary["s_estimate"]) <= 0.45
    assert float(summary["s_lower"]) == pytest.approx(0.0792, abs=1e-4)


def test_verify(capsys):
    code, out, err = run(capsys, "verify", "--family", "gammabeta", "--gamma", "1/2", "--beta", "3",
                         "--tau", "1", "--theta", "0.1pi", "--n-max", "8", "--stride", "1", "--digits", "20")
    assert code == 0
    rows = rows_of(out)
    assert all(float(r[-1]) >= 20 for r in rows[1:])
    assert "failures=0" in err


def test_semiclassical(capsys):
    code, out, _ = run(capsys, "semiclassical", "--theta", "0.1pi", "--n", "40", "--digits", "10")
    assert code == 0
    rec = dict(zip(*rows_of(out)))
    with mp.workdps(30):
        assert rec["mu"] == mpmath.nstr(mpmath.exp(mpmath.tan(mp.pi / 5)), 10)
    assert float(rec["lambda_residual"]) < 1e-20


def test_plot_script(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, _ = run(capsys, "bounds", "--theta", "0.1pi", "--n-max", "4", "--plot")
    assert code == 0
    assert (tmp_path / "bounds.csv").exists()
    script = (tmp_path / "bounds.gp").read_text()
    assert "bounds.csv" in script and script.startswith("set datafile separator ','")


def test_env_default_digits(monkeypatch, capsys):
    monkeypatch.setenv("SPECNORM_DIGITS", "7")
    code, out, _ = run(capsys, "norm", "--theta", "0.1pi", "--n", "2")
    assert code == 0
    rec = dict(zip(*rows_of(out)))
    with mp.workdps(30):
        c = mpmath.cos(mp.pi / 5)
        expected = mpmath.nstr((3 * c ** -2.5 - c ** -0.5) / 2, 7)
    assert rec["N"] == expected


def test_missing_theta_and_coeffs(capsys):
    assert cli.main(["norm", "--n", "2"]) == 2
    assert cli.main(["norm", "--family", "polyexp", "--theta", "0"]) == 2


def test_bad_t_is_usage_error():
    with pytest.raises(SystemExit) as info:
        cli.main(["expansion", "--theta", "0.1pi", "--t", "abc"])
    assert info.value.code == 2


def test_precision_budget_exit(monkeypatch, capsys):
    monkeypatch.setattr(cli, "_policy", lambda args: PrecisionPolicy(target_digits=args.digits, guard_digits=0,
                                                                    max_digits=args.digits))
    code, _, err = run(capsys, "norm", "--theta", "0.2pi", "--n", "150", "--digits", "5")
    assert code == 4
    assert "precision" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "specnorm", "norm", "--theta", "0", "--n", "1", "--digits", "6"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[1].split(",")[2] == "1.00000"
