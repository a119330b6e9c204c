import csv
import math
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from volswap.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
HESTON = str(CONFIGS / "spx_heston.toml")
BATES = str(CONFIGS / "spx_bates.toml")
MERTON = str(CONFIGS / "merton.toml")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(out: str) -> list[list[str]]:
    return [line.split() for line in out.splitlines() if line and not line.startswith("#")]


def records(out: str) -> list[dict[str, str]]:
    header, *rows = table(out)
    return [dict(zip(header, r)) for r in rows]


def value(out: str, method: str, quantity: str) -> tuple[float, float | None]:
    for r in records(out):
        if (r["method"], r["quantity"]) == (method, quantity):
            return float(r["value"]), None if r["std_error"] == "-" else float(r["std_error"])
    raise AssertionError(f"no {method} {quantity} row in\n{out}")


def test_price_analytic(capsys):
    code, out, _ = run(capsys, "price", "--model", "heston", "--config", HESTON, "-T", "1", "--method", "analytic")
    assert code == 0
    assert value(out, "analytic", "K_var")[0] == pytest.approx(0.0577, abs=1e-4)


def test_price_merton_convexity(capsys):
    code, out, _ = run(capsys, "price", "--config", MERTON, "-T", "1", "--method", "convexity")
    assert code == 0
    assert value(out, "convexity", "K_vol")[0] == pytest.approx(0.097, abs=2e-3)


def test_price_all_methods(capsys, tmp_path):
    out_csv = tmp_path / "q.csv"
    code, out, _ = run(
        capsys, "price", "--config", HESTON, "-T", "1", "--method", "all", "--seed", "7",
        "--paths", "50000", "--steps", "250", "--csv", str(out_csv),
    )
    assert code == 0
    k_var = value(out, "analytic", "K_var")[0]
    mc, se = value(out, "monte_carlo", "K_var")
    assert abs(mc - k_var) <= 3 * se
    assert {r[0] for r in table(out)[1:]} == {"analytic", "convexity", "laplace", "monte_carlo"}
    with open(out_csv, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 5


def test_price_flags_override_config(capsys):
    _, out, _ = run(capsys, "price", "--config", HESTON, "-T", "1", "--method", "analytic", "--v0", "0.1574")
    assert value(out, "analytic", "K_var")[0] == pytest.approx(0.1574, rel=1e-12)


def test_paper_mode_header(capsys):
    _, out, _ = run(capsys, "--paper-mode", "price", "--config", BATES, "-T", "1", "--method", "convexity")
    assert out.splitlines()[0] == "# volswap price variance-formula=printed metrics=printed"
    assert value(out, "convexity", "K_vol")[0] == pytest.approx(0.3445, abs=2e-3)
    _, out, _ = run(capsys, "price", "--config", BATES, "-T", "1", "--method", "convexity")
    assert "variance-formula=corrected metrics=standard" in out.splitlines()[0]


def test_vix_at_zero_is_spot(capsys):
    code, out, _ = run(capsys, "vix", "--config", BATES, "-T", "0")
    assert code == 0
    (row,) = records(out)
    assert row["days"] == "0" and row["convexity"] == row["laplace"] == "12.691509"


def test_vix_routes_against_simulation(capsys):
    _, out, _ = run(capsys, "vix", "--config", HESTON, "-T", "33")
    (row,) = records(out)
    conv, lap = float(row["convexity"]), float(row["laplace"])
    _, sim, _ = run(capsys, "simulate", "--config", HESTON, "--estimate", "vix", "-T", "33", "--seed", "2")
    (est,) = records(sim)
    mean, se = float(est["mean"]), float(est["std_error"])
    assert abs(lap - mean) <= 3 * se
    assert abs(conv - mean) <= 3 * se


def test_vix_all_includes_monte_carlo(capsys):
    _, out, _ = run(capsys, "vix", "--config", HESTON, "-T", "5", "68", "--method", "all", "--paths", "20000")
    rows = table(out)
    assert rows[0] == ["days", "convexity", "convexity_err", "laplace", "laplace_err", "monte_carlo", "std_error"]
    assert len(rows) == 3


def test_vix_market_report(capsys, tmp_path, data_dir):
    comp = tmp_path / "comparison.csv"
    code, out, _ = run(capsys, "vix", "--config", HESTON, "--market", str(data_dir / "futures_synthetic.csv"),
                       "--out", str(comp))
    assert code == 0
    header = next(line for line in out.splitlines() if line.startswith("Pricing error"))
    assert header.split()[2:] == ["all", "T<=30", "30<T<=90", "T>90"]
    with open(comp, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["days_to_expiry", "market", "heston:convexity", "heston:laplace"] and len(rows) == 10


def test_vix_market_missing_quote(capsys, data_dir):
    code, _, err = run(capsys, "vix", "--config", HESTON, "-T", "7", "--market", str(data_dir / "futures_synthetic.csv"))
    assert code == 1 and "no market quote" in err


def test_report_formats(capsys, tmp_path, data_dir):
    comp = tmp_path / "comparison.csv"
    run(capsys, "vix", "--config", BATES, "--market", str(data_dir / "futures_synthetic.csv"), "--out", str(comp))
    code, _, _ = run(capsys, "report", "--in", str(comp), "--format", "svg")
    assert code == 0
    svg = comp.with_suffix(".svg")
    assert len(ET.parse(svg).getroot().findall("{http://www.w3.org/2000/svg}polyline")) == 3
    _, out, _ = run(capsys, "report", "--in", str(comp), "--format", "csv")
    assert len(list(csv.DictReader(out.splitlines()))) == 2 * 4
    _, out, _ = run(capsys, "--paper-mode", "report", "--in", str(comp))
    assert "metrics=printed" in out.splitlines()[0] and "variant: printed" in out


def test_simulate_is_deterministic(capsys):
    argv = ("simulate", "--model", "bates", "--config", BATES, "-T", "1", "--paths", "200000", "--seed", "1",
            "--steps", "100")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first.encode() == second.encode()
    _, threaded, _ = run(capsys, *argv, "--workers", "2")
    assert threaded == first


def test_simulate_levy_reports_truncation(capsys):
    code, out, _ = run(capsys, "simulate", "--config", str(CONFIGS / "levy_heston.toml"), "-T", "1",
                       "--paths", "2000", "--steps", "100")
    assert code == 0 and "negative_fraction=" in out


def test_simulate_log_contract(capsys):
    code, out, _ = run(capsys, "simulate", "--config", HESTON, "--estimate", "log-contract", "-T", "0.1",
                       "--paths", "2000", "--steps", "500")
    assert code == 0 and table(out)[1][0] == "VIX^2"
    code, _, err = run(capsys, "simulate", "--config", BATES, "--estimate", "log-contract", "-T", "0.1")
    assert code == 1 and "heston only" in err


def test_calibrate_writes_summary(capsys, tmp_path, data_dir):
    out_csv = tmp_path / "posterior.csv"
    code, out, _ = run(capsys, "calibrate", "--model", "heston", "--prices", str(data_dir / "prices_505.csv"),
                       "--burn", "50", "--keep", "100", "--runs", "1", "--out", str(out_csv))
    assert code == 0 and "returns=504" in out
    with open(out_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    names = [r["parameter"] for r in rows]
    assert {"kappa", "theta", "sigma", "rho", "v0"} <= set(names)
    assert not any(math.isnan(float(r["mean"])) for r in rows)


def test_calibrate_insufficient_data(capsys, tmp_path):
    prices = tmp_path / "p.csv"
    prices.write_text("date,close\n2017-01-12,100\n2017-01-13,101\n")
    code, _, err = run(capsys, "calibrate", "--model", "heston", "--prices", str(prices))
    assert code == 1 and "insufficient data" in err


@pytest.mark.parametrize(
    "argv, message",
    [
        (("price", "--config", HESTON, "-T", "-1"), "T must be > 0"),
        (("price", "--config", HESTON), "maturity missing"),
        (("price", "-T", "1"), "no model kind"),
        (("price", "--config", "missing.toml", "-T", "1"), "cannot read config"),
        (("price", "--config", HESTON, "-T", "1", "--rho", "-2"), "rho"),
        (("vix", "--config", MERTON, "-T", "5"), "heston or bates"),
        (("report", "--in", "missing.csv"), "cannot read"),
    ],
)
def test_user_errors_exit_1(capsys, argv, message):
    code, _, err = run(capsys, *argv)
    assert code == 1 and message in err


def test_numerical_failure_exits_2(capsys):
    code, _, err = run(
        capsys, "price", "--config", HESTON, "-T", "1", "--method", "laplace",
        "--rel-tol", "1e-14", "--abs-tol", "1e-300", "--max-subdivisions", "2",
    )
    assert code == 2 and "numerical failure" in err


def test_help_lists_every_subcommand():
    res = subprocess.run([sys.executable, "-m", "volswap", "--help"], capture_output=True, text=True, check=True)
    for cmd in ("price", "vix", "simulate", "calibrate", "report", "--paper-mode"):
        assert cmd in res.stdout


@pytest.mark.parametrize("cmd", ["price", "vix", "simulate", "calibrate", "report"])
def test_subcommand_help(capsys, cmd):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    assert "usage:" in capsys.readouterr().out
