import csv

import numpy as np
import pytest

from eulerlab.cli import ExperimentConfig, _merge, main
from eulerlab.grid import DomainError
from eulerlab.io import ConfigError, ERROR_COLUMNS, loglog_svg, parse_config, read_config, rows_to_csv


def test_parse_config():
    text = "# defaults\nk-max = 12\nsamples = 1e4  # paths\n\nmodel=ex3\n"
    assert parse_config(text) == {"k_max": "12", "samples": "1e4", "model": "ex3"}
    with pytest.raises(ConfigError):
        parse_config("no equals sign")
    with pytest.raises(ConfigError):
        parse_config("= 3")
    with pytest.raises(ConfigError):
        read_config("/nonexistent/config.txt")


def test_config_precedence():
    # cli > file > mode defaults
    cfg = _merge({"k_max": 9, "samples": None}, {"k_max": "12", "samples": "500", "seed": "4"}, None)
    assert (cfg.k_max, cfg.samples, cfg.seed) == (9, 500, 4)
    cfg = _merge({}, {}, "quick")
    assert (cfg.k_max, cfg.samples) == (10, 10_000)
    cfg = _merge({}, {"mode": "quick", "k_max": "7"}, None)
    assert (cfg.k_max, cfg.samples) == (7, 10_000)
    with pytest.raises(DomainError):
        _merge({}, {"colour": "red"}, None)
    with pytest.raises(DomainError):
        _merge({}, {"k_max": "many"}, None)
    with pytest.raises(DomainError):
        ExperimentConfig(k_min=5, k_max=4)


def test_rows_to_csv_round_trips_doubles():
    text = rows_to_csv(["a", "b"], [(1, 0.1), (2, 1 / 3)])
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["a", "b"]
    assert float(rows[2][1]) == 1 / 3
    assert rows[1][0] == "1"


def test_svg_is_well_formed():
    svg = loglog_svg([("a", [1, 10, 100], [1, 0.1, 0.01], False), ("b", [1, 10], [0, -1], True)])
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    with pytest.raises(ValueError):
        loglog_svg([("a", [1], [0], False)])


def test_figure1_writes_csv_and_svg(tmp_path, capsys):
    out, svg = tmp_path / "f.csv", tmp_path / "f.svg"
    rc = main(["figure1", "--k-min", "3", "--k-max", "6", "--samples", "400", "--out", str(out),
               "--svg", str(svg)])
    assert rc == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert list(rows[0]) == ERROR_COLUMNS
    assert [int(r["N"]) for r in rows] == [8, 16, 32, 64]
    assert rows[0]["bound_thm5"] == "nan"
    assert float(rows[-1]["bound_thm5"]) > 0
    assert "<polyline" in svg.read_text()
    assert "respected" in capsys.readouterr().out


def test_figure1_is_independent_of_jobs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["figure1", "--model", "ex2b", "--T", "1", "--k-min", "1", "--k-max", "4", "--samples", "20000"]
    assert main(args + ["--out", str(a), "--jobs", "1"]) == 0
    assert main(args + ["--out", str(b), "--jobs", "3"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_figure1_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    out = tmp_path / "c.csv"
    cfg.write_text(f"k_min = 2\nk_max = 3\nsamples = 100\nout = {out}\n")
    assert main(["figure1", "--config", str(cfg)]) == 0
    assert len(out.read_text().splitlines()) == 3


def test_exit_codes_on_bad_input(tmp_path, capsys):
    assert main(["figure1", "--model", "bsp1", "--k-max", "2", "--samples", "10",
                 "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["figure1", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["figure1", "--k-min", "5", "--k-max", "2", "--out", str(tmp_path / "x.csv")]) == 2
    assert main(["bounds-check", "--lemma53-h", "0.5"]) == 2
    with pytest.raises(SystemExit):
        main(["figure1", "--quick", "--full"])


def test_bounds_check_commands(capsys):
    assert main(["bounds-check", "--lemma53-h", "0.01"]) == 0
    assert main(["bounds-check", "--cases", "20", "--mc-samples", "2000"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5
    assert main(["bounds-check", "--cases", "5", "--mc-samples", "1000", "--inject-fault"]) == 1


def test_probe_and_simulate_commands(tmp_path):
    h = tmp_path / "h.csv"
    assert main(["probe", "holder", "--samples", "500", "--level", "5", "--out", str(h)]) == 0
    assert h.read_text().startswith("delta,increment,stderr,increment_over_sqrt_delta")
    lp = tmp_path / "l.csv"
    assert main(["probe", "lipschitz", "--samples", "200", "--level", "5", "--out", str(lp)]) == 0
    assert len(lp.read_text().splitlines()) == 5
    s = tmp_path / "s.csv"
    assert main(["simulate", "--level", "4", "--out", str(s)]) == 0
    data = np.loadtxt(s, delimiter=",", skiprows=1)
    assert data.shape == (17, 5)
    assert np.allclose(data[:, 4], data[:, 0])


def test_fixtures_command(tmp_path):
    out = tmp_path / "c.txt"
    assert main(["fixtures", "--out", str(out)]) == 0
    assert "mollifier_integral = " in out.read_text()
