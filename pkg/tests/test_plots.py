import csv

import pytest

from onebit_mc.plots import emit_plots, plot_summary


def _rows(**vary):
    rows = []
    for solver in ("obsvt2", "rand-obsvt"):
        for beta in (vary.get("betas") or [""]):
            for fraction in vary.get("fractions", [0.5]):
                for rep, v in enumerate((0.2, 0.4, 0.9)):
                    rows.append({"solver": solver, "beta": beta if solver == "rand-obsvt" else "",
                                 "fraction": fraction, "m": 1, "dither": "gaussian",
                                 "rep": rep, "rel_error": v * fraction, "status": "ok"})
    return rows


def test_single_point(tmp_path):
    paths = emit_plots(_rows(), tmp_path)
    assert [p.name for p in paths] == ["error_vs_fraction.svg"]
    assert paths[0].read_text().lstrip().startswith("<?xml")


def test_line_per_beta():
    s = plot_summary(_rows(betas=[0.1, 0.5, 1.0], fractions=[0.3, 0.7]))
    lines = {r["line"] for r in s if r["x_var"] == "fraction"}
    assert {"rand-obsvt, beta=0.1", "rand-obsvt, beta=0.5", "rand-obsvt, beta=1.0"} <= lines


def test_plot_data_lossless(tmp_path):
    rows = _rows(fractions=[0.3, 0.7])
    rows[0]["rel_error"] = 0.1 + 0.2  # not representable in short decimal
    emit_plots(rows, tmp_path)
    with open(tmp_path / "plot_data.csv") as fh:
        disk = list(csv.DictReader(fh))
    mem = plot_summary(rows)
    assert [float(d["median"]) for d in disk] == [m["median"] for m in mem]
    assert [float(d["q25"]) for d in disk] == [m["q25"] for m in mem]


def test_failed_rows_ignored_and_empty_error(tmp_path):
    rows = _rows()
    for r in rows:
        r["status"] = "failed"
    with pytest.raises(ValueError, match="no successful rows"):
        emit_plots(rows, tmp_path)
