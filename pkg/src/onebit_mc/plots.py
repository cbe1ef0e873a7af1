"""SVG line plots of median error (with IQR bars) against each swept grid variable."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SWEEPABLE = ("fraction", "m", "dither", "beta")
LINE_KEYS = ("solver", "beta", "fraction", "m", "dither")
PLOT_COLUMNS = ("x_var", "x", "line", "median", "q25", "q75", "count")


def _ok(rows, value):
    return [r for r in rows if r.get("status", "ok") == "ok" and str(r.get(value, "")) != ""]


def _sort_key(v):
    try:
        return (0, float(v), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(v))


def plot_summary(rows, value="rel_error") -> list[dict]:
    """Median and quartiles per (swept variable, x value, line).

    A variable counts as swept when it takes more than one value; with
    nothing swept, ``fraction`` is used so a single grid point still plots.
    Lines are split by every other column in ``LINE_KEYS`` that varies, so
    for example each sketch fraction ``beta`` gets its own line.
    """
    rows = _ok(rows, value)
    if not rows:
        raise ValueError("no successful rows to plot")
    varying = [k for k in SWEEPABLE if len({str(r.get(k, "")) for r in rows}) > 1]
    x_vars = [k for k in varying if k != "beta"] or (["beta"] if "beta" in varying else ["fraction"])
    out = []
    for xv in x_vars:
        line_keys = [k for k in LINE_KEYS if k != xv and
                     (k == "solver" or k in varying)]
        groups = {}
        for r in rows:
            line = ", ".join(f"{k}={r[k]}" if k != "solver" else str(r[k])
                             for k in line_keys if str(r.get(k, "")) != "")
            groups.setdefault((line, str(r[xv])), []).append(float(r[value]))
        for (line, x), vals in sorted(groups.items(), key=lambda kv: (kv[0][0], _sort_key(kv[0][1]))):
            out.append({"x_var": xv, "x": x, "line": line, "median": float(np.median(vals)),
                        "q25": float(np.percentile(vals, 25)),
                        "q75": float(np.percentile(vals, 75)), "count": len(vals)})
    return out


def emit_plots(rows, out_dir, value="rel_error", stem="error") -> list[Path]:
    """Write one SVG per swept variable plus ``plot_data.csv`` holding the plotted numbers."""
    summary = plot_summary(rows, value)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for xv in dict.fromkeys(s["x_var"] for s in summary):
        part = [s for s in summary if s["x_var"] == xv]
        xs = sorted({s["x"] for s in part}, key=_sort_key)
        numeric = all(_sort_key(x)[0] == 0 for x in xs)
        fig, ax = plt.subplots(figsize=(5, 3.6))
        for line in dict.fromkeys(s["line"] for s in part):
            pts = sorted((s for s in part if s["line"] == line), key=lambda s: _sort_key(s["x"]))
            pos = [float(s["x"]) if numeric else xs.index(s["x"]) for s in pts]
            med = np.array([s["median"] for s in pts])
            err = np.vstack([med - [s["q25"] for s in pts], [s["q75"] for s in pts] - med])
            ax.errorbar(pos, med, yerr=err, marker="o", capsize=3, label=line)
        if not numeric:
            ax.set_xticks(range(len(xs)), xs)
        ax.set_xlabel(xv)
        ax.set_ylabel(f"{value} (median, IQR)")
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_dir / f"{stem}_vs_{xv}.svg"
        fig.savefig(path, format="svg")
        plt.close(fig)
        paths.append(path)
    with open(out_dir / "plot_data.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=PLOT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for s in summary:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in s.items()})
    return paths
