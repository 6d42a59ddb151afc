"""Render experiment CSVs as vector figures.

Strictly a presentation layer: numbers come from the CSV untouched, one line
per variant, with a shaded +/-1 stderr band whenever the stderr column is
present. Three figure kinds mirror the three CSV schemas the experiment CLI
emits (rate vs power, rate vs RIS element count, rate vs epoch).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "gamn-plots"

import matplotlib.pyplot as plt

KINDS = {
    # kind: (x column, y column, stderr column, x label)
    "power": ("power_dBm", "final_wsr", "stderr", "transmit power (dBm)"),
    "n": ("N", "final_wsr", "stderr", "RIS elements N"),
    "convergence": ("epoch", "mean_wsr", "stderr_wsr", "epoch"),
}

_Y_LABEL = "weighted sum rate (bps/Hz)"


class PlotDataError(Exception):
    """Input CSV is unusable; the message names what is missing."""


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str | Path
    kind: str  # one of KINDS
    out_path: str | Path
    variants: tuple[str, ...] | None = None  # None = every variant in the file

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; "
                             f"expected one of {sorted(KINDS)}")


def read_series(spec: FigureSpec) -> dict[str, dict[str, list[float]]]:
    """Per-variant {x, y, err} arrays from the CSV, validated for `kind`."""
    x_col, y_col, err_col, _ = KINDS[spec.kind]
    with open(spec.csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("variant", x_col, y_col):
            if col not in header:
                raise PlotDataError(f"missing column {col!r} in {spec.csv_path}")
        has_err = err_col in header
        rows = list(reader)
    if not rows:
        raise PlotDataError(f"no data rows in {spec.csv_path}")

    series: dict[str, dict[str, list[float]]] = {}
    for row in rows:
        name = row["variant"]
        if spec.variants is not None and name not in spec.variants:
            continue
        entry = series.setdefault(name, {"x": [], "y": [], "err": []})
        entry["x"].append(float(row[x_col]))
        entry["y"].append(float(row[y_col]))
        entry["err"].append(float(row[err_col]) if has_err else 0.0)
    if not series:
        raise PlotDataError(
            f"no rows left after filtering variants {spec.variants} in {spec.csv_path}")
    return series


def render(spec: FigureSpec) -> Path:
    """Write the figure for `spec` and return the output path."""
    series = read_series(spec)
    _, _, _, x_label = KINDS[spec.kind]

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name in sorted(series):
        data = series[name]
        order = sorted(range(len(data["x"])), key=data["x"].__getitem__)
        xs = [data["x"][i] for i in order]
        ys = [data["y"][i] for i in order]
        es = [data["err"][i] for i in order]
        ax.plot(xs, ys, label=name, linewidth=1.5)
        ax.fill_between(xs, [y - e for y, e in zip(ys, es)],
                        [y + e for y, e in zip(ys, es)], alpha=0.25, linewidth=0)
    ax.set_xlabel(x_label)
    ax.set_ylabel(_Y_LABEL)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()

    out = Path(spec.out_path)
    if out.suffix.lower() not in (".svg", ".pdf"):
        raise ValueError(f"vector output required (.svg or .pdf), got {out.suffix!r}")
    fig.savefig(out, metadata={"Date": None} if out.suffix.lower() == ".svg" else None)
    plt.close(fig)
    return out
