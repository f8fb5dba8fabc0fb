"""Render figures from the laboratory's delimited outputs.

Rendering is a pure function of (CSV contents, figure spec): the style
parameters are pinned, metadata that would vary between runs is
stripped from the output files, and only the documented columns of
each schema are read — extra columns pass through unnoticed, so the
same spec always produces byte-identical files.
"""

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

FIGURE_KINDS = ("variance_growth", "percolation_scan", "cluster_histogram")

VARIANCE_COLUMNS = ("n", "var_root", "stderr")
SCAN_COLUMNS = ("sample", "level", "direction", "carrier", "clusters",
                "largest_fraction", "wraps_h", "wraps_v", "trifurcations")

_HIST_BINS = np.linspace(0.0, 1.0, 21)

_STYLE = {
    "figure.figsize": (6.4, 4.4),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.framealpha": 0.9,
    "path.simplify": False,
    "svg.hashsalt": "heightlab-plot",
}

_DEFAULT_LABELS = {
    "variance_growth": ("patch radius n (log scale)",
                        "root-height variance",
                        "root-height variance by patch radius"),
    "percolation_scan": ("level",
                        "wrap frequency",
                        "wrapping clusters by level"),
    "cluster_histogram": ("largest cluster fraction",
                        "configurations",
                        "largest-cluster share distribution"),
}


class SchemaMismatch(ValueError):
    """The delimited input does not carry the documented columns."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: which CSVs feed it, what kind, where it goes."""

    kind: str
    inputs: tuple
    output: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""


def spec_from_dict(entry) -> FigureSpec:
    """Validate a JSON-shaped mapping into a FigureSpec."""
    if not isinstance(entry, dict):
        raise ValueError(f"figure spec must be a mapping, got "
                         f"{type(entry).__name__}")
    kind = entry.get("kind")
    if kind not in FIGURE_KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; expected one of "
                         f"{', '.join(FIGURE_KINDS)}")
    raw_inputs = entry.get("inputs", entry.get("input"))
    if raw_inputs is None:
        raise ValueError("figure spec needs 'input' (path) or "
                         "'inputs' (list of paths)")
    if isinstance(raw_inputs, str):
        inputs = (raw_inputs,)
    else:
        inputs = tuple(str(p) for p in raw_inputs)
    if not inputs:
        raise ValueError("figure spec names no input files")
    output = entry.get("output")
    if not output:
        raise ValueError("figure spec needs an 'output' path")
    ext = os.path.splitext(str(output))[1].lower()
    if ext not in (".svg", ".png"):
        raise ValueError(f"output path must end in .svg or .png, "
                         f"got {output!r}")
    return FigureSpec(kind=kind, inputs=inputs, output=str(output),
                      title=str(entry.get("title", "")),
                      xlabel=str(entry.get("xlabel", "")),
                      ylabel=str(entry.get("ylabel", "")))


# ---------------------------------------------------------------------------
# Schema-checked readers
# ---------------------------------------------------------------------------

def _read_rows(path, required):
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            if header is None:
                raise SchemaMismatch(f"{path}: empty file, no header row")
            for col in required:
                if col not in header:
                    raise SchemaMismatch(f"{path}: missing column {col!r}")
            rows = list(reader)
    except OSError as exc:
        raise SchemaMismatch(f"{path}: {exc}") from None
    if not rows:
        raise SchemaMismatch(f"{path}: no data rows")
    return rows


def _numeric(row, col, path):
    value = row.get(col)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise SchemaMismatch(f"{path}: column {col!r} has non-numeric "
                             f"value {value!r}") from None


def read_variance(path):
    """Radius, variance, and stderr columns, row order preserved."""
    rows = _read_rows(path, VARIANCE_COLUMNS)
    radii = np.array([_numeric(r, "n", path) for r in rows])
    variances = np.array([_numeric(r, "var_root", path) for r in rows])
    stderrs = np.array([_numeric(r, "stderr", path) for r in rows])
    return radii, variances, stderrs


def read_scan(path):
    """All scan rows as mappings; values stay unparsed strings."""
    return _read_rows(path, SCAN_COLUMNS)


def wrap_frequency_series(rows, path="scan"):
    """Per (carrier, direction): levels and the share of wrapping rows.

    A row counts as wrapping when either axis flag is set.
    """
    buckets = {}
    for row in rows:
        key = (row.get("carrier", ""), row.get("direction", ""))
        level = _numeric(row, "level", path)
        wraps = (_numeric(row, "wraps_h", path) > 0 or
                 _numeric(row, "wraps_v", path) > 0)
        buckets.setdefault(key, {}).setdefault(level, []).append(wraps)
    series = {}
    for key in sorted(buckets):
        levels = sorted(buckets[key])
        freqs = [float(np.mean(buckets[key][lvl])) for lvl in levels]
        series[key] = (levels, freqs)
    return series


# ---------------------------------------------------------------------------
# Figure drawing
# ---------------------------------------------------------------------------

def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _draw_variance(ax, spec):
    for path in spec.inputs:
        radii, variances, stderrs = read_variance(path)
        ax.errorbar(radii, variances, yerr=stderrs, marker="o",
                    capsize=0.0, elinewidth=1.2, label=_stem(path))
    ax.set_xscale("log", base=2)
    ax.xaxis.set_major_formatter(plt.FuncFormatter(lambda v, _: f"{v:g}"))


def _draw_scan(ax, spec):
    many = len(spec.inputs) > 1
    for path in spec.inputs:
        series = wrap_frequency_series(read_scan(path), path)
        for (carrier, direction), (levels, freqs) in series.items():
            label = f"{carrier} {direction}"
            if many:
                label += f" [{_stem(path)}]"
            ax.plot(levels, freqs, marker="o", label=label)
    ax.set_ylim(-0.05, 1.05)


def _draw_histogram(ax, spec):
    for path in spec.inputs:
        rows = read_scan(path)
        fractions = [_numeric(r, "largest_fraction", path) for r in rows]
        ax.hist(fractions, bins=_HIST_BINS, alpha=0.65, label=_stem(path))


_DRAWERS = {
    "variance_growth": _draw_variance,
    "percolation_scan": _draw_scan,
    "cluster_histogram": _draw_histogram,
}


def render(spec: FigureSpec) -> str:
    """Draw the spec'd figure and write it to spec.output."""
    if spec.kind not in _DRAWERS:
        raise ValueError(f"unknown figure kind {spec.kind!r}")
    default_x, default_y, default_title = _DEFAULT_LABELS[spec.kind]
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            _DRAWERS[spec.kind](ax, spec)
            ax.set_xlabel(spec.xlabel or default_x)
            ax.set_ylabel(spec.ylabel or default_y)
            ax.set_title(spec.title or default_title)
            if len(spec.inputs) > 1 or spec.kind == "percolation_scan":
                ax.legend(loc="best")
            fig.tight_layout()
            _save(fig, spec.output)
        finally:
            plt.close(fig)
    return spec.output


def _save(fig, output):
    ext = os.path.splitext(output)[1].lower()
    if ext == ".svg":
        fig.savefig(output, format="svg",
                    metadata={"Date": None, "Creator": None})
    elif ext == ".png":
        fig.savefig(output, format="png", metadata={"Software": None})
    else:
        raise ValueError(f"output path must end in .svg or .png, "
                         f"got {output!r}")
