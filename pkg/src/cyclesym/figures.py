"""Plot-ready CSV extraction and PNG rendering for a finished report.

Both outputs are derived from the report JSON alone so they can be rebuilt
long after the analysis ran. Every figure family gets one CSV (per-subject
points plus the origin-constrained slope and its improvement percentage as
trailing columns) and one PNG next to it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ValidationError
from .fileio import FLOAT_FMT
from .stats import slope_through_origin

FAMILY_MIRRORED = "scatter_mirrored_vs_normal"
FAMILY_COMBINED = "scatter_combined_vs_normal"
FAMILY_UNCERTAINTY = "uncertainty_pairs"
FAMILY_STEP_STRIDE = "step_vs_stride"


def _field(payload: dict, name: str, where: str = "report"):
    if not isinstance(payload, dict) or name not in payload:
        raise ValidationError(f"{where}: missing field {name!r}")
    return payload[name]


def _kind_block(subject: dict, kind: str) -> dict:
    kinds = _field(subject, "kinds", f"subject {subject.get('name', '?')}")
    return _field(kinds, kind, f"subject {subject.get('name', '?')} kinds")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return FLOAT_FMT % float(value)


def _slope_cells(points: list[tuple[float, float]]) -> tuple:
    try:
        fit = slope_through_origin(points)
        return fit.slope, fit.improvement_pct
    except ValidationError:
        return None, None


def _scatter_rows(report: dict, x_key: str, y_key: str) -> tuple[list[str], list[tuple]]:
    header = ["kind", "subject", x_key, y_key, "slope", "improvement_pct"]
    rows: list[tuple] = []
    subjects = _field(report, "subjects")
    kinds = _field(_field(report, "config"), "kinds", "report config")
    for kind in kinds:
        points = []
        for subject in subjects:
            block = _kind_block(subject, kind)
            points.append(
                (
                    float(_field(block, x_key, f"kind {kind}")),
                    float(_field(block, y_key, f"kind {kind}")),
                )
            )
        slope, improvement = _slope_cells(points)
        for subject, (x, y) in zip(subjects, points):
            rows.append((kind, _field(subject, "name", "subject"), x, y, slope, improvement))
    return header, rows


def _step_stride_rows(report: dict) -> tuple[list[str], list[tuple]]:
    header = [
        "subject",
        "step_combined_mean",
        "stride_combined_mean",
        "ratio",
        "slope",
        "improvement_pct",
    ]
    block = _field(report, "step_vs_stride")
    if block is None:
        return header, []
    pairs = _field(block, "pairs", "step_vs_stride")
    ratios = _field(block, "ratios", "step_vs_stride")
    subjects = _field(report, "subjects")
    slope, improvement = _slope_cells([(float(a), float(b)) for a, b in pairs])
    rows = [
        (_field(subj, "name", "subject"), float(a), float(b), float(r), slope, improvement)
        for subj, (a, b), r in zip(subjects, pairs, ratios)
    ]
    return header, rows


def figure_tables(report: dict) -> dict:
    """All figure families as (header, rows); step-vs-stride may be empty."""
    return {
        FAMILY_MIRRORED: _scatter_rows(report, "mean_normal", "mean_mirrored"),
        FAMILY_COMBINED: _scatter_rows(report, "mean_normal", "mean_combined"),
        FAMILY_UNCERTAINTY: _scatter_rows(
            report, "uncertainty_asymmetric", "uncertainty_symmetric"
        ),
        FAMILY_STEP_STRIDE: _step_stride_rows(report),
    }


def write_figure_csvs(report: dict, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for family, (header, rows) in figure_tables(report).items():
        if not rows:
            continue
        path = out_dir / f"{family}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_cell(v) for v in row) + "\n")
        written.append(path)
    return written


def _scatter_axes(ax, rows, kind: str, x_label: str, y_label: str) -> None:
    xs = [r[2] for r in rows]
    ys = [r[3] for r in rows]
    ax.scatter(xs, ys, color="#1f6f8b", zorder=3)
    limit = 1.05 * max(max(xs), max(ys), 1e-12)
    ax.plot([0, limit], [0, limit], ls="--", color="0.6", lw=1, label="identity")
    slope = rows[0][4]
    if slope is not None:
        ax.plot(
            [0, limit],
            [0, slope * limit],
            color="#c1553f",
            lw=1.5,
            label=f"fit slope {slope:.3f} ({rows[0][5]:+.1f}%)",
        )
    ax.set_xlim(0, limit)
    ax.set_ylim(0, 1.05 * max(max(ys), slope * limit if slope else 0, 1e-12))
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.set_title(kind)
    ax.legend(fontsize=8, loc="upper left")
    ax.grid(alpha=0.3)


def _render_scatter_family(path: Path, header, rows, x_label: str, y_label: str) -> None:
    kinds = sorted({r[0] for r in rows}, reverse=True)  # step before stride
    fig, axes = plt.subplots(1, len(kinds), figsize=(4.6 * len(kinds), 4.2), squeeze=False)
    for ax, kind in zip(axes[0], kinds):
        _scatter_axes(ax, [r for r in rows if r[0] == kind], kind, x_label, y_label)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _render_step_stride(path: Path, rows) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    xs = [r[1] for r in rows]
    ys = [r[2] for r in rows]
    ax.scatter(xs, ys, color="#1f6f8b", zorder=3)
    limit = 1.05 * max(max(xs), max(ys), 1e-12)
    ax.plot([0, limit], [0, limit], ls="--", color="0.6", lw=1, label="identity")
    slope = rows[0][4]
    if slope is not None:
        ax.plot([0, limit], [0, slope * limit], color="#c1553f", lw=1.5,
                label=f"fit slope {slope:.3f}")
    ax.set_xlim(0, limit)
    ax.set_ylim(0, 1.05 * max(max(ys), slope * limit if slope else 0, 1e-12))
    ax.set_xlabel("step combined-CV mean error")
    ax.set_ylabel("stride combined-CV mean error")
    ax.set_title("step vs stride")
    ax.legend(fontsize=8, loc="upper left")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_figures(report: dict, out_dir) -> list[Path]:
    """One PNG per nonempty figure family, next to the CSVs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tables = figure_tables(report)
    written: list[Path] = []
    labels = {
        FAMILY_MIRRORED: ("normal-CV mean error", "mirrored-CV mean error"),
        FAMILY_COMBINED: ("normal-CV mean error", "combined-CV mean error"),
        FAMILY_UNCERTAINTY: ("asymmetric-model uncertainty", "symmetric-model uncertainty"),
    }
    for family, (x_label, y_label) in labels.items():
        header, rows = tables[family]
        if not rows:
            continue
        path = out_dir / f"{family}.png"
        _render_scatter_family(path, header, rows, x_label, y_label)
        written.append(path)
    header, rows = tables[FAMILY_STEP_STRIDE]
    if rows:
        path = out_dir / f"{FAMILY_STEP_STRIDE}.png"
        _render_step_stride(path, rows)
        written.append(path)
    return written
