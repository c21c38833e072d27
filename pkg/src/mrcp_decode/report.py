"""Report serialization: JSON, CSV tables, and dependency-free SVG heatmaps."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .pipeline import EvaluationReport

CELL = 46
MARGIN_LEFT = 110
MARGIN_TOP = 70

# Anchor colors for the two fixed scales.
_CONFUSION_LOW = (255, 255, 255)
_CONFUSION_HIGH = (8, 69, 148)
_CORR_NEG = (33, 102, 172)
_CORR_MID = (255, 255, 255)
_CORR_POS = (178, 24, 43)


def _lerp(lo, hi, t):
    return tuple(int(round(l + (h - l) * t)) for l, h in zip(lo, hi))


def _confusion_color(value: float) -> str:
    t = min(max(value, 0.0), 1.0)
    return "rgb(%d,%d,%d)" % _lerp(_CONFUSION_LOW, _CONFUSION_HIGH, t)


def _correlation_color(value: float) -> str:
    t = min(max(value, -1.0), 1.0)
    if t < 0:
        rgb = _lerp(_CORR_MID, _CORR_NEG, -t)
    else:
        rgb = _lerp(_CORR_MID, _CORR_POS, t)
    return "rgb(%d,%d,%d)" % rgb


def svg_heatmap(matrix: np.ndarray, labels: list[str], title: str,
                scale: str) -> str:
    """Render a labelled heatmap with a fixed color scale as SVG text.

    ``scale`` is "confusion" ([0, 1], white to blue) or "correlation"
    ([-1, 1], blue through white to red).
    """
    matrix = np.asarray(matrix, dtype=float)
    k = matrix.shape[0]
    color = _confusion_color if scale == "confusion" else _correlation_color
    width = MARGIN_LEFT + k * CELL + 20
    height = MARGIN_TOP + k * CELL + 20

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="11">',
        f'<text x="{MARGIN_LEFT}" y="20" font-size="14">{title}</text>',
    ]
    for j, name in enumerate(labels):
        x = MARGIN_LEFT + j * CELL + CELL // 2
        parts.append(
            f'<text x="{x}" y="{MARGIN_TOP - 8}" text-anchor="middle">'
            f"{name}</text>"
        )
    for i in range(k):
        y = MARGIN_TOP + i * CELL
        parts.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{y + CELL // 2 + 4}" '
            f'text-anchor="end">{labels[i]}</text>'
        )
        for j in range(k):
            value = matrix[i, j]
            x = MARGIN_LEFT + j * CELL
            dark = (abs(value) if scale == "correlation" else value) > 0.6
            text_color = "#ffffff" if dark else "#000000"
            parts.append(
                f'<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" '
                f'fill="{color(value)}" stroke="#999"/>'
            )
            parts.append(
                f'<text x="{x + CELL // 2}" y="{y + CELL // 2 + 4}" '
                f'text-anchor="middle" fill="{text_color}">{value:.2f}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def matrix_csv(matrix: np.ndarray, labels: list[str]) -> str:
    lines = ["," + ",".join(labels)]
    for name, row in zip(labels, np.asarray(matrix, dtype=float)):
        lines.append(name + "," + ",".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"


def report_json(report: EvaluationReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def write_report_files(report: EvaluationReport, out_dir) -> dict[str, Path]:
    """Write report.json, confusion CSV, and the two SVG heatmaps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.json",
        "confusion_csv": out / "confusion.csv",
        "confusion_svg": out / "confusion.svg",
        "template_corr_svg": out / "template_corr.svg",
    }
    paths["report"].write_text(report_json(report), encoding="utf-8")
    paths["confusion_csv"].write_text(
        matrix_csv(report.confusion, report.class_names), encoding="utf-8"
    )
    paths["confusion_svg"].write_text(
        svg_heatmap(report.confusion, report.class_names,
                    "Confusion matrix (row-normalized)", "confusion"),
        encoding="utf-8",
    )
    paths["template_corr_svg"].write_text(
        svg_heatmap(report.template_corr, report.class_names,
                    "Template correlation map", "correlation"),
        encoding="utf-8",
    )
    return paths


def rerender_from_json(report_path, out_dir) -> dict[str, Path]:
    """Re-emit CSV and SVG artifacts from a stored report.json."""
    doc = json.loads(Path(report_path).read_text(encoding="utf-8"))
    report = EvaluationReport(
        config=doc["config"],
        class_names=doc["class_names"],
        fold_accuracies=doc["fold_accuracies"],
        mean_accuracy=doc["mean_accuracy"],
        std_accuracy=doc["std_accuracy"],
        confusion=np.array(doc["confusion"], dtype=float),
        template_corr=np.array(doc["template_corr"], dtype=float),
        fold_records=doc["fold_records"],
        bands=doc["bands"],
        wall_clock_s=doc["wall_clock_s"],
    )
    return write_report_files(report, out_dir)
