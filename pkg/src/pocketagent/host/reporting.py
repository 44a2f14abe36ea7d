"""Scenario run reports: structured files plus rendered figures.

The report directory gets the machine-readable report (JSON), delimited
tables for spreadsheets and diffs (TSV/CSV), and, on request, matplotlib
renderings of the final simulated screen and the expectation timeline.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.patches import Rectangle

from ..geometry import SCREEN_H, SCREEN_W
from .scenario import ScenarioRunResult


def write_report(result: ScenarioRunResult, outdir: Path | str,
                 figures: bool = False) -> list[Path]:
    """Write report.json, expectations.tsv, records.csv (last artifact), and
    optionally screen.png / expectations.png. Returns the written paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    report_path = outdir / "report.json"
    report_path.write_text(
        json.dumps(result.report.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    written.append(report_path)

    tsv_path = outdir / "expectations.tsv"
    with tsv_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(["step", "probe", "want", "got", "ok"])
        for e in result.report.expectations:
            writer.writerow([e.step_index, e.probe, e.want, e.got, e.ok])
    written.append(tsv_path)

    artifact = None
    for session in result.host.sessions.values():
        if session.last_artifact is not None:
            artifact = session.last_artifact
    if artifact is not None:
        csv_path = outdir / "records.csv"
        with csv_path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(artifact.schema.fields))
            writer.writeheader()
            for record in artifact.records:
                writer.writerow(record)
        written.append(csv_path)

    if figures:
        if result.host.device.foreground is not None:
            screen_path = outdir / "screen.png"
            render_screen_figure(result.host.device.snapshot(), screen_path)
            written.append(screen_path)
        if result.report.expectations:
            timeline_path = outdir / "expectations.png"
            render_expectations_figure(result.report, timeline_path)
            written.append(timeline_path)
    return written


def render_screen_figure(observation, path: Path | str) -> None:
    """Draw the render layer at device coordinates; overlay-only texts are
    dashed red so visually injected content stands out."""
    fig, ax = plt.subplots(figsize=(SCREEN_W / 300, SCREEN_H / 300), dpi=150)
    ax.set_xlim(0, SCREEN_W)
    ax.set_ylim(SCREEN_H, 0)  # device origin is top-left
    ax.set_aspect("equal")
    ax.set_title(observation.activity, fontsize=8)
    for render in observation.render_layer:
        box = render.bbox
        overlay = render.origin == "overlay_only"
        ax.add_patch(Rectangle(
            (box.left, box.top), box.width, box.height,
            fill=False, linewidth=0.6,
            linestyle="--" if overlay else "-",
            edgecolor="red" if overlay else "steelblue"))
        ax.text(box.left + 8, box.top + box.height / 2, render.text[:40],
                fontsize=4, va="center")
    ax.set_xticks([])
    ax.set_yticks([])
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def render_expectations_figure(report, path: Path | str) -> None:
    """One marker per expectation along the script, green pass / red fail."""
    fig, ax = plt.subplots(figsize=(6, 2), dpi=120)
    xs = [e.step_index for e in report.expectations]
    ys = [1 if e.ok else 0 for e in report.expectations]
    colors = ["seagreen" if e.ok else "firebrick" for e in report.expectations]
    ax.scatter(xs, ys, c=colors, s=36)
    for e in report.expectations:
        ax.annotate(e.probe, (e.step_index, 1 if e.ok else 0),
                    textcoords="offset points", xytext=(0, 8),
                    fontsize=5, rotation=30)
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["fail", "pass"])
    ax.set_xlabel("script step")
    ax.set_title(f"{report.name}: {len(report.expectations)} expectations",
                 fontsize=9)
    ax.set_ylim(-0.5, 1.8)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
