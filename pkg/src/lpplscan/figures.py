"""Figure rendering for scan and post-mortem reports.

Figures are written next to the delimited outputs: price on the left axis,
indicator values or densities on the right. Rendering is file-only (Agg);
nothing here affects the numeric outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.dates as mdates
import matplotlib.pyplot as plt

from .indicator import ConfidencePoint, StoredFit
from .postmortem import PostMortemReport
from .timeseries import PriceSeries, index_to_fractional_date

DPI = 150


def _price_axis(ax, series: PriceSeries, label: str) -> None:
    ax.plot(series.dates, series.closes, color="tab:blue", linewidth=1.0, label=label)
    ax.set_ylabel("Index level", color="tab:blue")
    ax.tick_params(axis="y", labelcolor="tab:blue")
    ax.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m"))


def render_scan_figure(
    series: PriceSeries,
    points: list[ConfidencePoint],
    path,
    title: str = "Bubble confidence indicators",
) -> None:
    """Price with positive (red) and negative (green) indicators, twin axes."""
    fig, ax = plt.subplots(figsize=(11, 5.5))
    _price_axis(ax, series, "price")
    ax2 = ax.twinx()
    dates = [p.endpoint_date for p in points]
    ax2.fill_between(dates, [p.positive_ci for p in points], step="mid",
                     color="tab:red", alpha=0.7, label="positive CI")
    ax2.fill_between(dates, [-p.negative_ci for p in points], step="mid",
                     color="tab:green", alpha=0.7, label="negative CI")
    top = max([p.positive_ci for p in points] + [p.negative_ci for p in points] + [0.05])
    ax2.set_ylim(-1.5 * top, 1.5 * top)
    ax2.axhline(0.0, color="gray", linewidth=0.5)
    ax2.set_ylabel("Confidence indicator")
    ax2.legend(loc="upper left", fontsize=8)
    ax.set_title(title)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_postmortem_figure(
    series: PriceSeries,
    report: PostMortemReport,
    path,
    fits: list[StoredFit] | None = None,
    title: str = "Post-mortem: start-time and critical-time densities",
) -> None:
    """Price with pdf(t1) in green and pdf(tc) in red on a density axis."""
    fig, ax = plt.subplots(figsize=(11, 5.5))
    _price_axis(ax, series, "price")
    ax2 = ax.twinx()

    def grid_dates(density):
        return [index_to_fractional_date(series, max(x, 0.0))[0] for x in density.grid]

    ax2.plot(grid_dates(report.t1_density), report.t1_density.values,
             color="tab:green", linewidth=1.2, label="pdf(t1)")
    ax2.plot(grid_dates(report.tc_density), report.tc_density.values,
             color="tab:red", linewidth=1.2, label="pdf(tc)")
    ax2.set_ylabel("Probability density (per trading day)")
    ax2.set_ylim(bottom=0.0)
    ax2.legend(loc="upper left", fontsize=8)

    if fits:
        # window span of the selected population, as a reading aid
        earliest = min(f.t1_date for f in fits)
        latest = max(f.t2_date for f in fits)
        ax.axvspan(earliest, latest, color="gray", alpha=0.12)
    ax.set_title(title)
    fig.autofmt_xdate()
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
