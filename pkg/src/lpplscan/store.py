"""File formats: indicator tables (CSV/JSON) and the JSON-lines fit store.

Writers are deterministic byte for byte: fixed column order, ISO dates, and
repr-based float formatting (shortest round-trip representation), so a rerun
with identical inputs and seeds reproduces identical files.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from typing import Iterable

from .indicator import ConfidencePoint, StoredFit

INDICATOR_COLUMNS = (
    "endpoint_date",
    "positive_ci",
    "negative_ci",
    "windows_total",
    "windows_fitted",
    "qualified_positive",
    "qualified_negative",
    "short_history_flag",
)


def _point_row(point: ConfidencePoint) -> dict:
    return {
        "endpoint_date": point.endpoint_date.isoformat(),
        "positive_ci": point.positive_ci,
        "negative_ci": point.negative_ci,
        "windows_total": point.windows_total,
        "windows_fitted": point.windows_fitted,
        "qualified_positive": point.qualified_positive,
        "qualified_negative": point.qualified_negative,
        "short_history_flag": point.short_history,
    }


def write_indicator_csv(points: Iterable[ConfidencePoint], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(INDICATOR_COLUMNS)
        for point in points:
            row = _point_row(point)
            writer.writerow([
                row["endpoint_date"],
                repr(row["positive_ci"]),
                repr(row["negative_ci"]),
                row["windows_total"],
                row["windows_fitted"],
                row["qualified_positive"],
                row["qualified_negative"],
                int(row["short_history_flag"]),
            ])


def write_indicator_json(points: Iterable[ConfidencePoint], path) -> None:
    rows = [_point_row(p) for p in points]
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(rows, handle, indent=2)
        handle.write("\n")


def read_indicator_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        rows = []
        for raw in csv.DictReader(handle):
            rows.append({
                "endpoint_date": dt.date.fromisoformat(raw["endpoint_date"]),
                "positive_ci": float(raw["positive_ci"]),
                "negative_ci": float(raw["negative_ci"]),
                "windows_total": int(raw["windows_total"]),
                "windows_fitted": int(raw["windows_fitted"]),
                "qualified_positive": int(raw["qualified_positive"]),
                "qualified_negative": int(raw["qualified_negative"]),
                "short_history_flag": bool(int(raw["short_history_flag"])),
            })
        return rows


def fit_record(fit: StoredFit) -> dict:
    return {
        "endpoint_date": fit.endpoint_date.isoformat(),
        "endpoint_index": fit.endpoint_index,
        "t1": fit.t1,
        "t1_date": fit.t1_date.isoformat(),
        "t2": fit.t2,
        "t2_date": fit.t2_date.isoformat(),
        "tc": fit.tc,
        "tc_date": fit.tc_date.isoformat(),
        "m": fit.m,
        "omega": fit.omega,
        "A": fit.A,
        "B": fit.B,
        "C1": fit.C1,
        "C2": fit.C2,
        "cost": fit.cost,
        "bubble_sign": fit.bubble_sign,
        "filters": fit.filters,
        "seed": fit.seed,
    }


def write_fit_store(fits: Iterable[StoredFit], path) -> None:
    """One JSON object per line, in scan order."""
    with open(path, "w", encoding="utf-8") as handle:
        for fit in fits:
            handle.write(json.dumps(fit_record(fit)))
            handle.write("\n")


def read_fit_store(path) -> list[StoredFit]:
    fits = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            fits.append(StoredFit(
                endpoint_date=dt.date.fromisoformat(rec["endpoint_date"]),
                endpoint_index=rec["endpoint_index"],
                t1=rec["t1"], t1_date=dt.date.fromisoformat(rec["t1_date"]),
                t2=rec["t2"], t2_date=dt.date.fromisoformat(rec["t2_date"]),
                tc=rec["tc"], tc_date=dt.date.fromisoformat(rec["tc_date"]),
                m=rec["m"], omega=rec["omega"],
                A=rec["A"], B=rec["B"], C1=rec["C1"], C2=rec["C2"],
                cost=rec["cost"], bubble_sign=rec["bubble_sign"],
                filters=rec["filters"], seed=rec["seed"],
            ))
    return fits
