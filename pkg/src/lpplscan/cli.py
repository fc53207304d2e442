"""Command-line front end: fit, scan, postmortem, synth, stats.

Every command reads local CSV files, writes plain CSV/JSON (plus rendered
figures on the report paths), and echoes its fully resolved configuration
into the output directory so any run can be reproduced byte-identically from
that file alone. Exit codes: 0 success, 1 usage or data error, 2 domain
verdicts (disqualified fit, empty post-mortem selection).
"""

from __future__ import annotations

import datetime as dt
import json
import os
from pathlib import Path

import click

from . import __version__, figures, postmortem, store, synth
from .indicator import ScanConfig, scan
from .model import Window
from .optimizer import OptimizerConfig, SearchBox, calibrate
from .qualify import FilterConfig, qualify
from .timeseries import (
    DataError,
    PriceSeries,
    crash_stats,
    date_to_index,
    index_to_fractional_date,
    load_csv,
    position_to_date,
    write_csv,
)

SCAN_DEFAULTS = {
    "csv": None,
    "column": None,
    "row_policy": "strict",
    "start": None,
    "end": None,
    "max_window": 650,
    "min_window": 30,
    "step": 5,
    "seed": 0,
    "restarts": 3,
    "max_evals": 3000,
    "population": 7,
    "lomb_alpha": 0.05,
    "ar1_alpha": 0.05,
    "max_rel_error": 0.20,
    "osc_coefficient": 0.5,
    "workers": None,
    "plot": True,
}


def _fail(message: str):
    raise click.ClickException(message)


def _parse_date(value: str | None, flag: str) -> dt.date | None:
    if value is None:
        return None
    try:
        return dt.date.fromisoformat(value)
    except ValueError:
        _fail(f"{flag} must be an ISO date (YYYY-MM-DD), got {value!r}")


def _load_series(path, column, row_policy) -> PriceSeries:
    try:
        return load_csv(path, column=column, on_bad_rows=row_policy)
    except DataError as exc:
        _fail(str(exc))


def _ensure_out(out: str) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _resolve(defaults: dict, config_file: str | None, flags: dict) -> dict:
    """defaults <- config file <- explicitly passed flags."""
    resolved = dict(defaults)
    if config_file:
        try:
            with open(config_file, encoding="utf-8") as handle:
                file_values = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            _fail(f"cannot read config {config_file}: {exc}")
        unknown = set(file_values) - set(defaults)
        if unknown:
            _fail(f"unknown config keys: {sorted(unknown)}")
        resolved.update(file_values)
    resolved.update({k: v for k, v in flags.items() if v is not None})
    return resolved


def _optimizer_config(resolved: dict) -> OptimizerConfig:
    return OptimizerConfig(
        population_size=resolved["population"],
        max_evaluations=resolved["max_evals"],
        restarts=resolved["restarts"],
        seed=resolved["seed"],
    )


def _filter_config(resolved: dict) -> FilterConfig:
    return FilterConfig(
        lomb_alpha=resolved["lomb_alpha"],
        ar1_alpha=resolved["ar1_alpha"],
        max_rel_error=resolved["max_rel_error"],
        oscillation_coefficient=resolved["osc_coefficient"],
    )


@click.group()
@click.version_option(version=__version__, prog_name="lpplscan")
def main():
    """Detect endogenous bubbles in price series and analyze crash timing."""


option_csv = click.option("--csv", "csv_path", required=True, help="Input price CSV.")
option_column = click.option("--column", default=None,
                             help="Price column (default: Adj Close, then Close).")
option_row_policy = click.option("--row-policy", type=click.Choice(["strict", "skip"]),
                                 default=None, help="Bad-row handling (default strict).")


@main.command()
@option_csv
@option_column
@option_row_policy
@click.option("--t1", required=True, help="Window start date (YYYY-MM-DD).")
@click.option("--t2", required=True, help="Window end date (YYYY-MM-DD).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=3, show_default=True)
@click.option("--max-evals", type=int, default=3000, show_default=True)
@click.option("--out", default="fit-out", show_default=True, help="Output directory.")
@click.pass_context
def fit(ctx, csv_path, column, row_policy, t1, t2, seed, restarts, max_evals, out):
    """Calibrate and qualify a single window; exit 2 if it fails the filters."""
    t1_date = _parse_date(t1, "--t1")
    t2_date = _parse_date(t2, "--t2")
    if t1_date >= t2_date:
        _fail("--t1 must be strictly before --t2")
    series = _load_series(csv_path, column, row_policy or "strict")
    try:
        i1 = date_to_index(series, t1_date, nearest_following=True)
        i2 = date_to_index(series, t2_date, nearest_following=True)
        if series.dates[i2] > t2_date:
            i2 -= 1
        window = Window(t1=i1, t2=i2)
    except (DataError, ValueError) as exc:
        _fail(str(exc))

    cfg = OptimizerConfig(seed=seed, restarts=restarts, max_evaluations=max_evals)
    result = calibrate(series, window, SearchBox.for_window(window), cfg)
    report = qualify(result, series)

    out_dir = _ensure_out(out)
    payload = {
        "t1_date": series.dates[window.t1].isoformat(),
        "t2_date": series.dates[window.t2].isoformat(),
        "t1": window.t1,
        "t2": window.t2,
        "seed": seed,
        "success": result.success,
        "cost": result.cost if result.success else None,
        "params": None,
        "qualification": {
            "passed": report.passed,
            "bubble_sign": report.bubble_sign,
            "conditions": report.conditions(),
            "oscillation_value": report.oscillation_value,
            "max_rel_error_value": report.max_rel_error_value,
            "lomb_false_alarm": report.lomb_false_alarm,
            "ar1_stat": report.ar1_stat,
        },
    }
    if result.success:
        p = result.params
        payload["params"] = {
            "tc": p.tc, "tc_date": position_to_date(series, p.tc).isoformat(),
            "m": p.m, "omega": p.omega,
            "A": p.A, "B": p.B, "C1": p.C1, "C2": p.C2,
            "damping": p.damping,
        }
    _write_json(payload, out_dir / "fit.json")
    if result.success:
        click.echo(
            f"tc={payload['params']['tc_date']} m={result.params.m:.4f} "
            f"omega={result.params.omega:.4f} cost={result.cost:.6g} "
            f"qualified={report.passed} sign={report.bubble_sign}"
        )
    else:
        click.echo("fit failed: no feasible candidate")
    if not report.passed:
        ctx.exit(2)


@main.command(name="scan")
@click.option("--csv", "csv_path", default=None, help="Input price CSV.")
@option_column
@option_row_policy
@click.option("--start", default=None, help="First endpoint date.")
@click.option("--end", default=None, help="Last endpoint date.")
@click.option("--max-window", type=int, default=None)
@click.option("--min-window", type=int, default=None)
@click.option("--step", type=int, default=None, help="Window shrink step.")
@click.option("--seed", type=int, default=None)
@click.option("--restarts", type=int, default=None)
@click.option("--max-evals", type=int, default=None)
@click.option("--population", type=int, default=None)
@click.option("--lomb-alpha", type=float, default=None)
@click.option("--ar1-alpha", type=float, default=None)
@click.option("--max-rel-error", type=float, default=None)
@click.option("--osc-coefficient", type=float, default=None)
@click.option("--workers", type=int, default=None,
              help="Parallel workers (default: all cores; 1 = serial).")
@click.option("--plot/--no-plot", "plot", default=None,
              help="Render the indicator figure (default on).")
@click.option("--config", "config_file", default=None,
              help="JSON config; flags override file values.")
@click.option("--out", default="scan-out", show_default=True)
def scan_cmd(csv_path, column, row_policy, start, end, max_window, min_window,
             step, seed, restarts, max_evals, population, lomb_alpha, ar1_alpha,
             max_rel_error, osc_coefficient, workers, plot, config_file, out):
    """Scan endpoints, writing the indicator table and the qualified-fit store."""
    resolved = _resolve(SCAN_DEFAULTS, config_file, {
        "csv": csv_path, "column": column, "row_policy": row_policy,
        "start": start, "end": end, "max_window": max_window,
        "min_window": min_window, "step": step, "seed": seed,
        "restarts": restarts, "max_evals": max_evals, "population": population,
        "lomb_alpha": lomb_alpha, "ar1_alpha": ar1_alpha,
        "max_rel_error": max_rel_error, "osc_coefficient": osc_coefficient,
        "workers": workers, "plot": plot,
    })
    if not resolved["csv"]:
        _fail("an input CSV is required (--csv or config file)")
    series = _load_series(resolved["csv"], resolved["column"], resolved["row_policy"])
    try:
        cfg = ScanConfig(
            max_window=resolved["max_window"],
            min_window=resolved["min_window"],
            window_step=resolved["step"],
            endpoint_start=_parse_date(resolved["start"], "--start"),
            endpoint_end=_parse_date(resolved["end"], "--end"),
            optimizer=_optimizer_config(resolved),
            filters=_filter_config(resolved),
        )
    except ValueError as exc:
        _fail(str(exc))

    n_workers = resolved["workers"] or os.cpu_count() or 1
    result = scan(series, cfg, workers=n_workers)

    out_dir = _ensure_out(out)
    _write_json(resolved, out_dir / "config.json")
    store.write_indicator_csv(result.points, out_dir / "indicator.csv")
    store.write_indicator_json(result.points, out_dir / "indicator.json")
    store.write_fit_store(result.fits, out_dir / "fits.jsonl")
    if resolved["plot"] and result.points:
        figures.render_scan_figure(series, result.points, out_dir / "scan.png")
    click.echo(
        f"scanned {len(result.points)} endpoints, "
        f"{len(result.fits)} qualified fits -> {out_dir}"
    )


@main.command(name="postmortem")
@option_csv
@option_column
@option_row_policy
@click.option("--fit-store", "fit_store", required=True,
              help="fits.jsonl produced by scan.")
@click.option("--start", required=True, help="First endpoint of the cluster.")
@click.option("--end", required=True, help="Last endpoint of the cluster.")
@click.option("--sign", type=click.Choice(["positive", "negative"]),
              default="positive", show_default=True)
@click.option("--quantiles", "quantile_spec", default="0.05,0.2,0.8,0.95",
              show_default=True, help="Comma-separated quantile levels for tc.")
@click.option("--plot/--no-plot", "plot", default=True)
@click.option("--out", default="postmortem-out", show_default=True)
@click.pass_context
def postmortem_cmd(ctx, csv_path, column, row_policy, fit_store, start, end,
                   sign, quantile_spec, plot, out):
    """Density and quantile report for a cluster of qualified fits; exit 2
    when the selection is empty."""
    series = _load_series(csv_path, column, row_policy or "strict")
    start_date = _parse_date(start, "--start")
    end_date = _parse_date(end, "--end")
    try:
        levels = tuple(float(x) for x in quantile_spec.split(","))
    except ValueError:
        _fail(f"bad --quantiles value {quantile_spec!r}")
    try:
        fits = store.read_fit_store(fit_store)
    except OSError as exc:
        _fail(f"cannot read fit store: {exc}")

    try:
        selected = postmortem.collect_fits(fits, start_date, end_date, sign)
    except postmortem.EmptySelectionError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)
    report = postmortem.report(selected, series, quantile_levels=levels)

    out_dir = _ensure_out(out)
    _write_json({
        "csv": csv_path, "fit_store": fit_store, "sign": sign,
        "start": start, "end": end, "quantiles": list(levels), "plot": plot,
    }, out_dir / "config.json")
    _write_json({
        "n_fits": report.n_fits,
        "tc_quantiles": {repr(level): date.isoformat()
                         for level, date in sorted(report.tc_quantiles.items())},
        "t1_earliest": report.t1_range[0].isoformat(),
        "t1_latest": report.t1_range[1].isoformat(),
        "tc_skewness": report.tc_skewness,
        "tc_mode_date": report.tc_mode_date.isoformat(),
    }, out_dir / "report.json")
    for name, density in (("tc_density", report.tc_density),
                          ("t1_density", report.t1_density)):
        with open(out_dir / f"{name}.csv", "w", encoding="utf-8") as handle:
            handle.write("grid_date,density\n")
            for x, value in zip(density.grid.tolist(), density.values.tolist()):
                date = index_to_fractional_date(series, max(x, 0.0))[0]
                handle.write(f"{date.isoformat()},{value!r}\n")
    if plot:
        figures.render_postmortem_figure(series, report, out_dir / "postmortem.png",
                                         fits=selected)
    click.echo(
        f"{report.n_fits} fits: tc mode {report.tc_mode_date}, "
        f"earliest t1 {report.t1_range[0]}, skewness {report.tc_skewness:.3f} -> {out_dir}"
    )


@main.command(name="synth")
@click.option("--out", required=True, help="Output CSV path.")
@click.option("--n-days", type=int, default=750, show_default=True)
@click.option("--tc", type=float, default=None,
              help="Critical time, trading-day position (default: n_days - 1 + 15).")
@click.option("--m", "m_", type=float, default=0.5, show_default=True)
@click.option("--omega", type=float, default=9.0, show_default=True)
@click.option("--a", "a_", type=float, default=8.0, show_default=True)
@click.option("--b", "b_", type=float, default=-0.05, show_default=True)
@click.option("--c1", type=float, default=None,
              help="Cos amplitude (default from the paper-like preset).")
@click.option("--c2", type=float, default=None,
              help="Sin amplitude (default from the paper-like preset).")
@click.option("--noise-sigma", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--start-date", default="2017-01-02", show_default=True)
def synth_cmd(out, n_days, tc, m_, omega, a_, b_, c1, c2, noise_sigma, seed, start_date):
    """Write a synthetic bubble series in the ingestible CSV schema."""
    start = _parse_date(start_date, "--start-date")
    if tc is None:
        tc = float(n_days - 1 + 15)
    preset = synth.paper_like_params(tc=tc, a=a_, b=b_, m=m_, omega=omega)
    params = preset if c1 is None and c2 is None else preset.__class__(
        tc=tc, m=m_, omega=omega, A=a_, B=b_,
        C1=c1 if c1 is not None else preset.C1,
        C2=c2 if c2 is not None else preset.C2,
    )
    try:
        spec = synth.SynthSpec(params=params, n_days=n_days,
                               noise_sigma=noise_sigma, seed=seed, start_date=start)
    except ValueError as exc:
        _fail(str(exc))
    series = synth.generate(spec)
    write_csv(series, out)
    click.echo(f"wrote {len(series)} days to {out} (tc at position {tc})")


@main.command(name="stats")
@option_csv
@option_column
@option_row_policy
@click.option("--start", default=None, help="Window start (default: first date).")
@click.option("--end", default=None, help="Window end (default: last date).")
def stats_cmd(csv_path, column, row_policy, start, end):
    """Peak/valley crash statistics for a date window, as one CSV row."""
    series = _load_series(csv_path, column, row_policy or "strict")
    start_date = _parse_date(start, "--start") or series.first_date
    end_date = _parse_date(end, "--end") or series.last_date
    try:
        cs = crash_stats(series, start_date, end_date)
    except DataError as exc:
        _fail(str(exc))
    click.echo("peak_date,peak_price,valley_date,valley_price,crash_size")
    click.echo(
        f"{cs.peak_date.isoformat()},{cs.peak_price!r},"
        f"{cs.valley_date.isoformat()},{cs.valley_price!r},{cs.crash_size!r}"
    )


if __name__ == "__main__":
    main()
