"""Report rows and aligned text tables for command output."""

import math
from collections.abc import Mapping, Sequence
from typing import Any

from md_forecast.models.metrics import (
    DiffusivityReport,
    DivergenceReport,
    ForecastErrors,
    ViolationReport,
)

METRIC_COLUMNS = ("metric", "value", "units", "threshold_table", "M", "seed")
DIFFUSIVITY_COLUMNS = (
    "species",
    "D_A2_per_fs",
    "D_m2_per_s",
    "slope",
    "intercept",
    "r_squared",
    "fit_start_fs",
    "fit_end_fs",
)


def format_value(value: Any) -> str:
    """Render one table cell."""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isnan(value):
            return "-"
        return f"{value:.6g}"
    if value is None:
        return "-"
    return str(value)


def format_table(
    rows: Sequence[Mapping[str, Any]],
    columns: Sequence[str],
    title: str | None = None,
) -> str:
    """Aligned plain-text table; numbers right-aligned, text left-aligned."""
    cells = [[format_value(row.get(col)) for col in columns] for row in rows]
    widths = [
        max([len(col), *(len(line[k]) for line in cells)]) for k, col in enumerate(columns)
    ]
    numeric = [
        all(isinstance(row.get(col), int | float) for row in rows) and bool(rows)
        for col in columns
    ]

    def render(values: Sequence[str]) -> str:
        parts = [
            v.rjust(w) if is_num else v.ljust(w)
            for v, w, is_num in zip(values, widths, numeric, strict=True)
        ]
        return "  ".join(parts).rstrip()

    lines = [title] if title else []
    lines.append(render(list(columns)))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(render(line) for line in cells)
    return "\n".join(lines)


def metric_rows(
    errors: ForecastErrors,
    report: ViolationReport,
    divergence: DivergenceReport,
    seed: int,
) -> list[dict[str, Any]]:
    """Rows for metrics.csv: `metric,value,units,threshold_table,M,seed`."""
    table = report.threshold_source
    base = {"threshold_table": "", "M": "", "seed": seed}
    rows: list[dict[str, Any]] = [
        {**base, "metric": "mse_delta", "value": errors.mse_delta, "units": "A^2"},
        {**base, "metric": "mae_delta", "value": errors.mae_delta, "units": "A"},
        {**base, "metric": "mse_r", "value": errors.mse_r, "units": "A^2"},
        {**base, "metric": "mae_r", "value": errors.mae_r, "units": "A"},
    ]
    vetted = {"threshold_table": table, "M": report.M, "seed": seed}
    rows += [
        {**vetted, "metric": "V_n", "value": report.V_n, "units": "count"},
        {**vetted, "metric": "V_r", "value": report.V_r, "units": "fraction"},
        {**vetted, "metric": "steps_checked", "value": report.L, "units": "count"},
    ]
    rows += [
        {**base, "metric": "diverged", "value": int(divergence.diverged), "units": "bool"},
        {
            **base,
            "metric": "divergence_step",
            "value": -1 if divergence.step is None else divergence.step,
            "units": "frame",
        },
    ]
    return rows


def diffusivity_rows(reports: Sequence[DiffusivityReport]) -> list[dict[str, Any]]:
    return [
        {
            "species": r.species,
            "D_A2_per_fs": r.D_A2_per_fs,
            "D_m2_per_s": r.D_m2_per_s,
            "slope": r.slope,
            "intercept": r.intercept,
            "r_squared": r.r_squared,
            "fit_start_fs": r.fit_start_fs,
            "fit_end_fs": r.fit_end_fs,
        }
        for r in reports
    ]


def mean_rows(
    rows: Sequence[Mapping[str, Any]],
    keys: Sequence[str],
    values: Sequence[str],
) -> list[dict[str, Any]]:
    """Average `values` over rows sharing `keys`, in first-seen key order."""
    groups: dict[tuple[Any, ...], list[Mapping[str, Any]]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for key, members in groups.items():
        merged: dict[str, Any] = dict(zip(keys, key, strict=True))
        for name in values:
            merged[name] = sum(float(m[name]) for m in members) / len(members)
        merged["runs"] = len(members)
        out.append(merged)
    return out
