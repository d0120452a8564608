"""Regression tables: aligned text and long-format CSV."""

from __future__ import annotations

import numpy as np
import pandas as pd

from .ols import FitResult
from .spec import format_vcov, parse_vcov

LABELS = {
    "const": "Constant",
    "heat_days": "Heat Days",
    "heat_wave": "Heat Wave",
    "tropical_nights": "Tropical Nights",
    "elderly_share": "Share pop. >=65",
    "greenness_z": "Greenness Score",
    "income_10k": "Mean annual gross income (10k Eur)",
    "hospital_distance_km": "Distance to nearest Hospital (km)",
    "altitude_km": "Mean Altitude (km)",
    "deaths_per_1k": "Deaths per 1k Inhabitants (week)",
}
FE_LABELS = {"month_of_year": "Month-of-Year", "year": "Year", "district": "District"}
STAR_LEVELS = ((0.01, "***"), (0.05, "**"), (0.1, "*"))
SIGNIF_FOOTER = "Signif. Codes: ***: 0.01, **: 0.05, *: 0.1"


def label(term: str) -> str:
    if ":" in term:
        return " x ".join(label(t) for t in term.split(":"))
    return LABELS.get(term, term)


def stars(p: float) -> str:
    for cut, mark in STAR_LEVELS:
        if p < cut:
            return mark
    return ""


def vcov_footer(kind) -> str:
    name, dims = parse_vcov(kind)
    if name == "iid":
        return "IID standard-errors in parentheses"
    if name == "hc1":
        return "Heteroskedasticity-robust standard-errors in parentheses"
    return f"Clustered ({' & '.join(FE_LABELS[d] for d in dims)}) standard-errors in parentheses"


def coefficient_frame(fits, names=None) -> pd.DataFrame:
    """Long table: one row per model and term."""
    rows = []
    for i, fit in enumerate(fits):
        model = names[i] if names else (fit.name or f"({i + 1})")
        se, p = fit.std_errors, fit.pvalues
        for term, est in fit.coefficients.items():
            rows.append({
                "model": model, "term": term, "label": label(term), "estimate": float(est),
                "std_error": float(se[term]), "p_value": float(p[term]), "stars": stars(p[term]),
            })
    return pd.DataFrame(rows, columns=["model", "term", "label", "estimate", "std_error", "p_value", "stars"])


def statistics_frame(fits, names=None) -> pd.DataFrame:
    rows = []
    for i, fit in enumerate(fits):
        rows.append({
            "model": names[i] if names else (fit.name or f"({i + 1})"),
            "observations": fit.n_obs, "r2": fit.r2,
            "within_r2": fit.within_r2, "vcov": format_vcov(fit.vcov_kind) if fit.vcov_kind else "",
            "fixed_effects": ",".join(fit.fixed_effects),
        })
    return pd.DataFrame(rows)


def _fmt(x, digits):
    return f"{x:.{digits}f}"


def regression_table(fits: list[FitResult], digits: int = 3, response: str | None = None) -> str:
    """Aligned-text table: coefficients with stars, standard errors in
    parentheses, fixed-effect block, fit statistics, and footers."""
    if not fits:
        raise ValueError("no models to report")
    response = response or fits[0].response
    terms = []
    for fit in fits:
        for t in fit.coefficients.index:
            if t not in terms and t != "const":
                terms.append(t)
    if any("const" in f.coefficients.index for f in fits):
        terms.append("const")

    body = []  # (label, cells) or section marker strings
    body.append(("Dependent Variable:", [label(response)] + [""] * (len(fits) - 1)))
    body.append(("Model:", [f"({i + 1})" for i in range(len(fits))]))
    body.append("-")
    body.append(("Variables", [""] * len(fits)))
    for t in terms:
        est_cells, se_cells = [], []
        for fit in fits:
            if t in fit.coefficients.index:
                est_cells.append(_fmt(fit.coefficients[t], digits) + stars(fit.pvalues[t]))
                se_cells.append(f"({_fmt(fit.std_errors[t], digits)})")
            else:
                est_cells.append("")
                se_cells.append("")
        body.append((label(t), est_cells))
        body.append(("", se_cells))
    dims = [d for d in ("month_of_year", "year", "district") if any(d in f.fixed_effects for f in fits)]
    if dims:
        body.append("-")
        body.append(("Fixed-effects", [""] * len(fits)))
        for d in dims:
            body.append((FE_LABELS[d], ["Yes" if d in f.fixed_effects else "" for f in fits]))
    body.append("-")
    body.append(("Observations", [f"{f.n_obs:,}" for f in fits]))
    body.append(("R2", [_fmt(f.r2, digits) for f in fits]))
    if any(f.fixed_effects for f in fits):
        body.append(("Within R2", ["" if np.isnan(f.within_r2) else _fmt(f.within_r2, digits) for f in fits]))

    rows = [r for r in body if r != "-"]
    lw = max(len(name) for name, _ in rows)
    cw = max([8] + [len(c) for name, cells in rows if name != "Dependent Variable:" for c in cells])

    def render(row):
        name, cells = row
        if name == "Dependent Variable:":
            return f"{name:<{lw}}  {cells[0]}"
        return (f"{name:<{lw}}  " + "  ".join(f"{c:>{cw}}" for c in cells)).rstrip()

    width = max(len(render(r)) for r in rows)
    rule = "-" * width
    lines = [rule] + [rule if r == "-" else render(r) for r in body] + [rule]
    lines.extend(dict.fromkeys(vcov_footer(f.vcov_kind) for f in fits))
    lines.append(SIGNIF_FOOTER)
    return "\n".join(lines) + "\n"
