# core/report_writer.py
import json
import logging
import os
from typing import Any, List

from pandas import DataFrame
from tabulate import tabulate

from config.settings import settings
from core.experiment import ExperimentReport, ValidationSummary


def _fmt(value: Any, digits: int = 4) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


def write_json(payload: dict, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")
    logging.info(f"Report saved to {path}")
    return path


def write_report(report: ExperimentReport, path: str) -> str:
    return write_json(report.to_dict(), path)


def write_validation(summary: ValidationSummary, path: str) -> str:
    return write_json(summary.to_dict(), path)


def users_frame(report: ExperimentReport) -> DataFrame:
    """One row per user with the headline numbers of the report."""
    rows = []
    for u in report.users:
        row = {
            "user": u.user,
            "rate_closed": u.closed_form_rate,
            "rate_quadrature": u.quadrature_rate,
            "rate_lower_bound": u.lower_bound,
            "rate_empirical": u.empirical_rate,
            "ks_distance": u.ks_distance,
        }
        for entry in u.outage:
            row[f"outage_r{entry['threshold']:g}_analytic"] = entry["analytic"]
            row[f"outage_r{entry['threshold']:g}_empirical"] = entry["empirical"]
        rows.append(row)
    return DataFrame(rows)


def write_users_csv(report: ExperimentReport, path: str) -> str:
    users_frame(report).to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
    logging.info(f"Per-user table saved to {path}")
    return path


def format_report(report: ExperimentReport) -> str:
    headers = ["User", "Closed", "Quadrature", "Lower bound", "Empirical", "KS"]
    table_data: List[list] = []
    for u in report.users:
        marker = "*" if u.user == report.focus_user else ""
        table_data.append([f"{u.user}{marker}", _fmt(u.closed_form_rate), _fmt(u.quadrature_rate),
                           _fmt(u.lower_bound), _fmt(u.empirical_rate), _fmt(u.ks_distance, 3)])
    title = (f"{report.scheme.upper()} rates in bits/s/Hz, {report.realizations} realizations, "
             f"seed {report.seed} (* focus user)")
    return f"{title}\n{tabulate(table_data, headers, tablefmt=settings.TABLE_FORMAT)}\n"


def format_validation(summary: ValidationSummary) -> str:
    headers = ["Criterion", "Result", "Measured", "Limit", "Detail"]
    table_data = []
    for c in summary.criteria:
        result = "skipped" if c.passed is None else ("pass" if c.passed else "FAIL")
        table_data.append([c.name, result, _fmt(c.measured), _fmt(c.limit), c.detail])
    verdict = "all criteria passed" if summary.all_passed else "some criteria failed"
    return (f"Validation of {summary.scheme.upper()}, focus user {summary.focus_user}: {verdict}\n"
            f"{tabulate(table_data, headers, tablefmt=settings.TABLE_FORMAT)}\n")
