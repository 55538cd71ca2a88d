"""CSV and JSON output for power tables and real-data reports.

Output is a pure function of the input: no timestamps, fixed column order,
floats written with ``repr`` (shortest round-trip form, '.' decimal).
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence, Union

from ..statistic import kernel_to_dict
from .geomagia import RealDataReport
from .power import PowerTable

SCHEMA_VERSION = 1

POWER_COLUMNS = ("scenario", "kernel", "n", "m", "replications", "rejections", "rate", "se", "failures")


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _power_records(table: PowerTable) -> list:
    return [{"scenario": r.scenario, "kernel": r.kernel, "n": r.n, "m": r.m,
             "replications": r.replications, "rejections": r.rejections,
             "rate": r.rate, "se": r.se, "failures": r.failures} for r in table.rows]


def _report_list(obj) -> list:
    return list(obj) if isinstance(obj, (list, tuple)) else [obj]


def _real_columns(reports: Sequence[RealDataReport]) -> list:
    labels = []
    for rep in reports:
        for o in rep.outcomes:
            if o.kernel.label not in labels:
                labels.append(o.kernel.label)
    return labels


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) for v in row])
    return buf.getvalue()


def render_csv(obj: Union[PowerTable, RealDataReport, Sequence[RealDataReport]]) -> str:
    if isinstance(obj, PowerTable):
        return _csv_text(POWER_COLUMNS, [[rec[c] for c in POWER_COLUMNS] for rec in _power_records(obj)])
    reports = _report_list(obj)
    kernels = _real_columns(reports)
    header = ["sample", "family", "n", "kappa", "beta", "theta_1", "theta_2", "theta_3", "regime"]
    header += [f"p[{k}]" for k in kernels]
    rows = []
    for rep in reports:
        p = {o.kernel.label: o.p_value for o in rep.outcomes}
        rows.append([rep.label, rep.family, rep.n, rep.kappa, rep.beta, *rep.theta, rep.regime or ""]
                    + [p.get(k) for k in kernels])
    return _csv_text(header, rows)


def _real_dict(rep: RealDataReport) -> dict:
    return {
        "sample": rep.label, "family": rep.family, "n": rep.n,
        "fit": {"kappa": rep.kappa, "beta": rep.beta, "theta": list(rep.theta), "regime": rep.regime},
        "b": rep.b, "m": rep.m, "seed": rep.seed,
        "tests": [{"kernel": kernel_to_dict(o.kernel), "label": o.kernel.label, "statistic": o.statistic,
                   "critical_value": o.critical_value, "p_value": o.p_value, "reject": o.reject}
                  for o in rep.outcomes],
    }


def render_json(obj: Union[PowerTable, RealDataReport, Sequence[RealDataReport]]) -> str:
    if isinstance(obj, PowerTable):
        doc = {"schema_version": SCHEMA_VERSION, "kind": "power_table",
               "experiment": obj.experiment, "rows": _power_records(obj)}
    else:
        doc = {"schema_version": SCHEMA_VERSION, "kind": "real_data",
               "reports": [_real_dict(r) for r in _report_list(obj)]}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def emit_report(obj, fmt: str, path) -> None:
    """Write ``obj`` (a PowerTable or real-data report(s)) as ``csv`` or ``json``.

    Identical inputs give byte-identical files.
    """
    fmt = fmt.lower()
    if fmt == "csv":
        text = render_csv(obj)
    elif fmt == "json":
        text = render_json(obj)
    else:
        raise ValueError(f"unknown report format {fmt!r}; use csv or json")
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
