"""CSV and JSON emitters. Floats are written with ``repr`` so files round-trip."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return fmt(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path: Path, data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")
    return path


# -- table builders ---------------------------------------------------------

MEASURE_HEADER = ("t", "E_t_measure", "rho", "rho1")
KNOT_HEADER = ("k", "t_k", "d_k")
OMEGA_CURVE_HEADER = ("t", "omega")
LIMINF_HEADER = ("t_n", "liminf_bound")
USEQ_HEADER = ("n", "t_n", "log_u_n", "u_n", "identity_residual")
DELTA_HEADER = ("n", "log_delta_n", "log_delta_n_exterior", "log_u_n", "log_u_delta", "witness_flag")


def measure_rows(curve, ts):
    for t in ts:
        yield float(t), curve.set.neighborhood_measure(t), curve.rho(t), curve.rho1(t)


def knot_rows(omega):
    for k, (t, d) in enumerate(zip(omega.knots_t, omega.knots_d)):
        yield k, t, d


def delta_rows(report):
    for (n, ld, lu, v, flag), r in zip(report.rows(), report.reports):
        yield n, ld, r.log_delta_exterior, lu, v, flag
