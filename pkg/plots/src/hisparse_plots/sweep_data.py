"""Reading and aggregating detection-sweep CSV files.

The input is the trial table written by `hisparse experiment`: one row per
Monte Carlo trial, `#`-prefixed comment lines carrying the config echo, and
exactly these columns:

    grid_id,N,n,sigma,M,m,assignment,trial,seed,total_users,collided,
    detected,baseline_detected,analytic_baseline,iterations
"""

import csv
import math
from dataclasses import dataclass

REQUIRED_COLUMNS = (
    "grid_id", "N", "n", "sigma", "M", "m", "assignment", "trial", "seed",
    "total_users", "collided", "detected", "baseline_detected",
    "analytic_baseline", "iterations",
)

_INT_COLUMNS = ("grid_id", "N", "n", "sigma", "M", "m", "trial",
                "total_users", "collided", "detected", "baseline_detected",
                "iterations")


class SweepDataError(ValueError):
    pass


def read_sweep_csv(path):
    """Rows of a sweep CSV as dicts with numeric columns converted."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines:
        raise SweepDataError(f"{path}: no CSV content")
    reader = csv.DictReader(lines)
    header = reader.fieldnames or []
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise SweepDataError(f"{path}: missing required columns {missing}")
    extra = [c for c in header if c not in REQUIRED_COLUMNS]
    if extra:
        raise SweepDataError(f"{path}: unexpected columns {extra}")
    rows = []
    for raw in reader:
        row = dict(raw)
        try:
            for c in _INT_COLUMNS:
                row[c] = int(row[c])
            row["analytic_baseline"] = float(row["analytic_baseline"])
        except (TypeError, ValueError) as exc:
            raise SweepDataError(f"{path}: bad row {raw}: {exc}") from exc
        rows.append(row)
    if not rows:
        raise SweepDataError(f"{path}: no trial rows")
    return rows


@dataclass(frozen=True)
class CellStats:
    """Per (sigma, N) aggregate over trials."""

    sigma: int
    N: int
    trials: int
    mean_detected: float
    se_detected: float
    mean_baseline: float
    se_baseline: float
    analytic_baseline: float


def _mean_se(values):
    k = len(values)
    mean = sum(values) / k
    if k < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(var / k)


def aggregate(rows):
    """CellStats keyed by (sigma, N), aggregating detections over trials."""
    cells = {}
    for row in rows:
        cells.setdefault((row["sigma"], row["N"]), []).append(row)
    out = {}
    for (sigma, N), recs in sorted(cells.items()):
        det_mean, det_se = _mean_se([r["detected"] for r in recs])
        base_mean, base_se = _mean_se([r["baseline_detected"] for r in recs])
        analytic = recs[0]["analytic_baseline"]
        out[(sigma, N)] = CellStats(
            sigma=sigma, N=N, trials=len(recs),
            mean_detected=det_mean, se_detected=det_se,
            mean_baseline=base_mean, se_baseline=base_se,
            analytic_baseline=analytic,
        )
    return out
