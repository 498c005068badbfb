"""Figures from hisparse detection-sweep CSV files.

Pure consumer of the sweep CSV schema: no simulation happens here.
"""

from .sweep_data import REQUIRED_COLUMNS, CellStats, aggregate, read_sweep_csv
from .figure import render_detection_figure

__version__ = "0.1.0"

__all__ = [
    "REQUIRED_COLUMNS",
    "CellStats",
    "aggregate",
    "read_sweep_csv",
    "render_detection_figure",
]
