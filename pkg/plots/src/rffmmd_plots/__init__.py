"""Render power curves and timing tables from rffmmd result CSVs."""

from .frame import ResultFrame, SchemaError
from .power import plot_power
from .timing import fit_loglog_slope, plot_timing

__version__ = "0.1.0"
