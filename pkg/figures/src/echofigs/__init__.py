"""Figure rendering for the spin-echo simulator's CSV/JSON outputs."""

from .reading import SchemaError, read_report, read_table
from .render import KINDS, PlotSpec, render

__version__ = "0.1.0"
__all__ = ["KINDS", "PlotSpec", "SchemaError", "read_report", "read_table", "render"]
