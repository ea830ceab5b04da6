"""Static figures from cnls CSV outputs: log-log decay curves with slope
guides, premultiplied flatness plots, energy-ledger overlays and dyadic band
bar charts.  Strictly read-only consumers of the documented CSV schemas."""

from .render import PlotSpec, RenderResult, array_digest, render
from .schemas import SchemaError

__version__ = "0.1.0"
