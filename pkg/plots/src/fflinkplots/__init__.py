"""Figure rendering for fflink sweep outputs."""

from .render import FIGURE_KINDS, SchemaError, empirical_cdf, load_rows, render

__version__ = "0.1.0"
