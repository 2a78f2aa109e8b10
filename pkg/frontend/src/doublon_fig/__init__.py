"""Figure rendering for doublon-ed result bundles."""

from .render import FigureError, load_spec, render

__version__ = "0.1.0"
