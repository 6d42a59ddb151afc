"""Publication-style figures from gamn experiment CSV logs."""

__version__ = "0.1.0"

from .render import FigureSpec, PlotDataError, render

__all__ = ["FigureSpec", "PlotDataError", "render"]
