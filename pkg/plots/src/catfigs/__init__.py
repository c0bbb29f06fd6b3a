"""Render publication figures from catamp CSV exports."""

__version__ = "0.1.0"

from .render import FIGURE_IDS, FigureSpec, RenderError, render
