"""plots_report: figures from kleinwalk experiment CSV outputs."""

from .figures import FIGURE_KINDS, FigureError, FigureSpec, render

__all__ = ["FIGURE_KINDS", "FigureError", "FigureSpec", "render"]
