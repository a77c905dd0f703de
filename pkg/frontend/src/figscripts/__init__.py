"""Figure rendering for workbench sweep outputs."""

from .figures import KINDS, FigureSpec, render

__all__ = ["KINDS", "FigureSpec", "render"]
