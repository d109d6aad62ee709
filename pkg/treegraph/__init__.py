"""treegraph - multi-scale dynamic graph networks for tree point clouds."""

__version__ = "0.1.0"
