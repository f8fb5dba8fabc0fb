"""Deterministic figure rendering for the laboratory's CSV outputs."""

from .figures import (
    FIGURE_KINDS,
    SCAN_COLUMNS,
    VARIANCE_COLUMNS,
    FigureSpec,
    SchemaMismatch,
    read_scan,
    read_variance,
    render,
    spec_from_dict,
    wrap_frequency_series,
)

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "SCAN_COLUMNS",
    "VARIANCE_COLUMNS",
    "FigureSpec",
    "SchemaMismatch",
    "read_scan",
    "read_variance",
    "render",
    "spec_from_dict",
    "wrap_frequency_series",
    "__version__",
]
