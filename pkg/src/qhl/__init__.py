"""qhl: a numerical laboratory for quantised Hessians on polarized curves."""

__version__ = "0.1.0"
