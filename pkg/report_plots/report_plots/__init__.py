"""Figure rendering for the compositional-PCA CLI's CSV outputs.

This package is deliberately decoupled from the estimator: it consumes only
the biplot CSV (kind,label,pc1,pc2,kept) and the mu-sweep CSV (mu,max_dev)
files the main CLI emits, and renders publication-style figures.

Renderers live in :mod:`report_plots.biplot` and
:mod:`report_plots.mu_sensitivity`, each runnable with ``python -m``.
"""

__version__ = "0.1.0"

from .spec import PlotSpec

__all__ = ["PlotSpec", "__version__"]
