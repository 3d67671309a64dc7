"""Training instrumentation for small binary and full-precision networks.

The package trains feed-forward classifiers whose weights and activations
may be constrained to two levels, tracks per-layer mutual information with
a binning estimator, and records loss/accuracy/gradient statistics into
reproducible JSONL run logs.
"""

__version__ = "0.1.0"
