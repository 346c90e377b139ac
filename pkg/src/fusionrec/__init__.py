"""Multi-modal movie rating prediction: feature fusion transformer, MovieLens harness, CF/SVD baselines."""

__version__ = "0.1.0"
