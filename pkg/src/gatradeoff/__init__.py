"""GA-based statistical estimation with a sampling/algorithmic variance
decomposition, empirical convergence-rate fitting, and budget-constrained
sample-size/evaluation allocation."""

__version__ = "0.1.0"
