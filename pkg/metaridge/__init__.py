"""
Meta-learning with generalized ridge regression: hyper-covariance estimators,
exact and limiting predictive risk, and the simulation harness that compares them.
"""

__version__ = "1.0.0"
