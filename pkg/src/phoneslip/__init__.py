"""Phone slip detection: synthetic/recorded IMU traces to a pairwise
classification performance table."""

__version__ = "0.1.0"
