"""GMI survival - nonparametric estimation of the growth modulation index survival function."""

__version__ = "0.1.0"
