"""Semi-random Unique Games: instance generators, SDP/LP solvers, rounding and audits."""

__version__ = "0.1.0"
