"""Space-time discretized index-1 saddle dynamics for semilinear elliptic problems."""

__version__ = "0.1.0"
