"""Match Laplace-Beltrami eigenspaces of near-isometric shapes."""

__version__ = "0.1.0"
