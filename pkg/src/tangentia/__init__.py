"""Common tangent lines to spheres and quadrics: formulation, homotopy solving, closed forms."""

__version__ = "0.1.0"
