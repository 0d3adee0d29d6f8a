"""Numerical lab for the natural-map (barycenter) method on real hyperbolic space."""
from . import barycenter, bmeasure, calib, conelab, hypcore, natmap
from .errors import NatMapError

__version__ = "0.1.0"
