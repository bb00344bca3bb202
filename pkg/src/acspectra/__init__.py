"""Computational spectral theory: essential closures, Herglotz/Caratheodory
boundary values, and Weyl-Titchmarsh data for Jacobi, CMV, and Schrodinger
operators."""

from .errors import NonConvergent, MonodromyDegenerate, DegenerateDenominator
from .interval_sets import (
    Interval, RealIntervalSet, Arc, CircleArcSet, GeneratedFatSet,
    canonicalize, circle_set, full_circle, lebesgue_measure, set_algebra,
    essential_closure, equivalent_supports, set_to_json, set_from_json,
)
from .jacobi import JacobiCoefficients
from .cmv import VerblunskyCoefficients
from .schrodinger import PiecewisePotential
from .harness_cli import SpectralReport, run_config, verify_inclusion

__version__ = "0.1.0"
