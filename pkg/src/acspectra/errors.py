"""Shared exception types for boundary extrapolation and transfer-matrix kernels."""


class NonConvergent(RuntimeError):
    """Boundary extrapolants failed to contract (or no admissible fixed point exists)."""


class MonodromyDegenerate(RuntimeError):
    """Both Floquet multipliers have (numerically) equal modulus at Im z != 0.

    Cannot happen off the real axis for positive off-diagonal coefficients; raised
    to signal an internal error rather than silently picking a branch.
    """


class DegenerateDenominator(ZeroDivisionError):
    """The Mobius composition denominator vanished (M_+ = M_-), formula indeterminate."""
