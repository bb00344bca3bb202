"""Boundary limits and support classification for Herglotz and Caratheodory functions.

A Herglotz function maps the upper half-plane into itself; a Caratheodory
function maps the unit disk into the closed right half-plane.  Almost-everywhere
boundary values are reached by a geometric schedule (eps_k = 0.1 * 2^-k toward
the line, radii r_k = 1 - 0.1 * 2^-k toward the circle) with two-stage
Richardson extrapolation.  Classification at a boundary point:

    finite limit, positive Im (line) / Re (circle)      -> ac
    infinite limit, scaled limit -> 0                   -> sc
    infinite limit, scaled limit -> mass > 0            -> pp
    finite real (line) / purely imaginary (circle) limit -> regular

where the scaled limit is (-i eps) m(lambda + i eps) on the line and
((1 - r)/2) f(r zeta) on the circle, converging to the point mass.  Singular
points are flagged by two variants (Im-blowup and |value|-blowup); their
disagreement is reported, never assumed away.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergent
from .interval_sets import (RealIntervalSet, CircleArcSet, angles_hull,
                            canonicalize, circle_set, points_hull)

DIVERGENCE_CAP = 1e8
INFINITE_LIMIT = 1e6
AC_IM_TOL = 1e-6
MASS_TOL = 1e-6


def geometric_schedule(start: float = 0.1, factor: float = 0.5, stages: int = 13):
    """Distances to the boundary: start * factor^k, k = 0..stages-1."""
    if stages < 4:
        raise ValueError("schedule needs at least 4 stages")
    if not (0 < factor < 1) or start <= 0:
        raise ValueError("schedule must be strictly monotone toward the boundary")
    return tuple(start * factor ** k for k in range(stages))


def richardson_sequence(values):
    """Two-stage Richardson extrapolation along axis 0.

    values: array (K, ...) of samples on a ratio-2 geometric schedule, ordered
    toward the boundary.  Returns (value, error, converged).  Convergence means
    the final extrapolant differences contract by a factor >= 2 (exact
    agreement counts as converged).
    """
    v = np.asarray(values, dtype=complex)
    w = 2.0 * v[1:] - v[:-1]
    u = (4.0 * w[1:] - w[:-1]) / 3.0
    value = u[-1]
    d = np.abs(np.diff(u, axis=0))
    if d.shape[0] == 0:
        return value, np.zeros_like(value, dtype=float), np.ones(value.shape, dtype=bool)
    err = d[-1]
    scale = 1.0 + np.abs(value)
    tiny = err <= 1e-13 * scale
    if d.shape[0] >= 2:
        contracting = d[-1] <= 0.5 * d[-2] + 1e-15 * scale
    else:
        contracting = np.ones(value.shape, dtype=bool)
    converged = np.logical_or(tiny, contracting)
    return value, err, converged


def relaxed_ok(value, err, converged, rel: float = 1e-6):
    """Acceptance mask for boundary sweeps: converged, or stalled at a noise
    floor far below the use tolerance (near closing spectral gaps the Floquet
    eigenvector loses digits and the extrapolant plateaus around 1e-10
    relative instead of contracting)."""
    value = np.asarray(value)
    return converged | (np.isfinite(value) & (err <= rel * (1.0 + np.abs(value))))


@dataclass(frozen=True)
class BoundaryValue:
    value: complex
    error: float
    diverged: bool          # some sample exceeded the hard cap
    infinite: bool          # |samples| > 1e6 and monotone growth over last 4 stages
    samples: tuple = field(repr=False, default=())


@dataclass(frozen=True)
class BoundaryFunction:
    """Evaluation contract for an analytic function on C_+ (herglotz) or D (caratheodory)."""
    kind: str
    evaluate: callable = field(compare=False)
    metadata: str = ""

    def __post_init__(self):
        if self.kind not in ("herglotz", "caratheodory"):
            raise ValueError("kind must be 'herglotz' or 'caratheodory'")

    def __call__(self, z: complex) -> complex:
        return complex(self.evaluate(z))


def _approach_points(f: BoundaryFunction, p, schedule):
    """Interior points marching toward boundary point p along the schedule.

    Returns (points, location, distances); distances are the representable
    gaps to the boundary (1 - fl(1 - eps) on the circle), which the scaled
    point-mass weights must use to avoid cancellation noise near r = 1.
    """
    if f.kind == "herglotz":
        lam = float(p)
        return [complex(lam, eps) for eps in schedule], lam, list(schedule)
    theta = _as_angle(p)
    zeta = cmath.exp(1j * theta)
    radii = [1.0 - eps for eps in schedule]
    return [r * zeta for r in radii], theta, [1.0 - r for r in radii]


def _as_angle(p) -> float:
    if isinstance(p, complex):
        if abs(abs(p) - 1.0) > 1e-9:
            raise ValueError("circle boundary point must be unimodular")
        return math.atan2(p.imag, p.real) % (2.0 * math.pi)
    return float(p) % (2.0 * math.pi)


MIN_EPS_LINE = 1e-13
MIN_EPS_CIRCLE = 3e-9   # keeps 1 - fl(1 - eps) accurate to ~3e-8 relative


def _sample_with_extension(f: BoundaryFunction, p, schedule):
    """Samples along the schedule, deepened while |f| keeps growing geometrically.

    A point mass scales like eps^-1, so the default schedule alone cannot reach
    the 1e6 blowup threshold; continuing the same ratio toward the depth floor
    lets a true singularity cross it while bounded tails stop the extension at
    once.  Returns (samples, schedule_used).
    """
    min_eps = MIN_EPS_LINE if f.kind == "herglotz" else MIN_EPS_CIRCLE
    sched = list(schedule)
    factor = sched[1] / sched[0]
    samples = [f(z) for z in _approach_points(f, p, sched)[0]]
    while sched[-1] * factor >= min_eps:
        mags = np.abs(samples[-4:])
        if mags[-1] > DIVERGENCE_CAP:
            break
        if not (np.all(np.diff(mags) > 0) and mags[-1] > 1.5 * mags[0]):
            break
        sched.append(sched[-1] * factor)
        samples.append(f(_approach_points(f, p, sched[-1:])[0][0]))
    return np.array(samples, dtype=complex), tuple(sched)


def boundary_value(f: BoundaryFunction, p, schedule=None) -> BoundaryValue:
    """Richardson-extrapolated boundary limit with an error estimate.

    Flags divergence when |f| exceeds 1e8; raises NonConvergent when the
    extrapolant differences fail to contract by a factor of 2 while the value
    stays finite and not obviously blowing up.
    """
    schedule = schedule or geometric_schedule()
    samples, _ = _sample_with_extension(f, p, schedule)
    mags = np.abs(samples)
    diverged = bool(np.any(mags > DIVERGENCE_CAP))
    tail = mags[-4:]
    infinite = bool(mags[-1] > INFINITE_LIMIT and np.all(np.diff(tail) > 0))
    value, err, converged = richardson_sequence(samples)
    if diverged or infinite:
        return BoundaryValue(complex(value), float(err), diverged, infinite, tuple(samples))
    if not bool(converged):
        raise NonConvergent(
            f"boundary extrapolation failed to contract at {p!r} "
            f"(last differences {float(err):.3e})")
    return BoundaryValue(complex(value), float(err), False, False, tuple(samples))


def scaled_limit(f: BoundaryFunction, p, schedule=None):
    """Point-mass functional: lim (-i eps) m(lambda + i eps), resp.
    lim ((1-r)/2) f(r zeta).  Returns (value, error, converged)."""
    schedule = schedule or geometric_schedule()
    pts, _, dists = _approach_points(f, p, schedule)
    if f.kind == "herglotz":
        weights = np.array([-1j * d for d in dists])
    else:
        weights = np.array([d / 2.0 for d in dists])
    samples = np.array([f(z) for z in pts], dtype=complex) * weights
    value, err, converged = richardson_sequence(samples)
    return complex(value), float(err), bool(converged)


@dataclass(frozen=True)
class PointClassification:
    location: float
    verdict: str                     # ac | singular | sc | pp | regular | undetermined
    limit_value: complex
    error: float
    point_mass: float = 0.0
    scaled_value: complex = 0.0
    singular_unprimed: bool = False  # part-based blowup (Im on the line, Re on the circle)
    singular_primed: bool = False    # |value| blowup
    variants_agree: bool = True
    diagnostics: str = ""


def classify_point(f: BoundaryFunction, p, schedule=None,
                   ac_tol: float = AC_IM_TOL, mass_tol: float = MASS_TOL) -> PointClassification:
    """Limit trichotomy at one boundary point.

    The singular test is run in two variants: blowup of the Herglotz-positive
    part (Im on the line, Re on the circle) and blowup of |value|; both are
    reported and a disagreement downgrades nothing silently.
    """
    schedule = schedule or geometric_schedule()
    loc = float(p) if f.kind == "herglotz" else _as_angle(p)
    samples, used = _sample_with_extension(f, p, schedule)
    part = samples.imag if f.kind == "herglotz" else samples.real
    mags = np.abs(samples)

    def blows(seq):
        t = np.asarray(seq)[-4:]
        return bool(np.abs(t[-1]) > INFINITE_LIMIT and np.all(np.diff(np.abs(t)) > 0)) \
            or bool(np.any(np.abs(seq) > DIVERGENCE_CAP))

    singular_unprimed = blows(part)
    singular_primed = blows(mags)
    agree = singular_unprimed == singular_primed

    if singular_unprimed or singular_primed:
        sval, serr, sconv = scaled_limit(f, p, used)
        mass = sval.real if f.kind == "herglotz" else sval.real
        if sconv and mass > mass_tol:
            return PointClassification(loc, "pp", complex(np.inf, np.inf), math.inf,
                                       point_mass=float(mass), scaled_value=sval,
                                       singular_unprimed=singular_unprimed,
                                       singular_primed=singular_primed, variants_agree=agree)
        if sconv and abs(sval) <= mass_tol:
            return PointClassification(loc, "sc", complex(np.inf, np.inf), math.inf,
                                       scaled_value=sval,
                                       singular_unprimed=singular_unprimed,
                                       singular_primed=singular_primed, variants_agree=agree)
        return PointClassification(loc, "singular", complex(np.inf, np.inf), math.inf,
                                   scaled_value=sval,
                                   singular_unprimed=singular_unprimed,
                                   singular_primed=singular_primed, variants_agree=agree,
                                   diagnostics="scaled limit did not settle")

    value, err, converged = richardson_sequence(samples)
    value = complex(value)
    err = float(err)
    if not bool(converged):
        return PointClassification(loc, "undetermined", value, err,
                                   diagnostics="extrapolants failed to contract")
    pos_part = value.imag if f.kind == "herglotz" else value.real
    if pos_part > ac_tol:
        return PointClassification(loc, "ac", value, err)
    if abs(pos_part) <= ac_tol:
        return PointClassification(loc, "regular", value, err)
    return PointClassification(loc, "undetermined", value, err,
                               diagnostics="negative Herglotz/Caratheodory part at the boundary")


def ac_density(f: BoundaryFunction, p, schedule=None) -> float:
    """pi^-1 Im m(lambda + i0) on the line, pi^-1 Re f(zeta) on the circle."""
    c = classify_point(f, p, schedule)
    if c.verdict == "ac":
        part = c.limit_value.imag if f.kind == "herglotz" else c.limit_value.real
        return part / math.pi
    if c.verdict == "regular":
        return 0.0
    raise ValueError(f"ac_density needs an ac or regular point, got {c.verdict!r} at {p!r}")


def essential_support_ac(f: BoundaryFunction, grid, schedule=None, ac_tol: float = AC_IM_TOL):
    """Essential closure of the hull of maximal ac-verdict runs on the grid.

    Returns (set, verdicts); undetermined points are excluded from the hull and
    kept in the verdict list for audit.
    """
    grid = list(grid)
    if len(grid) < 2:
        raise ValueError("grid needs at least 2 points")
    verdicts = [classify_point(f, p, schedule, ac_tol=ac_tol) for p in grid]
    step = abs(grid[1] - grid[0])
    passing = [v.location for v in verdicts if v.verdict == "ac"]
    if f.kind == "herglotz":
        from .interval_sets import essential_closure
        return essential_closure(points_hull(passing, step)), verdicts
    return angles_hull(passing, step).essential_closure(), verdicts


def reflect(f: BoundaryFunction, z: complex) -> complex:
    """Value in the opposite region: m(z) = conj(m(conj z)) across the line,
    f(z) = -conj(f(1/conj z)) across the circle."""
    z = complex(z)
    if f.kind == "herglotz":
        if z.imag == 0.0:
            raise ValueError("boundary point rejected: reflection needs Im z != 0")
        if z.imag > 0.0:
            raise ValueError("z is in the natural domain; evaluate directly")
        return complex(np.conj(f(np.conj(z))))
    r = abs(z)
    if abs(r - 1.0) < 1e-15:
        raise ValueError("boundary point rejected: reflection needs |z| != 1")
    if r < 1.0:
        raise ValueError("z is in the natural domain; evaluate directly")
    return complex(-np.conj(f(1.0 / np.conj(z))))


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    worst_violation: float
    worst_sample: complex
    details: tuple


def validate(f: BoundaryFunction, samples) -> ValidationReport:
    """Half-plane (Im >= 0) or disk (Re >= 0) positivity at each interior sample."""
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    rows = []
    worst = math.inf
    worst_z = None
    for z in samples:
        v = f(complex(z))
        margin = v.imag if f.kind == "herglotz" else v.real
        rows.append((complex(z), v, margin))
        if margin < worst:
            worst, worst_z = margin, complex(z)
    return ValidationReport(worst >= -1e-12, float(worst), worst_z, tuple(rows))


@dataclass(frozen=True)
class HerglotzRepresentation:
    """m(z) = c + d z + integral [(x - z)^-1 - x (1 + x^2)^-1] d omega(x),
    with c = Re m(i) and d = lim m(i eta)/(i eta) >= 0."""
    c: float
    d: float
    measure_probe: callable = field(compare=False, default=None)


def herglotz_representation(f: BoundaryFunction, measure_probe=None,
                            etas=(8.0, 16.0, 32.0, 64.0, 128.0)) -> HerglotzRepresentation:
    if f.kind != "herglotz":
        raise ValueError("representation constants are for the half-plane kind")
    c = f(1j).real
    ratios = np.array([f(1j * e) / (1j * e) for e in etas])
    d = max(float(ratios[-1].real + 2.0 * (ratios[-1].real - ratios[-2].real)), 0.0)
    return HerglotzRepresentation(float(c), d, measure_probe)


def classification_csv(f: BoundaryFunction, grid, out=None, schedule=None) -> str:
    """Per-grid-point CSV: location, Re, Im, error_estimate, verdict, point_mass."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["location", "re", "im", "error_estimate", "verdict", "point_mass"])
    for p in grid:
        cp = classify_point(f, p, schedule)
        re = cp.limit_value.real if math.isfinite(cp.limit_value.real) else "inf"
        im = cp.limit_value.imag if math.isfinite(cp.limit_value.imag) else "inf"
        err = cp.error if math.isfinite(cp.error) else "inf"
        w.writerow([f"{cp.location:.12g}", re, im, err, cp.verdict, f"{cp.point_mass:.12g}"])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
