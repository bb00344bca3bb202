"""Periodic-plus-patch one-dimensional Schrodinger operators -d^2/dx^2 + V.

V is piecewise constant: a period-L base pattern, optionally overridden by a
compactly supported patch occupying [0, P).  Across a constant piece of value
v and length ell the solution vector (psi, psi') propagates by the det-1
matrix (w^2 = v - z, even in w, so the branch is immaterial)

    T = [[cosh(w ell),            ell sinhc(w ell)],
         [(v - z) ell sinhc(w ell),  cosh(w ell)]].

Weyl solutions psi_+/- decay at +/-infinity; over a period in the periodic
region they scale by the Floquet multipliers u, 1/u of the monodromy matrix,
and the half-line m-functions are logarithmic derivatives

    m_+(z, x0) = psi_+'(x0)/psi_+(x0)    Herglotz,      free: +i sqrt(z)
    m_-(z, x0) = psi_-'(x0)/psi_-(x0)    anti-Herglotz, free: -i sqrt(z)

with Im sqrt(z) > 0.  The diagonal Green's function g(z, x0) = 1/(m_- - m_+)
is Herglotz (free: i/(2 sqrt(z))); its boundary phase xi = Arg g(lam+i0)/pi
lies in [0, 1], equals 1/2 exactly where the operator is reflectionless, and
{0 < xi < 1} recovers the ac spectrum through its essential closure.  The
periodic spectrum is also {|tr monodromy| <= 2}, an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MonodromyDegenerate, NonConvergent
from .boundary_analysis import (geometric_schedule, relaxed_ok, richardson_sequence,
                                DIVERGENCE_CAP, INFINITE_LIMIT)
from .interval_sets import (RealIntervalSet, canonicalize, essential_closure,
                            points_hull, set_algebra)
from .jacobi import ReflectionlessReport

LAMBDA_TOP = 25.0
NONREAL_TOL = 1e-4
DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class PiecewisePotential:
    """Piecewise-constant potential: period-L pieces plus a patch on [0, P)."""
    period: float
    pieces: tuple            # ((length, value), ...) lengths sum to period
    patch: tuple = ()        # ((length, value), ...) override on [0, P)

    def __post_init__(self):
        pieces = tuple((float(l), float(v)) for l, v in self.pieces)
        patch = tuple((float(l), float(v)) for l, v in self.patch)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "patch", patch)
        object.__setattr__(self, "period", float(self.period))
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        if any(l <= 0.0 for l, _ in pieces) or any(l <= 0.0 for l, _ in patch):
            raise ValueError("piece lengths must be positive")
        if abs(math.fsum(l for l, _ in pieces) - self.period) > 1e-12:
            raise ValueError("piece lengths must sum to the period")

    @property
    def patch_length(self) -> float:
        return math.fsum(l for l, _ in self.patch)

    def value(self, x: float) -> float:
        if self.patch and 0.0 <= x < self.patch_length:
            acc = 0.0
            for l, v in self.patch:
                acc += l
                if x < acc:
                    return v
        y = x % self.period
        acc = 0.0
        for l, v in self.pieces:
            acc += l
            if y < acc or acc == self.period:
                return v
        return self.pieces[-1][1]

    def sup_bound(self) -> float:
        vals = [abs(v) for _, v in self.pieces] + [abs(v) for _, v in self.patch]
        return max(vals)

    def to_descriptor(self) -> dict:
        return {"type": "schrodinger", "period": self.period,
                "pieces": [[l, v] for l, v in self.pieces],
                "patch": [[l, v] for l, v in self.patch]}

    @classmethod
    def from_descriptor(cls, d: dict) -> "PiecewisePotential":
        if d.get("type") != "schrodinger":
            raise ValueError("descriptor type must be 'schrodinger'")
        return cls(float(d["period"]),
                   tuple((l, v) for l, v in d["pieces"]),
                   tuple((l, v) for l, v in d.get("patch", [])))


@dataclass(frozen=True)
class SchrodingerWeylData:
    z: complex
    x0: float
    m_plus: complex
    m_minus: complex
    g: complex


def _sinhc(x):
    """sinh(x)/x, even entire function; series below the cancellation scale."""
    x = np.asarray(x, dtype=complex)
    small = np.abs(x) < 1e-4
    xs = np.where(small, 0.0, x)
    with np.errstate(invalid="ignore"):
        direct = np.where(small, 1.0, np.sinh(xs) / np.where(small, 1.0, xs))
    series = 1.0 + x * x / 6.0 * (1.0 + x * x / 20.0)
    return np.where(small, series, direct)


def piece_propagator(zs, length: float, value: float) -> np.ndarray:
    """(K, 2, 2) transfer of (psi, psi') across a constant piece, det 1."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    w = np.sqrt(value - zs)
    wl = w * length
    ch = np.cosh(wl)
    sc = length * _sinhc(wl)
    T = np.empty(zs.shape + (2, 2), dtype=complex)
    T[..., 0, 0] = ch
    T[..., 0, 1] = sc
    T[..., 1, 0] = (value - zs) * sc
    T[..., 1, 1] = ch
    return T


def _boundaries(V: PiecewisePotential, a: float, b: float):
    """Sorted interior breakpoints of V on (a, b)."""
    pts = set()
    if V.patch:
        acc = 0.0
        for l, _ in V.patch:
            if a < acc < b:
                pts.add(acc)
            acc += l
        if a < acc < b:
            pts.add(acc)
    cum = [0.0]
    for l, _ in V.pieces:
        cum.append(cum[-1] + l)
    k_lo = math.floor(a / V.period) - 1
    k_hi = math.ceil(b / V.period) + 1
    for k in range(k_lo, k_hi + 1):
        for c in cum[:-1]:
            x = k * V.period + c
            if a < x < b:
                pts.add(x)
    return sorted(pts)


def transfer_interval(V: PiecewisePotential, zs, a: float, b: float) -> np.ndarray:
    """(K, 2, 2) transfer of (psi, psi') from x = a to x = b > a."""
    if not b > a:
        raise ValueError("need b > a")
    xs = [a] + _boundaries(V, a, b) + [b]
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    T = np.broadcast_to(np.eye(2, dtype=complex), zs.shape + (2, 2)).copy()
    for lo, hi in zip(xs[:-1], xs[1:]):
        if hi - lo < 1e-15:
            continue
        T = piece_propagator(zs, hi - lo, V.value((lo + hi) / 2.0)) @ T
    return T


def _inv_unimodular(T):
    out = np.empty_like(T)
    out[..., 0, 0] = T[..., 1, 1]
    out[..., 0, 1] = -T[..., 0, 1]
    out[..., 1, 0] = -T[..., 1, 0]
    out[..., 1, 1] = T[..., 0, 0]
    return out


def _stable_roots(tr):
    """Floquet multipliers u_big, u_small with u_big u_small = 1, |u_big| >= 1.

    Raises MonodromyDegenerate when the multipliers collide on the unit circle
    (band-edge z on the real axis); off-axis z always separates them.
    """
    sq = np.sqrt(tr * tr - 4.0)
    r1 = (tr + sq) / 2.0
    r2 = (tr - sq) / 2.0
    big = np.where(np.abs(r1) >= np.abs(r2), r1, r2)
    small = 1.0 / big
    if np.any(np.abs(np.abs(big) - np.abs(small)) < DEGENERACY_TOL):
        raise MonodromyDegenerate(
            "Floquet multipliers coincide on the unit circle; move z off the real axis")
    return big, small


def _eigvec(M, u):
    """Eigenvector of the 2x2 stack M for eigenvalue u, larger-norm formula."""
    v1 = np.stack([M[..., 0, 1], u - M[..., 0, 0]], axis=-1)
    v2 = np.stack([u - M[..., 1, 1], M[..., 1, 0]], axis=-1)
    n1 = np.abs(v1).sum(axis=-1)
    n2 = np.abs(v2).sum(axis=-1)
    return np.where((n1 >= n2)[..., None], v1, v2)


def _propagate_vec(V: PiecewisePotential, zs, vec, a: float, b: float,
                   inverse: bool = False):
    """Carry (psi, psi') across [a, b] piece by piece (inverted: from b back
    to a), renormalizing between pieces; only the direction is preserved."""
    xs = [a] + _boundaries(V, a, b) + [b]
    spans = list(zip(xs[:-1], xs[1:]))
    if inverse:
        spans = spans[::-1]
    for lo, hi in spans:
        if hi - lo < 1e-15:
            continue
        T = piece_propagator(zs, hi - lo, V.value((lo + hi) / 2.0))
        if inverse:
            T = _inv_unimodular(T)
        vec = (T @ vec[..., None])[..., 0]
        scale = np.maximum(np.abs(vec[..., 0]), np.abs(vec[..., 1]))
        vec = vec / np.where(scale == 0.0, 1.0, scale)[..., None]
    return vec


def _m_grid(V: PiecewisePotential, zs, x0: float, side: str):
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    L = V.period
    P = V.patch_length
    if _plus_side(side):
        c = L * math.ceil(max(P, x0) / L + 1.0)
        M = transfer_interval(V, zs, c, c + L)
        _, u = _stable_roots(M[..., 0, 0] + M[..., 1, 1])
        vec = _eigvec(M, u)
        if c > x0:
            vec = _propagate_vec(V, zs, vec, x0, c, inverse=True)
    else:
        c = L * (math.floor(min(0.0, x0) / L) - 1.0)
        M = transfer_interval(V, zs, c, c + L)
        u, _ = _stable_roots(M[..., 0, 0] + M[..., 1, 1])
        vec = _eigvec(M, u)
        if x0 > c:
            vec = _propagate_vec(V, zs, vec, c, x0)
    return vec[..., 1] / vec[..., 0]


def _plus_side(side) -> bool:
    if side in ("+", "plus", 1, +1):
        return True
    if side in ("-", "minus", -1):
        return False
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def _require_offaxis(z) -> complex:
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("spectral parameter must have nonzero imaginary part")
    return z


def m_half_line(V: PiecewisePotential, z: complex, x0: float, side: str) -> complex:
    """Weyl m-function psi'(x0)/psi(x0) of the decaying solution on the given
    half line; Herglotz for side '+', anti-Herglotz for side '-'."""
    z = _require_offaxis(z)
    return complex(_m_grid(V, np.array([z]), float(x0), side)[0])


def green_diag(V: PiecewisePotential, z: complex, x0: float) -> complex:
    """Diagonal Green's function 1/(m_- - m_+), Herglotz; free: i/(2 sqrt(z))."""
    z = _require_offaxis(z)
    mp = m_half_line(V, z, x0, "+")
    mm = m_half_line(V, z, x0, "-")
    return 1.0 / (mm - mp)


def weyl_data(V: PiecewisePotential, z: complex, x0: float = 0.0) -> SchrodingerWeylData:
    z = _require_offaxis(z)
    zs = np.array([z])
    mp = complex(_m_grid(V, zs, float(x0), "+")[0])
    mm = complex(_m_grid(V, zs, float(x0), "-")[0])
    return SchrodingerWeylData(z, float(x0), mp, mm, 1.0 / (mm - mp))


def green_identity_residual(V: PiecewisePotential, zs, x0: float = 0.0) -> float:
    """Max residual of |g*(m_- - m_+) - 1| where g = psi_+ psi_- / W with the
    Wronskian evaluated half a period away from x0 after an extra transfer.

    W is conserved by det-1 propagation, so the quotient equals W(x0)/W(x0 +
    L/2) = 1 only if the propagators preserve it numerically; this tests the
    inverse identity through a route independent of the m-quotient algebra.
    """
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    L = V.period
    P = V.patch_length
    x0 = float(x0)

    c = L * math.ceil(max(P, x0) / L + 1.0)
    M = transfer_interval(V, zs, c, c + L)
    _, u = _stable_roots(M[..., 0, 0] + M[..., 1, 1])
    vp = _eigvec(M, u)
    if c > x0:
        vp = (_inv_unimodular(transfer_interval(V, zs, x0, c)) @ vp[..., None])[..., 0]

    c = L * (math.floor(min(0.0, x0) / L) - 1.0)
    M = transfer_interval(V, zs, c, c + L)
    u, _ = _stable_roots(M[..., 0, 0] + M[..., 1, 1])
    vm = _eigvec(M, u)
    if x0 > c:
        vm = (transfer_interval(V, zs, c, x0) @ vm[..., None])[..., 0]

    T = transfer_interval(V, zs, x0, x0 + L / 2.0)
    vp1 = (T @ vp[..., None])[..., 0]
    vm1 = (T @ vm[..., None])[..., 0]
    W1 = vp1[..., 0] * vm1[..., 1] - vp1[..., 1] * vm1[..., 0]
    g = vp[..., 0] * vm[..., 0] / W1
    mp = vp[..., 1] / vp[..., 0]
    mm = vm[..., 1] / vm[..., 0]
    return float(np.max(np.abs(g * (mm - mp) - 1.0)))


def discriminant(V: PiecewisePotential, lams) -> np.ndarray:
    """Trace of the one-period monodromy of the base pattern (patch ignored);
    the periodic spectrum is {lam : |discriminant| <= 2}."""
    base = PiecewisePotential(V.period, V.pieces)
    zs = np.atleast_1d(np.asarray(lams, dtype=complex))
    M = transfer_interval(base, zs, 0.0, V.period)
    tr = M[..., 0, 0] + M[..., 1, 1]
    if np.all(np.abs(tr.imag) < 1e-9):
        return tr.real
    return tr


# ---------------------------------------------------------------------------
# Boundary values and the xi phase

def boundary_schrodinger_grid(V: PiecewisePotential, lams, x0: float,
                              schedule=None) -> dict:
    """Richardson extrapolation of m_+, m_-, g at lam + i*eps along the pinned
    geometric schedule; returns (value, error, converged) per key plus
    'inf_'/'div_' blowup flags."""
    schedule = schedule or geometric_schedule()
    lams = np.asarray(lams, dtype=float)
    stack = {"m_plus": [], "m_minus": [], "g": []}
    for eps in schedule:
        zs = lams + 1j * eps
        mp = _m_grid(V, zs, float(x0), "+")
        mm = _m_grid(V, zs, float(x0), "-")
        stack["m_plus"].append(mp)
        stack["m_minus"].append(mm)
        stack["g"].append(1.0 / (mm - mp))
    out = {}
    for k, rows in stack.items():
        arr = np.array(rows)
        out[k] = richardson_sequence(arr)
        mags = np.abs(arr)
        grow = np.all(np.diff(mags[-4:], axis=0) > 0, axis=0)
        out["inf_" + k] = (mags[-1] > INFINITE_LIMIT) & grow
        out["div_" + k] = np.any(mags > DIVERGENCE_CAP, axis=0)
    return out


def xi_grid(V: PiecewisePotential, lams, x0: float = 0.0, schedule=None):
    """xi(lam) = Arg g(lam + i0)/pi over a grid: (values, errors, ok mask).

    Im g slightly below 0 within the extrapolation error is clamped to the
    real axis; a violation beyond tolerance marks the point not ok.
    """
    bd = boundary_schrodinger_grid(V, lams, x0, schedule)
    g, err, conv = bd["g"]
    # phase tolerance: a 1e-4-relative amplitude plateau moves Arg g by
    # < 1e-4/pi, below every xi use tolerance; exact closing band edges
    # (lambda = (k pi/L)^2 for the free cell) stall there
    ok = relaxed_ok(g, err, conv, rel=1e-4) & ~bd["div_g"] & np.isfinite(g)
    tol = 10.0 * err + 1e-12 * (1.0 + np.abs(g))
    im = g.imag
    bad = im < -tol
    im = np.where((im < 0.0) & ~bad, 0.0, im)
    ok = ok & ~bad
    vals = np.clip(np.angle(g.real + 1j * im) / math.pi, 0.0, 1.0)
    return np.where(ok, vals, np.nan), err, ok


def xi(V: PiecewisePotential, lam: float, x0: float = 0.0, schedule=None) -> float:
    """Boundary phase of the diagonal Green's function, in [0, 1]."""
    vals, _, ok = xi_grid(V, np.array([float(lam)]), x0, schedule)
    if not bool(ok[0]):
        raise NonConvergent(f"xi extrapolation failed at lam={lam}, x0={x0}")
    return float(vals[0])


def default_grid(V: PiecewisePotential, points: int = 2001) -> np.ndarray:
    """Uniform grid on [-sup|V| - 1, 25]."""
    return np.linspace(-V.sup_bound() - 1.0, LAMBDA_TOP, points)


def _sets_agree_within(s1: RealIntervalSet, s2: RealIntervalSet, slack: float) -> bool:
    diff = set_algebra(s1, s2, "symmetric_difference")
    return all(iv.length <= slack + 1e-12 for iv in diff.intervals)


def ac_spectrum(V: PiecewisePotential, grid=None, x0: float = 0.0, check_site=None,
                xi_tol: float = 1e-3) -> RealIntervalSet:
    """Essential closure of the grid hull of {0 < xi < 1}, one grid step of
    margin; recomputed at a second reference point, disagreement raises."""
    grid = default_grid(V) if grid is None else np.asarray(grid, dtype=float)
    step = float(grid[1] - grid[0])
    check_site = x0 + 0.5 * V.period if check_site is None else check_site

    def one_site(site):
        vals, _, ok = xi_grid(V, grid, site)
        with np.errstate(invalid="ignore"):
            passing = grid[ok & (vals > xi_tol) & (vals < 1.0 - xi_tol)]
        hull = points_hull(passing, step)
        widened = [(iv.lo - step, iv.hi + step, "cc") for iv in hull.intervals]
        widened += [(x - step, x + step, "cc") for x in hull.isolated_points]
        return essential_closure(canonicalize(widened, []))

    main = one_site(x0)
    other = one_site(check_site)
    if not _sets_agree_within(main, other, 2.0 * step):
        raise RuntimeError(
            f"ac spectrum disagrees between reference points {x0} and {check_site}")
    return main


def reflectionless_on(V: PiecewisePotential, E: RealIntervalSet, grid=None,
                      points=None, tol: float = 1e-4) -> ReflectionlessReport:
    """Reflectionless test on a real set E: boundary matching
    m_+(lam+i0) = conj(m_-(lam+i0)) at two or more reference points, with the
    witness that both half-line m's have finite nonreal limits of the correct
    sign (0 < Im m_+ and Im m_- < 0) on the passing set."""
    if E.measure() <= 0.0:
        raise ValueError("reflectionless test needs a set of positive measure")
    points = (0.0, 0.5 * V.period) if points is None else points
    if len(points) < 2:
        raise ValueError("need at least 2 reference points")
    grid = default_grid(V) if grid is None else np.asarray(grid, dtype=float)
    inside = np.array([E.contains(x) for x in grid])
    lams = grid[inside]
    if lams.size == 0:
        raise ValueError("grid does not meet E")

    worst_fraction = 1.0
    max_res = 0.0
    xi_fraction = 1.0
    witness = 0.0
    defects = set()
    for x0 in points:
        bd = boundary_schrodinger_grid(V, lams, x0)
        mp, ep, cp = bd["m_plus"]
        mm, em, cm = bd["m_minus"]
        okm = (relaxed_ok(mp, ep, cp) & relaxed_ok(mm, em, cm)
               & np.isfinite(mp) & np.isfinite(mm))
        res = np.abs(mp - np.conj(mm))
        pass_mask = okm & (res < tol)
        worst_fraction = min(worst_fraction, float(np.mean(pass_mask)))
        max_res = max(max_res, float(np.max(np.where(okm, res, 0.0))))
        defects.update(lams[~pass_mask].tolist())

        vals, _, okx = xi_grid(V, lams, x0)
        xi_fraction = min(xi_fraction,
                          float(np.mean(okx & (np.abs(vals - 0.5) < 10 * tol))))

        sign_ok = pass_mask & (mp.imag > 0.0) & (mm.imag < 0.0)
        bad_sign = np.where(pass_mask & ~sign_ok)[0]
        witness = max(witness, float(bad_sign.size))

    verdict = worst_fraction > 0.99
    return ReflectionlessReport(
        verdict=verdict, fraction=worst_fraction, max_residual=max_res, tol=tol,
        sites=tuple(points), n_points=int(lams.size), defect_points=tuple(sorted(defects)),
        xi_fraction=xi_fraction,
        witness_residual=witness if verdict else math.nan,
        details=f"{lams.size} grid points in E at x0 {tuple(points)}; "
                "witness counts passing points with a wrong-sign imaginary part")


def multiplicity_sets(V: PiecewisePotential, grid=None, x0: float = 0.0,
                      nonreal_tol: float = NONREAL_TOL):
    """Interval hulls of the uniform-multiplicity sets from boundary (m_+, m_-):
    multiplicity two where both are nonreal, multiplicity one on the union of
    the equal-real, both-infinite, and exactly-one-nonreal cases."""
    grid = default_grid(V) if grid is None else np.asarray(grid, dtype=float)
    step = float(grid[1] - grid[0])
    bd = boundary_schrodinger_grid(V, grid, x0)
    mp, ep, cp = bd["m_plus"]
    mm, em, cm = bd["m_minus"]
    infp = bd["inf_m_plus"] | bd["div_m_plus"]
    infm = bd["inf_m_minus"] | bd["div_m_minus"]
    finp = relaxed_ok(mp, ep, cp) & ~infp & np.isfinite(mp)
    finm = relaxed_ok(mm, em, cm) & ~infm & np.isfinite(mm)

    nonreal_p = finp & (np.abs(mp.imag) > nonreal_tol)
    nonreal_m = finm & (np.abs(mm.imag) > nonreal_tol)
    real_p = finp & ~nonreal_p
    real_m = finm & ~nonreal_m
    equal_real = real_p & real_m & (np.abs(mp - mm) <= nonreal_tol * (1.0 + np.abs(mp)))

    mask2 = nonreal_p & nonreal_m
    mask1 = equal_real | (infp & infm) | (real_p & nonreal_m) | (real_m & nonreal_p)
    return points_hull(grid[mask2], step), points_hull(grid[mask1], step)


def xi_csv(V: PiecewisePotential, lams, x0: float = 0.0, out=None) -> str:
    """Per-point CSV: lambda, xi, Re g, Im g, verdict."""
    import csv as _csv
    import io as _io
    lams = np.asarray(lams, dtype=float)
    bd = boundary_schrodinger_grid(V, lams, x0)
    g, err, conv = bd["g"]
    vals, _, ok = xi_grid(V, lams, x0)
    buf = _io.StringIO()
    w = _csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "xi", "re_g", "im_g", "verdict"])
    for k, lam in enumerate(lams):
        if ok[k]:
            verdict = "interior" if 0.0 < vals[k] < 1.0 else "exterior"
        else:
            verdict = "undetermined"
        w.writerow([f"{lam:.12g}",
                    f"{vals[k]:.12g}" if ok[k] else "",
                    f"{g[k].real:.12g}" if conv[k] else "",
                    f"{g[k].imag:.12g}" if conv[k] else "",
                    verdict])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
