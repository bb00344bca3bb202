"""Periodic-plus-patch CMV operators from Verblunsky coefficients.

The five-diagonal unitary U acts on the whole lattice; setting alpha(n0) = 1
splits it into half-lattice blocks on (-inf, n0-1] and [n0, +inf).  The
half-lattice m-functions are Cayley-transform diagonals,

    m_+(z, n0) = ((U_{+,n0} + z)(U_{+,n0} - z)^-1)(n0, n0)     Caratheodory
    m_-(z, n0) = -((U_{-,n0} + z)(U_{-,n0} - z)^-1)(n0, n0)    anti-Caratheodory

computed through the Schur algorithm: the spectral measure of U_{+,n0} has
Schur parameters gamma_j = -conj(alpha(n0+1+j)), the left Cayley diagonal at
site m has gamma_j = -alpha(m-j), and for a periodic tail the Schur function
is the contracting fixed point of the one-period Moebius monodromy.  Then

    M_+(z, n0) = m_+(z, n0)
    M_-(z, n0) = [Re(1+a0) + i Im(1-a0) m_-(z, n0-1)]
                 / [i Im(1+a0) + Re(1-a0) m_-(z, n0-1)],   a0 = alpha(n0)
    M11(z, n0) = (1 - M_+ M_-) / (M_+ - M_-)

with M11 the Caratheodory function of the (n0, n0) spectral measure entry.
The phase Xi11 = Arg(M11)/pi on the boundary lies in [-1/2, 1/2]; the set
{|Xi11| < 1/2} recovers the ac spectrum through its circle essential closure,
and Xi11 = 0 (equivalently M_+ = -conj(M_-)) characterizes reflectionless
arcs.  Truncations are exactly unitary thanks to the alpha = 1 cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, NonConvergent
from .boundary_analysis import (geometric_schedule, relaxed_ok, richardson_sequence,
                                DIVERGENCE_CAP, INFINITE_LIMIT)
from .interval_sets import CircleArcSet, angles_hull, circle_set, full_circle, set_algebra
from .jacobi import ReflectionlessReport

TWO_PI = 2.0 * math.pi
IMAG_AXIS_TOL = 1e-4


@dataclass(frozen=True)
class VerblunskyCoefficients:
    """Period-p Verblunsky coefficients in the open unit disk plus a patch."""
    period: int
    alpha_base: tuple
    patch: tuple = ()   # sorted ((n, alpha), ...)

    def __post_init__(self):
        if self.period < 1 or len(self.alpha_base) != self.period:
            raise ValueError("alpha_base must have length equal to the period")
        object.__setattr__(self, "alpha_base", tuple(complex(a) for a in self.alpha_base))
        items = self.patch.items() if isinstance(self.patch, dict) else self.patch
        norm = tuple(sorted(((int(n), complex(a)) for n, a in items), key=lambda t: t[0]))
        object.__setattr__(self, "patch", norm)
        if any(abs(a) >= 1.0 for a in self.alpha_base) or any(abs(a) >= 1.0 for _, a in self.patch):
            raise ValueError("Verblunsky coefficients must lie in the open unit disk")
        sites = [n for n, _ in self.patch]
        if len(sites) != len(set(sites)):
            raise ValueError("patch sites must be distinct")

    def alpha(self, n: int) -> complex:
        for m, a in self.patch:
            if m == n:
                return a
        return self.alpha_base[n % self.period]

    def rho(self, n: int) -> float:
        return math.sqrt(1.0 - abs(self.alpha(n)) ** 2)

    @property
    def patch_sites(self):
        return tuple(n for n, _ in self.patch)

    def to_descriptor(self) -> dict:
        return {"type": "cmv", "period": self.period,
                "alpha": [[a.real, a.imag] for a in self.alpha_base],
                "patch": {str(n): [a.real, a.imag] for n, a in self.patch}}

    @classmethod
    def from_descriptor(cls, d: dict) -> "VerblunskyCoefficients":
        if d.get("type") != "cmv":
            raise ValueError("descriptor type must be 'cmv'")
        base = tuple(complex(re, im) for re, im in d["alpha"])
        patch = {int(n): complex(v[0], v[1]) for n, v in d.get("patch", {}).items()}
        return cls(int(d["period"]), base, patch)


@dataclass(frozen=True)
class CMVWeylData:
    z: complex
    n0: int
    m_plus: complex
    m_minus: complex
    M_plus: complex
    M_minus: complex
    M11: complex


# ---------------------------------------------------------------------------
# Schur-algorithm evaluation of the half-lattice m-functions

def _moebius_mats(gammas, zs):
    """Stack of Schur step matrices [[z, g], [conj(g) z, 1]], shape (len, K, 2, 2)."""
    K = zs.shape[0]
    out = np.zeros((len(gammas), K, 2, 2), dtype=complex)
    for j, g in enumerate(gammas):
        out[j, :, 0, 0] = zs
        out[j, :, 0, 1] = g
        out[j, :, 1, 0] = np.conj(g) * zs
        out[j, :, 1, 1] = 1.0
    return out


def _fixed_point(A):
    """Contracting (|w| < 1) fixed point of the Moebius map of A, vectorized.

    w solves A10 w^2 + (A11 - A00) w - A01 = 0; for |z| < 1 the map sends the
    closed disk strictly inside itself, so exactly one root is contracting.
    """
    a = A[..., 1, 0]
    b = A[..., 1, 1] - A[..., 0, 0]
    c = -A[..., 0, 1]
    disc = np.sqrt(b * b - 4.0 * a * c)
    q = -(b + np.where(np.abs(b + disc) >= np.abs(b - disc), disc, -disc)) / 2.0
    lin = np.abs(a) < 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(lin, 0.0, q / np.where(lin, 1.0, a))
        r2 = np.where(np.abs(q) < 1e-300, 0.0, c / np.where(np.abs(q) < 1e-300, 1.0, q))
        w_lin = np.where(np.abs(b) < 1e-300, 0.0, -c / np.where(np.abs(b) < 1e-300, 1.0, b))
    w = np.where(lin, w_lin, np.where(np.abs(r1) <= np.abs(r2), r1, r2))
    if np.any(np.abs(w) > 1.0 - 1e-12):
        raise NonConvergent("Schur monodromy fixed point is not contracting")
    return w


def _schur_to_caratheodory(head, period_gammas, zs):
    """Caratheodory value (1 + z f)/(1 - z f) for the Schur function with
    parameter sequence head + periodic tail, vectorized over zs."""
    zs = np.asarray(zs, dtype=complex)
    mats = _moebius_mats(period_gammas, zs)
    A = mats[0]
    for j in range(1, len(period_gammas)):
        A = A @ mats[j]
    f = _fixed_point(A)
    for g in reversed(head):
        f = (g + zs * f) / (1.0 + np.conj(g) * zs * f)
    return (1.0 + zs * f) / (1.0 - zs * f)


def _gammas_plus(V: VerblunskyCoefficients, n0: int):
    """Schur parameters of the right half-lattice measure, split into the
    aperiodic head (through the patch) and one periodic tail period."""
    sites = V.patch_sites
    j_head = max(0, (max(sites) - n0) if sites else 0)
    head = [-np.conj(V.alpha(n0 + 1 + j)) for j in range(j_head)]
    tail = [-np.conj(V.alpha(n0 + 1 + j_head + j)) for j in range(V.period)]
    return head, tail


def _gammas_minus(V: VerblunskyCoefficients, m: int):
    """Schur parameters of the left Cayley diagonal at site m."""
    sites = V.patch_sites
    j_head = max(0, (m - min(sites) + 1) if sites else 0)
    head = [-V.alpha(m - j) for j in range(j_head)]
    tail = [-V.alpha(m - j_head - j) for j in range(V.period)]
    return head, tail


def _require_in_disk(z):
    z = complex(z)
    if abs(z) >= 1.0:
        raise ValueError("spectral parameter must lie in the open unit disk")
    return z


def _m_grid(V: VerblunskyCoefficients, zs, n0: int, side: str):
    if _plus_side(side):
        head, tail = _gammas_plus(V, n0)
        return _schur_to_caratheodory(head, tail, zs)
    head, tail = _gammas_minus(V, n0)
    return -_schur_to_caratheodory(head, tail, zs)


def _plus_side(side) -> bool:
    if side in ("+", "plus", 1, +1):
        return True
    if side in ("-", "minus", -1):
        return False
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def m_half_lattice(V: VerblunskyCoefficients, z: complex, n0: int, side: str) -> complex:
    """Half-lattice Cayley-transform diagonal at n0: Caratheodory for the
    right block (side '+'), anti-Caratheodory (Re <= 0) for the left."""
    z = _require_in_disk(z)
    return complex(_m_grid(V, np.array([z]), n0, side)[0])


def _big_M_grid(V: VerblunskyCoefficients, zs, n0: int, side: str):
    if _plus_side(side):
        return _m_grid(V, zs, n0, "+")
    mm = _m_grid(V, zs, n0 - 1, "-")
    a0 = V.alpha(n0)
    num = (1.0 + a0).real + 1j * (1.0 - a0).imag * mm
    den = 1j * (1.0 + a0).imag + (1.0 - a0).real * mm
    return num / den


def big_M(V: VerblunskyCoefficients, z: complex, n0: int, side: str) -> complex:
    """M_+ = m_+ verbatim; M_- is the alpha(n0) Moebius twist of m_-(z, n0-1).
    Re M_+ >= 0 >= Re M_- in the disk."""
    z = _require_in_disk(z)
    if _plus_side(side):
        return m_half_lattice(V, z, n0, "+")
    mm = m_half_lattice(V, z, n0 - 1, "-")
    a0 = V.alpha(n0)
    den = 1j * (1.0 + a0).imag + (1.0 - a0).real * mm
    if abs(den) < 1e-14:
        raise ZeroDivisionError(f"M_- denominator vanished at z={z}, n0={n0}")
    return ((1.0 + a0).real + 1j * (1.0 - a0).imag * mm) / den


def _M11_grid(V: VerblunskyCoefficients, zs, n0: int):
    Mp = _big_M_grid(V, zs, n0, "+")
    Mm = _big_M_grid(V, zs, n0, "-")
    return (1.0 - Mp * Mm) / (Mp - Mm), Mp, Mm


def M11(V: VerblunskyCoefficients, z: complex, n0: int, mode: str = "formula",
        window: int = 2048) -> complex:
    """Caratheodory function of the (n0, n0) spectral measure entry.

    formula mode: (1 - M_+ M_-)/(M_+ - M_-); raises DegenerateDenominator
    when |M_+ - M_-| <= 1e-12.  oracle mode: Cayley diagonal of a banded
    whole-lattice truncation of the stated window size.
    """
    z = _require_in_disk(z)
    if mode == "oracle":
        T = build_truncation(V, (n0 - window // 2, n0 + window // 2 - 1))
        return T.cayley_diag(z, n0)
    if mode != "formula":
        raise ValueError(f"mode must be 'formula' or 'oracle', got {mode!r}")
    Mp = big_M(V, z, n0, "+")
    Mm = big_M(V, z, n0, "-")
    if abs(Mp - Mm) <= 1e-12:
        raise DegenerateDenominator(
            f"M_+ = M_- at z={z}, n0={n0}; use mode='oracle' for this point")
    return (1.0 - Mp * Mm) / (Mp - Mm)


def weyl_data(V: VerblunskyCoefficients, z: complex, n0: int) -> CMVWeylData:
    z = _require_in_disk(z)
    zs = np.array([z])
    m_p = complex(_m_grid(V, zs, n0, "+")[0])
    m_m = complex(_m_grid(V, zs, n0, "-")[0])
    M_p = complex(_big_M_grid(V, zs, n0, "+")[0])
    M_m = complex(_big_M_grid(V, zs, n0, "-")[0])
    m11, _, _ = _M11_grid(V, zs, n0)
    return CMVWeylData(z, n0, m_p, m_m, M_p, M_m, complex(m11[0]))


# ---------------------------------------------------------------------------
# Boundary sweeps

def boundary_cmv_grid(V: VerblunskyCoefficients, thetas, n0: int, schedule=None) -> dict:
    """Radial Richardson extrapolation of M_+, M_-, M11 on an angle grid.

    For each key returns (value, error, converged); 'inf_'/'div_' flags mark
    blowup past 1e6 with monotone growth, resp. past the 1e8 hard cap.
    """
    schedule = schedule or geometric_schedule()
    thetas = np.asarray(thetas, dtype=float)
    zeta = np.exp(1j * thetas)
    stack = {"M_plus": [], "M_minus": [], "M11": []}
    for eps in schedule:
        m11, Mp, Mm = _M11_grid(V, (1.0 - eps) * zeta, n0)
        stack["M_plus"].append(Mp)
        stack["M_minus"].append(Mm)
        stack["M11"].append(m11)
    out = {}
    for k, rows in stack.items():
        arr = np.array(rows)
        out[k] = richardson_sequence(arr)
        mags = np.abs(arr)
        grow = np.all(np.diff(mags[-4:], axis=0) > 0, axis=0)
        out["inf_" + k] = (mags[-1] > INFINITE_LIMIT) & grow
        out["div_" + k] = np.any(mags > DIVERGENCE_CAP, axis=0)
    return out


def Xi11_grid(V: VerblunskyCoefficients, thetas, n0: int, schedule=None):
    """Xi11 over an angle grid: (values, errors, ok mask).

    Xi11 = Arg(M11(zeta))/pi clipped to [-1/2, 1/2]; a slightly negative
    Re M11 within the extrapolation error is clamped to the imaginary axis,
    a violation beyond tolerance marks the angle not ok.  Boundary zeros of
    M11 (limit below the extrapolation noise) leave the phase undefined and
    are also marked not ok; they carry zero ac density.
    """
    bd = boundary_cmv_grid(V, thetas, n0, schedule)
    m11, err, conv = bd["M11"]
    # phase tolerance: a 1e-4-relative amplitude plateau moves Arg M11 by
    # < 1e-4/pi, below every Xi use tolerance
    ok = relaxed_ok(m11, err, conv, rel=1e-4) & ~bd["div_M11"] & np.isfinite(m11)
    tol = 10.0 * err + 1e-12 * (1.0 + np.abs(m11))
    re = m11.real
    bad = re < -tol
    re = np.where((re < 0.0) & ~bad, 0.0, re)
    ok = ok & ~bad & (np.abs(m11) > 100.0 * err + 1e-12)
    vals = np.angle(re + 1j * m11.imag) / math.pi
    vals = np.clip(vals, -0.5, 0.5)
    return np.where(ok, vals, np.nan), err, ok


def Xi11(V: VerblunskyCoefficients, theta: float, n0: int, schedule=None) -> float:
    """Boundary phase of M11 at angle theta, in [-1/2, 1/2]."""
    vals, _, ok = Xi11_grid(V, np.array([float(theta)]), n0, schedule)
    if not bool(ok[0]):
        raise NonConvergent(f"Xi11 extrapolation failed at theta={theta}, n0={n0}")
    return float(vals[0])


def default_angles(points: int = 512):
    return np.linspace(0.0, TWO_PI, points, endpoint=False)


def ac_spectrum(V: VerblunskyCoefficients, grid=None, n0: int = 0, check_site=None,
                xi_tol: float = 1e-3) -> CircleArcSet:
    """Circle essential closure of the angle hull of {|Xi11| < 1/2}, one grid
    step of margin; recomputed at a second site, disagreement raises."""
    grid = default_angles() if grid is None else np.asarray(grid, dtype=float)
    if grid.size < 512:
        raise ValueError("angular grid needs at least 512 points")
    step = float(grid[1] - grid[0])
    check_site = n0 + 1 if check_site is None else check_site

    def one_site(site):
        vals, _, ok = Xi11_grid(V, grid, site)
        with np.errstate(invalid="ignore"):
            passing = grid[ok & (np.abs(vals) < 0.5 - xi_tol)]
        hull = angles_hull(passing, step)
        if hull.is_full() or any(a.length + 2.0 * step >= TWO_PI for a in hull.arcs):
            return full_circle()
        widened = [(arc.theta1 - step, arc.theta2 + step, "cc") for arc in hull.arcs]
        widened += [(t - step, t + step, "cc") for t in hull.isolated_points]
        return circle_set(widened, []).essential_closure()

    main = one_site(n0)
    other = one_site(check_site)
    diff = set_algebra(main, other, "symmetric_difference")
    if any(a.length > 2.0 * step + 1e-12 for a in diff.arcs):
        raise RuntimeError(
            f"ac spectrum disagrees between reference sites {n0} and {check_site}")
    return main


def reflectionless_on(V: VerblunskyCoefficients, E: CircleArcSet, grid=None,
                      sites=(0, 1), tol: float = 1e-4) -> ReflectionlessReport:
    """Reflectionless test on an arc set E: boundary matching M_+ = -conj(M_-)
    plus the phase criterion Xi11 = 0, at two or more reference sites.  Where
    the verdict holds, the uniform-multiplicity witness
    M11 = (1+|M_+-|^2)/(+-2 Re M_+-) is recorded as a max residual."""
    if E.measure() <= 0.0:
        raise ValueError("reflectionless test needs a set of positive measure")
    if len(sites) < 2:
        raise ValueError("need at least 2 reference sites")
    grid = default_angles() if grid is None else np.asarray(grid, dtype=float)
    inside = np.array([E.contains(t) for t in grid])
    angs = grid[inside]
    if angs.size == 0:
        raise ValueError("grid does not meet E")

    worst_fraction = 1.0
    max_res = 0.0
    xi_fraction = 1.0
    witness = 0.0
    defects = set()
    for site in sites:
        bd = boundary_cmv_grid(V, angs, site)
        Mp, ep, cp = bd["M_plus"]
        Mm, em, cm = bd["M_minus"]
        m11, e11, c11 = bd["M11"]
        okm = (relaxed_ok(Mp, ep, cp) & relaxed_ok(Mm, em, cm)
               & np.isfinite(Mp) & np.isfinite(Mm))
        res = np.abs(Mp + np.conj(Mm))
        pass_mask = okm & (res < tol)
        worst_fraction = min(worst_fraction, float(np.mean(pass_mask)))
        max_res = max(max_res, float(np.max(np.where(okm, res, 0.0))))
        defects.update(angs[~pass_mask].tolist())

        vals, _, okx = Xi11_grid(V, angs, site)
        xi_fraction = min(xi_fraction, float(np.mean(okx & (np.abs(vals) < 10 * tol))))

        with np.errstate(divide="ignore", invalid="ignore"):
            wp = np.abs(m11 - (1.0 + np.abs(Mp) ** 2) / (2.0 * Mp.real))
            wm = np.abs(m11 - (1.0 + np.abs(Mm) ** 2) / (-2.0 * Mm.real))
        wit = np.where(pass_mask & relaxed_ok(m11, e11, c11), np.maximum(wp, wm), 0.0)
        witness = max(witness, float(np.max(wit)))

    verdict = worst_fraction > 0.99
    return ReflectionlessReport(
        verdict=verdict, fraction=worst_fraction, max_residual=max_res, tol=tol,
        sites=tuple(sites), n_points=int(angs.size), defect_points=tuple(sorted(defects)),
        xi_fraction=xi_fraction,
        witness_residual=witness if verdict else math.nan,
        details=f"{angs.size} grid angles in E at sites {tuple(sites)}")


def m11_boundary_identity_residual(V: VerblunskyCoefficients, thetas, n0: int) -> float:
    """Max residual of the boundary identity expressing Re M11 through the
    one-sided data: Re M11 = [Re M_+ (1+|M_-|^2) - Re M_- (1+|M_+|^2)] / |M_+ - M_-|^2."""
    bd = boundary_cmv_grid(V, np.asarray(thetas, dtype=float), n0)
    Mp, ep, cp = bd["M_plus"]
    Mm, em, cm = bd["M_minus"]
    m11, e11, c11 = bd["M11"]
    ok = (relaxed_ok(Mp, ep, cp) & relaxed_ok(Mm, em, cm)
          & relaxed_ok(m11, e11, c11) & (np.abs(Mp - Mm) > 1e-8))
    quot = (Mp.real * (1.0 + np.abs(Mm) ** 2) - Mm.real * (1.0 + np.abs(Mp) ** 2)) \
        / np.abs(Mp - Mm) ** 2
    res = np.where(ok, np.abs(m11.real - quot), 0.0)
    return float(np.max(res))


def multiplicity_sets(V: VerblunskyCoefficients, grid=None, n0: int = 0,
                      axis_tol: float = IMAG_AXIS_TOL):
    """Angle hulls of the uniform-multiplicity sets from boundary (M_+, M_-).

    The purely-imaginary test is |Re v| <= tol*(1+|v|); multiplicity two needs
    both boundary values off the imaginary axis, multiplicity one collects the
    equal-imaginary, both-infinite, and exactly-one-off-axis cases.
    """
    grid = default_angles() if grid is None else np.asarray(grid, dtype=float)
    step = float(grid[1] - grid[0])
    bd = boundary_cmv_grid(V, grid, n0)
    Mp, ep, cp = bd["M_plus"]
    Mm, em, cm = bd["M_minus"]
    infp = bd["inf_M_plus"] | bd["div_M_plus"]
    infm = bd["inf_M_minus"] | bd["div_M_minus"]
    finp = relaxed_ok(Mp, ep, cp) & ~infp & np.isfinite(Mp)
    finm = relaxed_ok(Mm, em, cm) & ~infm & np.isfinite(Mm)

    off_p = finp & (np.abs(Mp.real) > axis_tol * (1.0 + np.abs(Mp)))
    off_m = finm & (np.abs(Mm.real) > axis_tol * (1.0 + np.abs(Mm)))
    on_p = finp & ~off_p
    on_m = finm & ~off_m
    equal_imag = on_p & on_m & (np.abs(Mp - Mm) <= axis_tol * (1.0 + np.abs(Mp)))

    mask2 = off_p & off_m
    mask1 = equal_imag | (infp & infm) | (on_p & off_m) | (on_m & off_p)
    return angles_hull(grid[mask2], step), angles_hull(grid[mask1], step)


# ---------------------------------------------------------------------------
# Banded truncations and the matrix spectral measure

@dataclass(frozen=True)
class CMVTruncation:
    """Banded storage of a unitary CMV window [first_site, first_site+N-1]
    with alpha = 1 cuts at both ends; bands[u + i - j, j] holds U[i, j] for
    |i - j| <= 2 (scipy solve_banded layout, u = 2)."""
    first_site: int
    bands: np.ndarray   # (5, N) complex

    @property
    def size(self) -> int:
        return self.bands.shape[1]

    def index_of(self, n: int) -> int:
        i = n - self.first_site
        if not (0 <= i < self.size):
            raise IndexError(f"site {n} outside the truncation window")
        return i

    def dense(self) -> np.ndarray:
        N = self.size
        U = np.zeros((N, N), dtype=complex)
        for off in range(-2, 3):
            idx = np.arange(max(0, -off), min(N, N - off))
            U[idx, idx + off] = self.bands[2 - off, idx + off]
        return U

    def unitarity_residual(self) -> float:
        U = self.dense()
        return float(np.abs(U.conj().T @ U - np.eye(self.size)).max())

    def solve(self, z: complex, rhs: np.ndarray) -> np.ndarray:
        """x with (U - z) x = rhs."""
        from scipy.linalg import solve_banded
        ab = self.bands.copy()
        ab[2, :] = ab[2, :] - z
        return solve_banded((2, 2), ab, rhs)

    def cayley_diag(self, z: complex, site: int) -> complex:
        """((U + z)(U - z)^-1)(site, site) = 1 + 2 z [(U - z)^-1](site, site)."""
        i = self.index_of(site)
        e = np.zeros(self.size, dtype=complex)
        e[i] = 1.0
        return complex(1.0 + 2.0 * z * self.solve(z, e)[i])


def build_truncation(V: VerblunskyCoefficients, window) -> CMVTruncation:
    """Unitary truncation onto sites [n_lo, n_hi] (inclusive, even length >= 6)
    by setting alpha = 1 at both cuts.

    Row pattern of the five-diagonal unitary, with a(n) = alpha(n) and
    r(n) = rho(n):
      n even: (n,n-2) r(n-1)r(n); (n,n-1) conj(a(n-1))r(n);
              (n,n) -conj(a(n))a(n+1); (n,n+1) conj(a(n))r(n+1)
      n odd:  (n,n-1) -a(n+1)r(n); (n,n) -conj(a(n))a(n+1);
              (n,n+1) -a(n+2)r(n+1); (n,n+2) r(n+1)r(n+2)
    """
    n_lo, n_hi = int(window[0]), int(window[1])
    N = n_hi - n_lo + 1
    if N < 6 or N % 2 != 0:
        raise ValueError("window must span an even number of sites, at least 6")

    def a(n):
        if n == n_lo or n == n_hi + 1:
            return 1.0 + 0.0j   # cut: decouples the window exactly
        return V.alpha(n)

    def r(n):
        return math.sqrt(max(0.0, 1.0 - abs(a(n)) ** 2))

    bands = np.zeros((5, N), dtype=complex)

    def put(n, m, v):
        if n_lo <= m <= n_hi:
            i, j = n - n_lo, m - n_lo
            bands[2 + i - j, j] = v

    for n in range(n_lo, n_hi + 1):
        if n % 2 == 0:
            put(n, n - 2, r(n - 1) * r(n))
            put(n, n - 1, np.conj(a(n - 1)) * r(n))
            put(n, n, -np.conj(a(n)) * a(n + 1))
            put(n, n + 1, np.conj(a(n)) * r(n + 1))
        else:
            put(n, n - 1, -a(n + 1) * r(n))
            put(n, n, -np.conj(a(n)) * a(n + 1))
            put(n, n + 1, -a(n + 2) * r(n + 1))
            put(n, n + 2, r(n + 1) * r(n + 2))
    return CMVTruncation(n_lo, bands)


@dataclass(frozen=True)
class MatrixMeasureData:
    """Boundary samples of the 2x2 matrix Caratheodory field at n0.

    R[k] is the density matrix at angles[k] (Hermitian part of M normalized
    to unit trace), rank[k] its numerical rank; the identity and trace checks
    certify M00(z, n0) = M11(z, n0-1) and Re M^tr(0) = 2.
    """
    n0: int
    angles: np.ndarray
    R: np.ndarray            # (K, 2, 2) complex Hermitian
    rank: np.ndarray         # (K,) int
    min_eigenvalue: float
    trace_error: float       # |sum R_jj - 1| max over angles
    trace_at_zero: float     # Re M^tr(0)
    identity_residual: float # max |M00(z,n0) - M11(z,n0-1)| at probe z


def matrix_M_entry(T: CMVTruncation, z: complex, row_site: int, col_site: int) -> complex:
    """(delta_row, (U+z)(U-z)^-1 delta_col) from the banded truncation."""
    e = np.zeros(T.size, dtype=complex)
    e[T.index_of(col_site)] = 1.0
    x = T.solve(z, e)
    val = 2.0 * z * x[T.index_of(row_site)]
    if row_site == col_site:
        val += 1.0
    return complex(val)


def matrix_M_and_R(V: VerblunskyCoefficients, n0: int, grid=None, window: int = 2048,
                   rank_tol: float = 1e-2, schedule=None) -> MatrixMeasureData:
    """2x2 matrix measure machinery at n0 from the truncation oracle.

    M_{j,k}(z, n0) = (delta_{n0-1+j}, (U+z)(U-z)^-1 delta_{n0-1+k}); R(zeta)
    is the radial limit of the Hermitian part of M normalized to trace one.
    """
    grid = default_angles() if grid is None else np.asarray(grid, dtype=float)
    if grid.size < 512:
        raise ValueError("angular grid needs at least 512 points")
    schedule = schedule or geometric_schedule()
    half = window // 2
    T = build_truncation(V, (n0 - half, n0 + half - 1))
    i0, i1 = T.index_of(n0 - 1), T.index_of(n0)
    rhs = np.zeros((T.size, 2), dtype=complex)
    rhs[i0, 0] = 1.0
    rhs[i1, 1] = 1.0

    zeta = np.exp(1j * grid)
    herm = []
    for eps in schedule:
        H_eps = np.empty((grid.size, 2, 2), dtype=complex)
        for k, z in enumerate((1.0 - eps) * zeta):
            x = T.solve(z, rhs)
            M = 2.0 * z * np.array([[x[i0, 0], x[i0, 1]], [x[i1, 0], x[i1, 1]]])
            M[0, 0] += 1.0
            M[1, 1] += 1.0
            H_eps[k] = (M + M.conj().T) / 2.0
        herm.append(H_eps)
    H, _, _ = richardson_sequence(np.array(herm))

    tr = np.real(H[:, 0, 0] + H[:, 1, 1])
    R = H / tr[:, None, None]
    eigs = np.linalg.eigvalsh(R)
    rank = np.sum(eigs > rank_tol, axis=1)

    # pointwise identity between the two diagonal Caratheodory entries
    probes = [0.3 + 0.2j, -0.4 + 0.1j, 0.05 - 0.55j]
    ident = max(abs(matrix_M_entry(T, z, n0 - 1, n0 - 1)
                    - M11(V, z, n0 - 1, mode="oracle", window=window)) for z in probes)
    tr0 = matrix_M_entry(T, 0.0, n0 - 1, n0 - 1).real + matrix_M_entry(T, 0.0, n0, n0).real
    return MatrixMeasureData(
        n0=n0, angles=grid, R=R, rank=rank,
        min_eigenvalue=float(eigs.min()),
        trace_error=float(np.abs(np.real(R[:, 0, 0] + R[:, 1, 1]) - 1.0).max()),
        trace_at_zero=float(tr0),
        identity_residual=float(ident))


# ---------------------------------------------------------------------------
# Eigenvalue-support oracle

def eigenvalue_angles(V: VerblunskyCoefficients, window: int = 4096, blocks: int = 4,
                      n0: int = 0) -> np.ndarray:
    """Sorted eigenvalue angles of the window truncation, computed blockwise.

    Interior alpha = 1 cuts split the window into direct summands, adding O(1)
    spurious angles per cut; downstream support estimation must drop isolated
    outliers.  Blockwise dense eigensolves keep the cost near-linear.
    """
    if window % blocks != 0:
        raise ValueError("window must split evenly into blocks")
    size = window // blocks
    lo = n0 - window // 2
    angles = []
    for b in range(blocks):
        T = build_truncation(V, (lo + b * size, lo + (b + 1) * size - 1))
        angles.append(np.angle(np.linalg.eigvals(T.dense())) % TWO_PI)
    return np.sort(np.concatenate(angles))


def support_arcs(angles: np.ndarray, min_cluster: int = 5, gap_factor: float = 20.0) -> CircleArcSet:
    """Arc support of an eigenvalue-angle sample: split at circular gaps well
    above the mean spacing 2*pi/n (robust to exact degeneracies from repeated
    blocks), drop clusters too small to be spectral (cut artifacts)."""
    angles = np.sort(np.asarray(angles, dtype=float) % TWO_PI)
    if angles.size == 0:
        raise ValueError("no angles given")
    gaps = np.diff(np.concatenate([angles, [angles[0] + TWO_PI]]))
    cut = gap_factor * TWO_PI / angles.size
    split_at = np.where(gaps > cut)[0]
    if split_at.size == 0:
        return full_circle()
    arcs = []
    start = (split_at[-1] + 1) % angles.size
    order = list(range(angles.size))
    order = order[start:] + order[:start]
    cluster = [angles[order[0]]]
    for idx in order[1:]:
        prev = cluster[-1]
        t = angles[idx]
        gap = (t - prev) % TWO_PI
        if gap > cut:
            if len(cluster) >= min_cluster:
                arcs.append((cluster[0], cluster[-1]))
            cluster = [t]
        else:
            cluster.append(t)
    if len(cluster) >= min_cluster:
        arcs.append((cluster[0], cluster[-1]))
    if not arcs:
        raise ValueError("every cluster fell below the outlier threshold")
    return circle_set([(a, b if b > a else b + TWO_PI, "cc") for a, b in arcs], [])


def angle_csv(V: VerblunskyCoefficients, thetas, n0: int, R_data: MatrixMeasureData = None,
              out=None) -> str:
    """Per-angle CSV: theta, Re M11, Im M11, Xi, verdict, R00, R11, rank."""
    import csv as _csv
    import io as _io
    thetas = np.asarray(thetas, dtype=float)
    bd = boundary_cmv_grid(V, thetas, n0)
    m11, _, c11 = bd["M11"]
    vals, _, okx = Xi11_grid(V, thetas, n0)
    buf = _io.StringIO()
    w = _csv.writer(buf, lineterminator="\n")
    w.writerow(["theta", "re_m11", "im_m11", "xi", "verdict", "r00", "r11", "rank"])
    for k, t in enumerate(thetas):
        verdict = "undetermined"
        xi_txt = ""
        if okx[k]:
            xi_txt = f"{vals[k]:.12g}"
            verdict = "interior" if abs(vals[k]) < 0.5 else "edge"
        r00 = r11 = rank_txt = ""
        if R_data is not None and R_data.angles.size == thetas.size:
            r00 = f"{R_data.R[k, 0, 0].real:.6g}"
            r11 = f"{R_data.R[k, 1, 1].real:.6g}"
            rank_txt = str(int(R_data.rank[k]))
        w.writerow([f"{t:.12g}",
                    f"{m11[k].real:.12g}" if c11[k] else "",
                    f"{m11[k].imag:.12g}" if c11[k] else "",
                    xi_txt, verdict, r00, r11, rank_txt])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
