"""Report assembly, theorem-inclusion workflow, config runner, and CLIs.

Two console entry points are installed:

    closure   set-level utilities: essential-closure demo lines and JSON
              transforms (`closure sets --demo`, `closure essential --input`)
    spec      spectral reports for operator descriptors (`spec run --config
              c.json --out dir/`, `spec jacobi|cmv|schrodinger --desc op.json
              --grid a:b:n --emit xi|spectrum|report`)

A SpectralReport collects, for one operator: the ac spectrum from the
boundary phase, the reflectionless verdict on a target set E, the
multiplicity sets, named identity residuals, and the inclusion check

    essential_closure(E)  subset of  sigma_ac   (one grid step of slack)

together with the multiplicity-two coverage of E.  The inclusion is the
numerical content of the containment theorems for reflectionless operators;
when the reflectionless hypothesis fails on E the inclusion is SKIPPED with
the reason recorded rather than reported as a failure.  A report is FAILED
exactly when some residual exceeds its threshold or an enforced check is
violated; every failure names the violated inequality and its margin.

Config runs are deterministic: fixed seed, sorted JSON keys, LF endings, no
timestamps; reports embed the effective tolerances for auditability.

Exit codes for `spec run`: 0 all reports PASS, 1 failures or IO errors,
2 malformed config JSON (no partial files), 3 unknown operator type.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import jacobi as _jacobi
from . import cmv as _cmv
from . import schrodinger as _schrodinger
from .interval_sets import (CircleArcSet, GeneratedFatSet, RealIntervalSet,
                            canonicalize, circle_set, essential_closure,
                            fat_density_report, full_circle, lebesgue_measure,
                            rational_enumeration, set_algebra, set_from_json,
                            set_to_json)

SUPPORTED_TYPES = ("jacobi", "cmv", "schrodinger")
SCHEMA = "v1"

IDENTITY_THRESHOLDS = {
    "green_inverse_identity": 1e-10,
    "m11_formula_vs_oracle": 1e-10,
    "m11_boundary_real_part": 1e-3,
}


class UnknownOperatorType(ValueError):
    def __init__(self, given):
        super().__init__(
            f"unknown operator type {given!r}; supported types: "
            + ", ".join(SUPPORTED_TYPES))
        self.given = given


def build_operator(descriptor: dict):
    kind = descriptor.get("type")
    if kind == "jacobi":
        return _jacobi.JacobiCoefficients.from_descriptor(descriptor)
    if kind == "cmv":
        return _cmv.VerblunskyCoefficients.from_descriptor(descriptor)
    if kind == "schrodinger":
        return _schrodinger.PiecewisePotential.from_descriptor(descriptor)
    raise UnknownOperatorType(kind)


def _resolve_grid(kind: str, op, grid_config):
    """Grid array plus its JSON echo from a config dict or family default."""
    if kind == "cmv":
        n = int((grid_config or {}).get("angles", 512))
        return _cmv.default_angles(n), {"angles": n}
    if grid_config:
        start = float(grid_config["start"])
        stop = float(grid_config["stop"])
        points = int(grid_config["points"])
        return np.linspace(start, stop, points), \
            {"start": start, "stop": stop, "points": points}
    if kind == "jacobi":
        g = _jacobi.default_grid(op)
    else:
        g = _schrodinger.default_grid(op)
    return g, {"start": float(g[0]), "stop": float(g[-1]), "points": int(g.size)}


def _widen(s, slack: float):
    """One-slack outward widening of a canonical set (closure margin)."""
    if isinstance(s, CircleArcSet):
        if s.is_full() or any(a.length + 2 * slack >= 2 * math.pi for a in s.arcs):
            return full_circle()
        arcs = [(a.theta1 - slack, a.theta2 + slack, "cc") for a in s.arcs]
        arcs += [(p - slack, p + slack, "cc") for p in s.isolated_points]
        return circle_set(arcs, [])
    ivs = [(iv.lo - slack, iv.hi + slack, "cc") for iv in s.intervals]
    ivs += [(p - slack, p + slack, "cc") for p in s.isolated_points]
    return canonicalize(ivs, [])


def _overhang(a, b) -> float:
    """Largest connected piece of a not covered by b (0 when a subset of b)."""
    diff = set_algebra(a, b, "difference")
    if isinstance(diff, CircleArcSet):
        spans = [arc.length for arc in diff.arcs]
    else:
        spans = [iv.length for iv in diff.intervals]
    return max(spans) if spans else 0.0


def _covered_fraction(E, M) -> float:
    meet = set_algebra(E, M, "intersect")
    total = E.measure()
    return meet.measure() / total if total > 0 else 1.0


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, (np.floating, np.integer)):
        return _json_safe(float(x))
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


@dataclass
class SpectralReport:
    name: str
    family: str
    descriptor: dict
    status: str
    failures: list
    tolerances: dict
    grid_echo: dict
    ac_spectrum: object
    reflectionless: dict
    multiplicity: dict
    identity_residuals: dict
    theorem_inclusion: dict

    def to_json(self) -> dict:
        doc = {
            "schema": SCHEMA,
            "name": self.name,
            "family": self.family,
            "descriptor": self.descriptor,
            "status": self.status,
            "failures": list(self.failures),
            "tolerances": self.tolerances,
            "grid": self.grid_echo,
            "ac_spectrum": set_to_json(self.ac_spectrum),
            "reflectionless": self.reflectionless,
            "multiplicity": self.multiplicity,
            "identity_residuals": self.identity_residuals,
            "theorem_inclusion": self.theorem_inclusion,
        }
        return _json_safe(doc)


def _identity_residuals(kind: str, op, grid, E, refl_verdict: bool, rng,
                        tolerances: dict) -> dict:
    """Named identity residual maxima for one operator family."""
    draws = int(tolerances.get("identity_draws", 20))
    out = {}

    def entry(name, value, n):
        thr = float(tolerances.get(name, IDENTITY_THRESHOLDS[name]))
        out[name] = {"value": float(value), "threshold": thr,
                     "passed": bool(value < thr), "n_draws": int(n)}

    if kind == "jacobi":
        lo, hi = float(grid[0]), float(grid[-1])
        zs = rng.uniform(lo, hi, draws) + 1j * rng.uniform(0.5, 2.0, draws)
        entry("green_inverse_identity",
              _jacobi.green_inverse_identity_residual(op, zs), draws)
    elif kind == "schrodinger":
        lo, hi = float(grid[0]), float(grid[-1])
        zs = rng.uniform(lo, hi, draws) + 1j * rng.uniform(0.5, 2.0, draws)
        entry("green_inverse_identity",
              _schrodinger.green_identity_residual(op, zs), draws)
    else:
        r = np.sqrt(rng.uniform(0.0, 0.81, draws))
        zs = r * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, draws))
        window = int(tolerances.get("oracle_window", 1024))
        worst = max(abs(_cmv.M11(op, complex(z), 0)
                        - _cmv.M11(op, complex(z), 0, mode="oracle", window=window))
                    for z in zs)
        entry("m11_formula_vs_oracle", worst, draws)
        if refl_verdict:
            inside = np.array([E.contains(t) for t in grid])
            angs = grid[inside]
            if angs.size:
                angs = angs[:: max(1, angs.size // 64)]
                entry("m11_boundary_real_part",
                      _cmv.m11_boundary_identity_residual(op, angs, 0), angs.size)
    return out


def verify_inclusion(descriptor: dict, E=None, grid_config=None, tolerances=None,
                     name: str = "operator", seed: int = 0) -> SpectralReport:
    """Assemble the full report for one operator descriptor.

    E may be a canonical set, a set JSON dict, or None (then the computed ac
    spectrum itself is used as the target set).  The inclusion check asserts
    essential_closure(E) inside the ac spectrum widened by one grid step, and
    multiplicity two on E up to a 1% defect fraction; both are SKIPPED when
    the reflectionless hypothesis fails on E.
    """
    tolerances = dict(tolerances or {})
    op = build_operator(descriptor)
    kind = descriptor["type"]
    grid, grid_echo = _resolve_grid(kind, op, grid_config)
    step = 2.0 * math.pi / grid.size if kind == "cmv" else float(grid[1] - grid[0])
    refl_tol = float(tolerances.get("reflectionless_tol", 1e-4))
    xi_tol = float(tolerances.get("xi_tol", 1e-3))
    rng = np.random.default_rng(seed)
    failures = []

    mod = {"jacobi": _jacobi, "cmv": _cmv, "schrodinger": _schrodinger}[kind]
    ac = mod.ac_spectrum(op, grid, xi_tol=xi_tol)

    if E is None:
        E_set = ac
    elif isinstance(E, dict):
        E_set = set_from_json(E)
    else:
        E_set = E

    refl = mod.reflectionless_on(op, E_set, grid, tol=refl_tol)
    M2, M1 = mod.multiplicity_sets(op, grid)

    identities = _identity_residuals(kind, op, grid, E_set, refl.verdict, rng,
                                     tolerances)
    for nm, e in identities.items():
        if not e["passed"]:
            failures.append(f"identity {nm}: {e['value']:.3e} >= {e['threshold']:.1e}")

    E_closure = essential_closure(E_set)
    if refl.verdict:
        widened = _widen(ac, step)
        overhang = _overhang(E_closure, widened)
        contained = overhang <= 1e-12
        m2_cover = _covered_fraction(E_set, M2)
        covers = (1.0 - m2_cover) <= 0.01 + 1e-12
        inc_status = "PASS" if (contained and covers) else "FAILED"
        reason = ""
        if not contained:
            failures.append(
                f"inclusion: essential closure of E exceeds the ac spectrum "
                f"by {overhang:.3e} (> one grid step {step:.3e})")
        if not covers:
            failures.append(
                f"multiplicity: M2 misses {1.0 - m2_cover:.2%} of E (> 1%)")
        inclusion = {
            "status": inc_status, "reason": reason,
            "E": set_to_json(E_set),
            "essential_closure_E": set_to_json(E_closure),
            "contained_in_ac": bool(contained),
            "overhang": float(overhang), "slack": float(step),
            "multiplicity_two_covers_E": bool(covers),
            "m2_defect_fraction": float(1.0 - m2_cover),
        }
    else:
        inclusion = {
            "status": "SKIPPED",
            "reason": ("reflectionless hypothesis fails on E "
                       f"(passing fraction {refl.fraction:.4f} <= 0.99); "
                       "the containment theorem does not apply"),
            "E": set_to_json(E_set),
            "essential_closure_E": set_to_json(E_closure),
            "contained_in_ac": None,
            "overhang": None, "slack": float(step),
            "multiplicity_two_covers_E": None,
            "m2_defect_fraction": None,
        }

    status = "FAILED" if failures else "PASS"
    pair = "(m_plus, m_minus)" if kind == "schrodinger" else "(M_plus, M_minus)"
    eff_tol = {"reflectionless_tol": refl_tol, "xi_tol": xi_tol,
               "identity_draws": int(tolerances.get("identity_draws", 20)),
               "slack_steps": 1}
    if kind == "cmv":
        eff_tol["oracle_window"] = int(tolerances.get("oracle_window", 1024))

    return SpectralReport(
        name=name, family=kind, descriptor=descriptor, status=status,
        failures=failures, tolerances=eff_tol, grid_echo=grid_echo,
        ac_spectrum=ac,
        reflectionless={
            "E": set_to_json(E_set), "verdict": bool(refl.verdict),
            "fraction": float(refl.fraction),
            "max_residual": float(refl.max_residual), "tol": float(refl.tol),
            "n_points": int(refl.n_points),
            "defect_points": [float(x) for x in refl.defect_points],
            "xi_fraction": float(refl.xi_fraction),
            "witness_residual": float(refl.witness_residual),
        },
        multiplicity={"M2": set_to_json(M2), "M1": set_to_json(M1),
                      "boundary_pair": pair},
        identity_residuals=identities,
        theorem_inclusion=inclusion)


def _csv_for(kind: str, op, grid) -> str:
    if kind == "jacobi":
        return _jacobi.xi_csv(op, grid, 0)
    if kind == "cmv":
        return _cmv.angle_csv(op, grid, 0)
    return _schrodinger.xi_csv(op, grid, 0.0)


def run_config(path: str, out_dir: str = None) -> int:
    """Process a config file; one report JSON + one CSV per operator.

    Config schema: {"out_dir": str, "seed": int, "operators": [{"name": str,
    "descriptor": {...}, "E": set JSON or null, "grid": {...} or null,
    "tolerances": {...} or null}, ...]}.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config {path}: {exc}", file=sys.stderr)
        return 2

    ops = cfg.get("operators")
    if not isinstance(ops, list) or not ops:
        print("error: config needs a nonempty 'operators' list", file=sys.stderr)
        return 2
    for spec_entry in ops:
        kind = (spec_entry.get("descriptor") or {}).get("type")
        if kind not in SUPPORTED_TYPES:
            print(f"error: unknown operator type {kind!r}; supported types: "
                  + ", ".join(SUPPORTED_TYPES), file=sys.stderr)
            return 3

    out = out_dir or cfg.get("out_dir")
    if not out:
        print("error: no output directory (config out_dir or --out)", file=sys.stderr)
        return 2
    seed = int(cfg.get("seed", 0))

    any_failed = False
    try:
        os.makedirs(out, exist_ok=True)
        for k, spec_entry in enumerate(ops):
            name = spec_entry.get("name", f"operator_{k}")
            rep = verify_inclusion(
                spec_entry["descriptor"], spec_entry.get("E"),
                spec_entry.get("grid"), spec_entry.get("tolerances"),
                name=name, seed=seed)
            doc = json.dumps(rep.to_json(), sort_keys=True, indent=2) + "\n"
            with open(os.path.join(out, f"{name}_report.json"), "w",
                      encoding="utf-8", newline="\n") as fh:
                fh.write(doc)
            op = build_operator(spec_entry["descriptor"])
            grid, _ = _resolve_grid(spec_entry["descriptor"]["type"], op,
                                    spec_entry.get("grid"))
            with open(os.path.join(out, f"{name}.csv"), "w",
                      encoding="utf-8", newline="\n") as fh:
                fh.write(_csv_for(spec_entry["descriptor"]["type"], op, grid))
            print(f"{name}: {rep.status}"
                  + (f" ({'; '.join(rep.failures)})" if rep.failures else ""))
            any_failed = any_failed or rep.status == "FAILED"
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1 if any_failed else 0


def bundled_config_path(name: str = "free_suite.json") -> str:
    return os.path.join(os.path.dirname(__file__), "configs", name)


# ---------------------------------------------------------------------------
# set demos

def format_set(s) -> str:
    """Compact human-readable rendering of a canonical set."""
    if isinstance(s, CircleArcSet):
        if s.is_full():
            return "full circle"
        parts = [f"arc[{a.theta1:.6g}, {a.theta2:.6g}]" for a in s.arcs]
        parts += [f"{{{p:.6g}}}" for p in s.isolated_points]
        return " u ".join(parts) if parts else "empty"
    parts = [f"[{iv.lo:.6g}, {iv.hi:.6g}]" for iv in s.intervals]
    parts += [f"{{{p:.6g}}}" for p in s.isolated_points]
    return " u ".join(parts) if parts else "empty"


def emit_sets_demo() -> str:
    """Three demo lines: isolated points vanish; a fat open set around the
    rationals has small measure but full essential closure; a countable
    support has empty essential closure."""
    lines = []

    a = canonicalize([(0.0, 1.0, "cc")], [2.0])
    lines.append(f"essential closure drops isolated points: "
                 f"[0, 1] u {{2}} -> {format_set(essential_closure(a))}")

    fat = GeneratedFatSet.rational_fat(20)
    lo, hi = lebesgue_measure(fat)
    rep = fat_density_report(fat)
    closure_measure = rep.closure.measure()
    lines.append(
        f"fat open cover of the rationals in [0, 1]: measure <= {hi:.6f} "
        f"(<= 2/3 = {2/3:.6f}), essential closure {format_set(rep.closure)} with "
        f"closure-minus-set measure >= {closure_measure - hi:.6f} (>= 1/3, "
        f"truncation tail {fat.tail_measure_bound:.2e})")

    pp = canonicalize([], rational_enumeration(30))
    lines.append(
        f"countable pure-point support (Lebesgue measure "
        f"{pp.measure():.1f}): essential closure {format_set(essential_closure(pp))}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# CLIs

def closure_main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="closure", description="essential-closure set utilities")
    sub = p.add_subparsers(dest="cmd", required=True)
    p_sets = sub.add_parser("sets", help="built-in demonstrations")
    p_sets.add_argument("--demo", action="store_true",
                        help="print the three demo lines")
    p_ess = sub.add_parser("essential", help="essential closure of a set JSON")
    p_ess.add_argument("--input", required=True, help="set JSON file")
    p_ess.add_argument("--output", help="write result JSON here (default stdout)")
    ns = p.parse_args(argv)

    if ns.cmd == "sets":
        if ns.demo:
            print(emit_sets_demo())
        else:
            p.error("nothing to do: pass --demo")
        return 0

    try:
        with open(ns.input, encoding="utf-8") as fh:
            s = set_from_json(json.load(fh))
    except (OSError, json.JSONDecodeError, ValueError, KeyError) as exc:
        print(f"error: cannot read set JSON {ns.input}: {exc}", file=sys.stderr)
        return 2
    result = set_to_json(essential_closure(s))
    doc = json.dumps(result, sort_keys=True, indent=2) + "\n"
    if ns.output:
        with open(ns.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(doc)
    else:
        sys.stdout.write(doc)
    return 0


def _parse_grid_arg(arg: str):
    try:
        a, b, n = arg.split(":")
        return float(a), float(b), int(n)
    except ValueError:
        raise SystemExit(f"error: --grid expects start:stop:points, got {arg!r}")


def spec_main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="spec", description="spectral reports for operator descriptors")
    sub = p.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="process a config of operators")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", help="output directory (overrides config)")

    for fam in SUPPORTED_TYPES:
        q = sub.add_parser(fam, help=f"single {fam} descriptor")
        q.add_argument("--desc", required=True, help="descriptor JSON file")
        q.add_argument("--grid", help="start:stop:points "
                       "(cmv: angle grid, endpoint excluded)")
        q.add_argument("--emit", choices=("xi", "spectrum", "report"),
                       default="report")
        q.add_argument("--out", help="write to this file (default stdout)")
    ns = p.parse_args(argv)

    if ns.cmd == "run":
        return run_config(ns.config, ns.out)

    try:
        with open(ns.desc, encoding="utf-8") as fh:
            descriptor = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read descriptor {ns.desc}: {exc}", file=sys.stderr)
        return 2
    if descriptor.get("type") != ns.cmd:
        print(f"error: descriptor type {descriptor.get('type')!r} does not "
              f"match subcommand {ns.cmd!r}", file=sys.stderr)
        return 3

    op = build_operator(descriptor)
    grid_config = None
    if ns.grid:
        a, b, n = _parse_grid_arg(ns.grid)
        if ns.cmd == "cmv":
            grid = np.linspace(a, b, n, endpoint=False)
            grid_config = {"angles": n}
        else:
            grid = np.linspace(a, b, n)
            grid_config = {"start": a, "stop": b, "points": n}
    else:
        grid, _ = _resolve_grid(ns.cmd, op, None)

    if ns.emit == "xi":
        text = _csv_for(ns.cmd, op, grid)
    elif ns.emit == "spectrum":
        mod = {"jacobi": _jacobi, "cmv": _cmv, "schrodinger": _schrodinger}[ns.cmd]
        text = json.dumps(set_to_json(mod.ac_spectrum(op, grid)),
                          sort_keys=True, indent=2) + "\n"
    else:
        rep = verify_inclusion(descriptor, None, grid_config,
                               name=os.path.splitext(os.path.basename(ns.desc))[0])
        text = json.dumps(rep.to_json(), sort_keys=True, indent=2) + "\n"

    if ns.out:
        with open(ns.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(spec_main())
