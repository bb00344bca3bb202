"""Run the bundled free-operator suite and summarize the reports.

The three free operators (Jacobi a=1 b=0, CMV alpha=0, Schrodinger V=0) have
closed-form boundary data, so every check in the report chain exercises the
full numerical pipeline against known answers: ac spectrum [-2, 2], the full
circle, and [0, inf) clipped to the grid top; reflectionless everywhere on
the spectrum; multiplicity two in the interior.
"""

import argparse
import json
import os
import sys

from acspectra.harness_cli import bundled_config_path, run_config


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="reports_free",
                    help="output directory for report JSON/CSV files")
    ap.add_argument("--config", default=None,
                    help="alternative config file (default: bundled free suite)")
    ns = ap.parse_args()

    cfg = ns.config or bundled_config_path()
    rc = run_config(cfg, ns.out)
    if rc != 0:
        return rc

    for name in sorted(os.listdir(ns.out)):
        if not name.endswith("_report.json"):
            continue
        with open(os.path.join(ns.out, name), encoding="utf-8") as fh:
            rep = json.load(fh)
        inc = rep["theorem_inclusion"]
        print(f"{rep['name']:>18}: {rep['status']}  "
              f"inclusion={inc['status']}  "
              f"overhang={inc['overhang']}  "
              f"refl_residual={rep['reflectionless']['max_residual']:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
