#!/usr/bin/env python3
"""Three-way engine comparison at the reference operating point.

Runs the analytic channel, the Maxwell-Bloch solver and the Monte-Carlo
sampler at alpha_l = 2.5, chi = 0.01 for 3/7/10 dB inputs and prints a
small table plus the full JSON report path.
"""

import pathlib
import sys

from echomem.cli import load_report, main

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent

if __name__ == "__main__":
    out_dir = ROOT / "results"
    out_dir.mkdir(exist_ok=True)
    report_path = out_dir / "crosscheck.json"
    code = main(
        [
            "crosscheck",
            "--config", str(ROOT / "configs" / "section4.toml"),
            "--out", str(report_path),
        ]
    )
    report = load_report(report_path)
    print(f"\n{'dB':>4} {'F analytic':>11} {'F sampled':>11} {'eta':>9} "
          f"{'eta (PDE)':>10} {'flags':>10}")
    for p in report["points"]:
        flags = "ok" if p["pass_flags"]["pde"] and p["pass_flags"]["mc"] else "MISMATCH"
        print(
            f"{p['squeezing_db']:>4.0f} {p['fidelity_analytic']:>11.5f} "
            f"{p['fidelity_mc']:>11.5f} {p['analytic_eta']:>9.5f} "
            f"{p['pde_efficiency']:>10.5f} {flags:>10}"
        )
    print(f"\nfull report: {report_path}")
    sys.exit(code)
