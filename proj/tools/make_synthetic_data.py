#!/usr/bin/env python3
"""Writes the synthetic NACE section-level tables used by tests and examples.

Usage: make_synthetic_data.py OUTDIR
"""
import csv
import sys
from pathlib import Path

import numpy as np

# Off-diagonal io scale; about half of intermediate flows stay inside a sector.
OFFDIAG = 0.05
SECTIONS = list("ABCDEFGHIJKLMNOPQRSTU")

# Rough economy shape: output, household share of each product, firms, employees.
OUTPUT = dict(A=120, B=30, C=1900, D=210, E=60, F=420, G=520, H=330, I=110, J=240,
              K=210, L=310, M=260, N=150, O=260, P=150, Q=190, R=60, S=50, T=2, U=1)
HOUSEHOLD = dict(A=0.25, B=0.02, C=0.18, D=0.30, E=0.20, F=0.05, G=0.55, H=0.20, I=0.70,
                 J=0.25, K=0.30, L=0.60, M=0.05, N=0.10, O=0.05, P=0.15, Q=0.20, R=0.55,
                 S=0.60, T=1.00, U=0.00)
FIRMS = dict(A=40000, B=300, C=180000, D=9000, E=3500, F=160000, G=250000, H=40000,
             I=50000, J=25000, K=25000, L=70000, M=170000, N=25000, O=700, P=9000,
             Q=40000, R=30000, S=90000, T=0, U=0)
EMPLOYEES = dict(A=140000, B=30000, C=1300000, D=35000, E=50000, F=380000, G=650000,
                 H=300000, I=170000, J=120000, K=90000, L=45000, M=220000, N=160000,
                 O=320000, P=330000, Q=340000, R=70000, S=90000, T=5000, U=1000)


def main(out: Path) -> None:
    rng = np.random.default_rng(2010)
    n = len(SECTIONS)
    out.mkdir(parents=True, exist_ok=True)

    # Each section mainly supplies its own product, with a little secondary output.
    supply = np.zeros((n, n))
    for s, code in enumerate(SECTIONS):
        supply[s, s] = OUTPUT[code]
        for p in rng.choice(n, size=2, replace=False):
            if p != s:
                supply[p, s] += round(0.03 * OUTPUT[code] * rng.uniform(), 1)
    use_final = np.array([round(supply[p].sum() * HOUSEHOLD[c], 1) for p, c in enumerate(SECTIONS)])

    # Intermediate flows with a dominant diagonal.
    io = np.zeros((n, n))
    for s, seller in enumerate(SECTIONS):
        for t, buyer in enumerate(SECTIONS):
            scale = 0.25 if s == t else OFFDIAG * rng.uniform()
            io[s, t] = round(scale * np.sqrt(OUTPUT[seller] * OUTPUT[buyer]), 1)

    with open(out / "supply.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["product", "sector", "value"])
        for p, prod in enumerate(SECTIONS):
            for s, sec in enumerate(SECTIONS):
                if supply[p, s] > 0:
                    w.writerow([f"CPA_{prod}", sec, f"{supply[p, s]:g}"])
    with open(out / "use_final.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["product", "value"])
        for p, prod in enumerate(SECTIONS):
            w.writerow([f"CPA_{prod}", f"{use_final[p]:g}"])
    with open(out / "io.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["seller_sector", "buyer_sector", "value"])
        for s, seller in enumerate(SECTIONS):
            for t, buyer in enumerate(SECTIONS):
                w.writerow([seller, buyer, f"{io[s, t]:g}"])
    with open(out / "demography.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["sector", "firm_count", "employee_count"])
        for code in SECTIONS:
            w.writerow([code, FIRMS[code], EMPLOYEES[code]])


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    main(Path(sys.argv[1]))
