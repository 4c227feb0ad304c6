"""Capacity vs block length at M=16 for several peak budgets; writes figure1.csv."""
import sys

from beamcap import experiments as ex

out = sys.argv[1] if len(sys.argv) > 1 else "figure1.csv"
rows = ex.run_sweep(ex.SweepConfig(**ex.FIGURE1, mode="formula"))
ex.write_rows(rows, out)
by_b = {}
for r in rows:
    by_b.setdefault(r["B_peak"], {})[r["L"]] = r["bits_per_use"]
for B, c in sorted(by_b.items()):
    print(f"B={B:2d}  L=1: {c[1]:.4f}  L=8: {c[8]:.4f}  L=64: {c[64]:.4f}")
print(f"wrote {len(rows)} rows to {out}")
