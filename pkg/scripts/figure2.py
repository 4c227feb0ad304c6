"""Capacity vs block length at B_peak=2 for several beam counts; writes figure2.csv."""
import sys

from beamcap import experiments as ex

out = sys.argv[1] if len(sys.argv) > 1 else "figure2.csv"
rows = ex.run_sweep(ex.SweepConfig(**ex.FIGURE2, mode="formula"))
ex.write_rows(rows, out)
by_m = {}
for r in rows:
    by_m.setdefault(r["M"], {})[r["L"]] = r["bits_per_use"]
for M, c in sorted(by_m.items()):
    print(f"M={M:2d}  L=1: {c[1]:.4f}  L=8: {c[8]:.4f}  L=64: {c[64]:.4f}")
print(f"wrote {len(rows)} rows to {out}")
