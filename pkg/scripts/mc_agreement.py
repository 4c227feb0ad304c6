"""Monte Carlo estimate of H(Y^L|S)/L against the closed form on a few points."""
import argparse

from beamcap import ModelParams, capacity, mc_entropy_estimate

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--blocks", type=int, default=10**6)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--workers", type=int, default=1)
args = ap.parse_args()

for M, B, L in [(16, 2, 4), (16, 3, 8), (32, 4, 6), (8, 1, 12)]:
    p = ModelParams(M=M, L=L, B_peak=B)
    rep = mc_entropy_estimate(p, args.blocks, seed=args.seed, workers=args.workers)
    c = capacity(p).bits_per_use
    z = abs(rep.bits_per_use - c) / rep.half_width
    print(f"M={M:2d} B={B} L={L:2d}  MC {rep.bits_per_use:.5f} +/- {rep.half_width:.5f}"
          f"  C {c:.5f}  ({z:.2f} half-widths)")
