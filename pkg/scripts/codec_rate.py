"""Codec block error rate and delivered bits/use against capacity."""
import argparse
import os

from beamcap import ModelParams, capacity
from beamcap.codec import simulate_error_rate

ap = argparse.ArgumentParser(description=__doc__)
ap.add_argument("--blocks", type=int, default=2000)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
args = ap.parse_args()

cases = [((16, 2, 32), 16, "full"), ((16, 2, 16), 12, "full"), ((16, 8, 8), 7, "post-detection"),
         ((8, 4, 6), 6, "post-detection")]
for (M, B, L), K, scheme in cases:
    p = ModelParams(M=M, L=L, B_peak=B)
    r = simulate_error_rate(p, K, args.blocks, seed=args.seed, scheme=scheme, workers=args.workers)
    c = capacity(p).bits_per_use
    print(f"M={M} B={B} L={L} K={K} {scheme:15s} bits/use {r.bits_per_use:.4f}  C {c:.4f}"
          f"  gap {1 - r.bits_per_use / c:6.1%}  Pe {r.pe:.3f}  wrong-unique {r.wrong_unique}")
