"""Coupled Brownian paths: one fine draw, many coarse views.

Each path is drawn once on the finest grid from its own counter-based stream.
Coarser grids are block sums of the fine increments, so every level of a
convergence study sees the same underlying Wiener path.
"""
import numpy as np

from sdde_euler import coarsen, ensemble, generate_increments, wiener_value

w = generate_increments(seed=42, stream_id=0, t0=0.0, t1=2.0, fine_steps=2 ** 12)
print(f"fine grid: {w.fine_steps} steps, h = {w.h:g}")
print(f"W(T) = {wiener_value(w, w.fine_steps):.6f}")

# increments live on a dyadic lattice, so block sums are exact in any order
for factor in (1, 16, 256, 2 ** 12):
    dw = coarsen(w, factor)
    print(f"factor {factor:5d}: {len(dw):5d} increments, sum = {dw.sum():.6f}")

# same (seed, stream) gives the same path; different streams are independent
again = generate_increments(42, 0, 0.0, 2.0, 2 ** 12)
print("reproducible:", np.array_equal(w.increments, again.increments))

paths = ensemble(42, range(2000), 0.0, 1.0, 2 ** 8)
terminal = np.array([p.cumulative()[-1] for p in paths])
print(f"W(1) over 2000 streams: mean {terminal.mean():+.4f}, var {terminal.var():.4f}")
