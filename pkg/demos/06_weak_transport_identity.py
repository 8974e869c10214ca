"""The conditional law satisfies a weak transport identity on the plane.

Freeze the shared noise channel and track mu_z, the conditional law of the
state at the point z.  Testing against the Fourier family e^{-i w y} turns
the transport equation into a checkable identity: the increment of the
characteristic function equals five explicit integral terms (one cell sum
against a complex drift kernel, one stochastic sum against the shared
channel, and three pair sums).

The identity is exact in three degenerate directions -- zero frequency,
boundary points, conjugate frequencies -- and holds up to a residual that
shrinks as the particle count and the grid are refined together.  The
refinements below share their underlying noise, so the decay is visible
with few replicates.
"""

import numpy as np

from sheetlab import (
    FrequencyGrid,
    Grid,
    Point,
    coarsen_increments,
    mean_reversion_field,
    residual_table,
    sample_replicate_increments,
    solve_conditional_mkv,
    weak_residual,
)


def square(k):
    return Grid(horizon=Point(1.0, 1.0), nt=k, nx=k)


co = mean_reversion_field(0.5, (0.7, 0.5))
z = Point(1.0, 1.0)

# -- exact directions ---------------------------------------------------------
ens = solve_conditional_mkv(co, 1.0, M=100, grid=square(16), seed=0)
print("exact directions (M = 100, k = 16)")
print(f"  w = 0:                      residual = {abs(weak_residual(ens, 0.0, z)):.1e}")
print(f"  boundary point (0, 1):      residual = {abs(weak_residual(ens, 1.0, Point(0.0, 1.0))):.1e}")
conj_gap = abs(weak_residual(ens, -1.0, z) - np.conj(weak_residual(ens, 1.0, z)))
print(f"  conjugate symmetry at w = 1: gap     = {conj_gap:.1e}")

# -- joint refinement with shared noise ---------------------------------------
freqs = FrequencyGrid(np.array([1.0, -1.0, 2.0, -2.0]))
reps = 6
acc = {"M=100, k=16": [], "M=800, k=16": [], "M=800, k=32": []}
for rep in range(reps):
    c32, i32 = sample_replicate_increments(square(32), 2, 800, seed=7, rep=rep)
    c16 = coarsen_increments(c32[None], 2)[0]
    i16 = coarsen_increments(i32, 2)
    runs = (
        ("M=100, k=16", square(16), 100, c16, i16[:100]),
        ("M=800, k=16", square(16), 800, c16, i16),
        ("M=800, k=32", square(32), 800, c32, i32),
    )
    for tag, g, M, cc, ii in runs:
        e = solve_conditional_mkv(co, 1.0, M, g, 7, common_increments=cc, idio_increments=ii)
        acc[tag].append(np.mean([abs(r) for _, r in residual_table(e, freqs, z)]))

print(f"\nmean |residual| over w in {{1, -1, 2, -2}} and {reps} shared-noise replicates")
for tag, vals in acc.items():
    print(f"  {tag}: {np.mean(vals):.4f}")
print("  (refining the sample alone leaves the grid bias; refining both shrinks it)")
