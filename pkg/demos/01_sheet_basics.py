"""Sampling the driving noise field and checking its basic statistics.

The noise underlying everything in this package is a centered Gaussian field
indexed by points (t, x) of a rectangle, with covariance
``min(s, t) * min(a, x)``.  On a grid it is materialized from independent
cell increments of variance dt*dx, so every rectangle increment is exactly
Gaussian with variance equal to the rectangle's area.

This script samples the field, verifies the covariance empirically, shows
that rectangle increments over disjoint rectangles are uncorrelated, checks
the stochastic-integral isometry on a simple integrand, and round-trips a
sampled path through the binary dump format.
"""

import os
import tempfile

import numpy as np

from sheetlab import (
    Grid,
    Point,
    ito_integral,
    load_sheet,
    rect_increment,
    sample_sheet,
    save_sheet,
)

grid = Grid(horizon=Point(1.0, 1.0), nt=32, nx=32)

# -- covariance at two node pairs, estimated over many independent draws ----
reps = 4000
vals = np.empty((reps, 3))
for rep in range(reps):
    v = sample_sheet(grid, 1, seed=0, stream=rep).values[0]
    vals[rep] = (v[32, 32], v[16, 32], v[32, 16])

print("covariance of the field (4000 draws)")
print(f"  Var B(1, 1)        = {vals[:, 0].var(ddof=1):.4f}   (exact 1.0)")
emp_cov = np.mean(vals[:, 1] * vals[:, 2]) - vals[:, 1].mean() * vals[:, 2].mean()
print(f"  Cov(B(.5,1), B(1,.5)) = {emp_cov:.4f}   (exact min*min = 0.25)")

# -- rectangle increments over disjoint rectangles are independent ----------
lo = np.empty(reps)
hi = np.empty(reps)
for rep in range(reps):
    sheet = sample_sheet(grid, 1, seed=1, stream=rep)
    lo[rep] = rect_increment(sheet, 0, Point(0.0, 0.0), Point(0.5, 0.5))
    hi[rep] = rect_increment(sheet, 0, Point(0.5, 0.5), Point(1.0, 1.0))
corr = np.corrcoef(lo, hi)[0, 1]
print("\ndisjoint rectangle increments")
print(f"  Var over [0,.5]^2   = {lo.var(ddof=1):.4f}   (exact area = 0.25)")
print(f"  correlation with [.5,1]^2 increment = {corr:+.4f}   (exact 0)")

# -- the L2 isometry for integrals of deterministic integrands --------------
# For phi(s, a) = s * a the second moment of the integral over the unit
# square is the integral of phi^2, namely 1/9.  The discrete integral
# evaluates phi at the lower-left corner of each cell, so at resolution k
# its exact second moment is (sum of squared corner values) * dt * dx; the
# gap to 1/9 is the quadrature bias and shrinks like 1/k.
k = grid.nt
corners = np.arange(k) / k
discrete_exact = float(np.sum(corners**2) / k) ** 2  # separable in t and x
sq = np.empty(reps)
for rep in range(reps):
    sheet = sample_sheet(grid, 1, seed=2, stream=rep)
    sq[rep] = ito_integral(lambda p: p.t * p.x, sheet, 0, Point(1.0, 1.0)) ** 2
print("\nstochastic-integral isometry, phi(s, a) = s a")
print(f"  E[I^2] = {sq.mean():.5f} +- {sq.std(ddof=1) / np.sqrt(reps):.5f}")
print(f"  discrete target at k={k}: {discrete_exact:.5f}; continuum limit 1/9 = {1 / 9:.5f}")

# -- binary round trip -------------------------------------------------------
sheet = sample_sheet(grid, 2, seed=3)
with tempfile.TemporaryDirectory() as tmp:
    fn = os.path.join(tmp, "path.sheet")
    save_sheet(sheet, fn)
    back = load_sheet(fn)
print("\nbinary dump round trip")
print(f"  max |values - reloaded| = {np.max(np.abs(sheet.values - back.values)):.1e}")
print(f"  grid and seed preserved: {back.grid == sheet.grid and back.seed == sheet.seed}")
