"""Brownian sheets on a grid and the two stochastic integral types.

A sheet path stores node values B(i*dt, j*dx) per channel, built as the 2-D
cumulative sum of independent N(0, dt*dx) cell increments, so B vanishes on
both axes and rectangle increments over disjoint rectangles are independent
by construction.  Covariance of the continuum object: E[B(s,a)B(t,x)] =
min(s,t)*min(a,x).

First-type integrals sum phi(lower corner) * dB(cell) — adapted evaluation.
Second-type integrals sum psi(corner, corner') * dB(cell) * dB(cell') over
ordered pairs of *distinct* cells: the diagonal carries the quadratic
variation, which the planar Ito formula books under its separate
(1/2) beta beta^T term, so including identical-cell pairs here would double
count it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .plane import Grid, Point
from .rng import DOMAIN_SHEET, substream

__all__ = [
    "SheetPath",
    "sample_sheet",
    "sheet_from_increments",
    "coarsen_increments",
    "cell_increments",
    "rect_increment",
    "ito_integral",
    "double_ito_integral",
    "save_sheet",
    "load_sheet",
]


@dataclass(frozen=True)
class SheetPath:
    """m-channel sheet sampled on a grid; values indexed (channel, i, j)."""

    values: np.ndarray
    grid: Grid
    seed: int

    @property
    def channels(self) -> int:
        return self.values.shape[0]


def sample_sheet(grid: Grid, m: int, seed: int, stream: int = 0) -> SheetPath:
    """Sample an m-channel sheet; deterministic in (grid, m, seed, stream).

    Each channel draws from its own counter-based substream, so channels (and
    distinct streams — use the stream index for replicates or particles) may
    be generated in any order or in parallel without changing the result.
    """
    if m < 1:
        raise ValueError(f"need at least one channel, got m={m}")
    scale = np.sqrt(grid.dt * grid.dx)
    values = np.zeros((m, grid.nt + 1, grid.nx + 1))
    for c in range(m):
        gen = substream(seed, DOMAIN_SHEET, stream=stream, channel=c)
        cells = gen.normal(0.0, scale, (grid.nt, grid.nx))
        values[c, 1:, 1:] = cells.cumsum(axis=0).cumsum(axis=1)
    return SheetPath(values=values, grid=grid, seed=seed)


def sheet_from_increments(grid: Grid, increments: np.ndarray, seed: int = 0) -> SheetPath:
    """Rebuild node values from per-cell increments of shape (m, nt, nx).

    Inverse of :func:`cell_increments` per channel; the hook for injecting
    coupled noise (coarsened, antithetic, shared) into sheet consumers.
    """
    increments = np.asarray(increments, dtype=float)
    if increments.ndim != 3 or increments.shape[1:] != (grid.nt, grid.nx):
        raise ValueError(
            f"increments shape {increments.shape} != (m, {grid.nt}, {grid.nx})"
        )
    values = np.zeros((increments.shape[0], grid.nt + 1, grid.nx + 1))
    values[:, 1:, 1:] = increments.cumsum(axis=1).cumsum(axis=2)
    return SheetPath(values=values, grid=grid, seed=seed)


def coarsen_increments(increments: np.ndarray, factor: int = 2) -> np.ndarray:
    """Block-sum cell increments (..., nt, nx) onto a grid coarser by ``factor``.

    Summing increments over factor x factor blocks is exactly the restriction
    of the same sheet path to the coarse nodes, which is what couples a
    refinement study to one underlying noise realization.
    """
    nt, nx = increments.shape[-2:]
    if factor < 1 or nt % factor or nx % factor:
        raise ValueError(f"cannot coarsen {nt}x{nx} cells by factor {factor}")
    shape = increments.shape[:-2] + (nt // factor, factor, nx // factor, factor)
    return increments.reshape(shape).sum(axis=(-3, -1))


def cell_increments(path: SheetPath, channel: int) -> np.ndarray:
    """Per-cell increments dB of one channel, shape (nt, nx)."""
    v = path.values[channel]
    return v[1:, 1:] - v[:-1, 1:] - v[1:, :-1] + v[:-1, :-1]


def rect_increment(path: SheetPath, channel: int, lower: Point, upper: Point) -> float:
    """Four-corner alternating sum B over the rectangle [lower, upper]."""
    i1, j1 = path.grid.node_index(lower)
    i2, j2 = path.grid.node_index(upper)
    if i2 < i1 or j2 < j1:
        raise ValueError("rectangle corners must satisfy lower <= upper componentwise")
    v = path.values[channel]
    return float(v[i2, j2] - v[i1, j2] - v[i2, j1] + v[i1, j1])


def _corner_values(phi, grid: Grid, i: int, j: int) -> np.ndarray:
    if callable(phi):
        vals = np.asarray(phi(grid.corner_points(i, j)), dtype=float)
        return np.broadcast_to(vals, (i, j))
    arr = np.asarray(phi, dtype=float)
    return arr[:i, :j]


def ito_integral(phi, path: SheetPath, channel: int, z: Point) -> float:
    """First-type integral of phi against one channel over R_z (left evaluation)."""
    i, j = path.grid.node_index(z)
    if i == 0 or j == 0:
        return 0.0
    dB = cell_increments(path, channel)[:i, :j]
    return float(np.sum(_corner_values(phi, path.grid, i, j) * dB))


def double_ito_integral(psi, path: SheetPath, ch1: int, ch2: int, z: Point, chunk: int = 128) -> float:
    """Second-type integral: sum of psi(corner, corner') dB_ch1(cell) dB_ch2(cell')
    over ordered pairs of distinct cells of R_z.

    psi is a callable of two Points (vectorized) or the constant 1 via
    ``psi=None``.  Quadratic-variation diagonal pairs are excluded; see the
    module docstring.
    """
    grid = path.grid
    i, j = grid.node_index(z)
    if i == 0 or j == 0:
        return 0.0
    d1 = cell_increments(path, ch1)[:i, :j].ravel()
    d2 = cell_increments(path, ch2)[:i, :j].ravel()
    tt = (np.arange(i) * grid.dt)[:, None]
    xx = (np.arange(j) * grid.dx)[None, :]
    flat_t = np.broadcast_to(tt, (i, j)).ravel()
    flat_x = np.broadcast_to(xx, (i, j)).ravel()
    n = d1.size
    if psi is None:
        total = d1.sum() * d2.sum() - float(d1 @ d2)
        return float(total)
    second = Point(flat_t[None, :], flat_x[None, :])
    total = 0.0
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        first = Point(flat_t[lo:hi, None], flat_x[lo:hi, None])
        block = np.asarray(psi(first, second), dtype=float)
        block = np.broadcast_to(block, (hi - lo, n)).copy()
        # remove the identical-cell diagonal of this block
        idx = np.arange(lo, hi)
        block[np.arange(hi - lo), idx] = 0.0
        total += float(d1[lo:hi] @ block @ d2)
    return total


_MAGIC = b"SHTL"
_VERSION = 1


def save_sheet(path: SheetPath, filename: str) -> None:
    """Binary dump: header (grid dims, horizon, m, seed) + row-major doubles."""
    grid = path.grid
    header = _MAGIC + struct.pack(
        "<IIIIqdd", _VERSION, grid.nt, grid.nx, path.channels, path.seed,
        grid.horizon.t, grid.horizon.x,
    )
    with open(filename, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(path.values, dtype="<f8").tobytes())


def load_sheet(filename: str) -> SheetPath:
    """Inverse of :func:`save_sheet`; validates magic and payload size."""
    with open(filename, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a sheet dump: bad magic {magic!r}")
        version, nt, nx, m, seed, T, X = struct.unpack("<IIIIqdd", fh.read(40))
        if version != _VERSION:
            raise ValueError(f"unsupported sheet dump version {version}")
        payload = fh.read()
    values = np.frombuffer(payload, dtype="<f8")
    expected = m * (nt + 1) * (nx + 1)
    if values.size != expected:
        raise ValueError(f"sheet dump payload has {values.size} doubles, expected {expected}")
    grid = Grid(Point(T, X), nt, nx)
    return SheetPath(values=values.reshape(m, nt + 1, nx + 1).copy(), grid=grid, seed=seed)
