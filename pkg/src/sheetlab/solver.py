"""Two-parameter Euler-Goursat integration and the conditional mean-field
particle method.

The integral equation on the plane,

    Y(z) = Y(0) + int_{R_z} alpha(zeta, Y, mu) dzeta
                + int_{R_z} beta(zeta, Y, mu) B(dzeta),

is discretized by the explicit lower-corner recursion

    Y_{i+1,j+1} = Y_{i+1,j} + Y_{i,j+1} - Y_{i,j}
                  + alpha_{ij} dt dx + beta_{ij} dB_{ij},

which telescopes exactly to the discrete integrals: on-grid, the solved field
*is* y0 + rect_integral(drift) + ito_integral(each diffusion column), an
algebraic identity the test suite pins at 1e-10.  Advancing a row only needs
row-i data, so each row is one vectorized cumulative sum.

Coefficient callables are vectorized over a batch axis: drift(z, y, mu) takes
y of shape (B, n) and returns (B, n); diffusion returns (B, n, m).  The batch
is the particle axis (z scalar) in the mean-field method, or the row-node
axis (z holds arrays) in the plain single-path solve.

The conditional mean-field system couples M particles through the empirical
measure of their states at the current node: channel 1 of the sheet is shared
by all particles (the common noise), channels 2..m are drawn independently
per particle.  That empirical measure is the particle estimate of the
conditional law of Y given the channel-1 history, and it is rebuilt
node-by-node before the particles advance — bulk-synchronous, so the result
is independent of any particle execution order.

Picard iteration re-solves the recursion with coefficients frozen at the
previous iterate's states and measures, reusing identical noise arrays across
iterates (the contraction being probed lives on one probability space; fresh
noise would destroy it).  Iterate gaps are reported as sup-over-grid
mean-square differences; the convergence threshold for horizon area |z| = T*X
and Lipschitz constant K is K|z| < sqrt(r0) ~ 1.2024, with the companion
Gronwall regime K|z| <= r0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import EmpiricalMeasure
from .noise import SheetPath, cell_increments
from .plane import Grid, Point
from .rng import DOMAIN_ENSEMBLE, DOMAIN_REPLICATE, substream
from .series import find_r0

__all__ = [
    "CoefficientField",
    "StateField",
    "ParticleEnsemble",
    "solve_goursat",
    "solve_conditional_mkv",
    "sample_ensemble_increments",
    "sample_replicate_increments",
    "mean_reversion_field",
    "PicardResult",
    "picard_solve",
    "RadiusReport",
    "convergence_radius_report",
    "state_slice_csv",
]


@dataclass(frozen=True)
class CoefficientField:
    """Drift/diffusion maps with declared shapes and dependence flags.

    drift(z, y, mu) -> (B, n); diffusion(z, y, mu) -> (B, n, m) for y of
    shape (B, n).  When depends_on_measure is False the measure argument is
    passed as None and must be ignored by the maps.
    """

    n: int
    m: int
    drift: object
    diffusion: object
    depends_on_state: bool = True
    depends_on_measure: bool = True
    lipschitz_hint: float | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"state dim and channel count must be >= 1, got n={self.n}, m={self.m}")


@dataclass(frozen=True)
class StateField:
    """Solution values on grid nodes, shape (nt+1, nx+1, n)."""

    values: np.ndarray
    grid: Grid

    @property
    def n(self) -> int:
        return self.values.shape[2]

    def at(self, z: Point) -> np.ndarray:
        i, j = self.grid.node_index(z)
        return self.values[i, j]


@dataclass(frozen=True)
class ParticleEnsemble:
    """M coupled particles: states (M, nt+1, nx+1, n), shared common channel.

    ``common_increments`` has shape (nt, nx); ``idio_increments`` has shape
    (M, m-1, nt, nx).  Idiosyncratic streams are indexed by particle, so a
    smaller ensemble drawn from the same seed is a prefix of a larger one.
    """

    values: np.ndarray
    grid: Grid
    common_increments: np.ndarray
    idio_increments: np.ndarray
    seed: int
    coeffs: CoefficientField | None = None
    y0: np.ndarray | None = None

    @property
    def particles(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[3]

    def particle(self, p: int) -> StateField:
        return StateField(values=self.values[p], grid=self.grid)

    def measure_at(self, z: Point) -> EmpiricalMeasure:
        """Empirical (conditional-law estimate) measure of the states at node z."""
        i, j = self.grid.node_index(z)
        return EmpiricalMeasure(samples=self.values[:, i, j, :])


def _check_shapes(tag: str, arr: np.ndarray, expected: tuple) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.shape != expected:
        raise ValueError(f"{tag} returned shape {arr.shape}, expected {expected}")
    return arr


def solve_goursat(
    coeffs: CoefficientField,
    y0,
    sheet: SheetPath,
    grid: Grid,
    measure_source=None,
) -> StateField:
    """Single-path explicit recursion; boundary rows/columns stay at y0.

    ``measure_source``, required when coeffs.depends_on_measure, is a callable
    (i, j) -> EmpiricalMeasure supplying the frozen measure at each node.
    """
    if sheet.channels != coeffs.m:
        raise ValueError(f"sheet has {sheet.channels} channels, coefficients declare m={coeffs.m}")
    if sheet.grid != grid:
        raise ValueError("sheet was sampled on a different grid")
    if coeffs.depends_on_measure and measure_source is None:
        raise ValueError("coefficients depend on the measure: supply measure_source")
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (coeffs.n,))
    nt, nx, n, m = grid.nt, grid.nx, coeffs.n, coeffs.m
    dB = np.stack([cell_increments(sheet, c) for c in range(m)], axis=-1)  # (nt, nx, m)
    dtdx = grid.dt * grid.dx
    Y = np.empty((nt + 1, nx + 1, n))
    Y[0, :, :] = y0
    Y[:, 0, :] = y0
    xs = np.arange(nx) * grid.dx
    for i in range(nt):
        t_i = i * grid.dt
        row_state = Y[i, :nx, :]  # (nx, n)
        if measure_source is None:
            z = Point(np.full(nx, t_i), xs)
            alpha = _check_shapes("drift", coeffs.drift(z, row_state, None), (nx, n))
            beta = _check_shapes("diffusion", coeffs.diffusion(z, row_state, None), (nx, n, m))
        else:
            alpha = np.empty((nx, n))
            beta = np.empty((nx, n, m))
            for j in range(nx):
                z = Point(t_i, j * grid.dx)
                mu = measure_source(i, j)
                yj = row_state[j : j + 1, :]
                alpha[j] = _check_shapes("drift", coeffs.drift(z, yj, mu), (1, n))[0]
                beta[j] = _check_shapes("diffusion", coeffs.diffusion(z, yj, mu), (1, n, m))[0]
        src = alpha * dtdx + np.einsum("jnm,jm->jn", beta, dB[i])
        Y[i + 1, 1:, :] = Y[i + 1, 0, :] + (Y[i, 1:, :] - Y[i, 0, :]) + np.cumsum(src, axis=0)
    return StateField(values=Y, grid=grid)


def sample_ensemble_increments(grid: Grid, m: int, M: int, seed: int):
    """Cell increments for an M-particle ensemble from the standard streams.

    Returns (common, idio): shapes (nt, nx) and (M, m-1, nt, nx).  Stream 0
    is the common channel, particle p draws idiosyncratic channels from
    stream p+1 — hence ensembles are nested across M for a fixed seed.
    """
    scale = np.sqrt(grid.dt * grid.dx)
    common = substream(seed, DOMAIN_ENSEMBLE, stream=0, channel=0).normal(
        0.0, scale, (grid.nt, grid.nx)
    )
    idio = np.empty((M, m - 1, grid.nt, grid.nx))
    for p in range(M):
        for c in range(m - 1):
            gen = substream(seed, DOMAIN_ENSEMBLE, stream=p + 1, channel=c + 1)
            idio[p, c] = gen.normal(0.0, scale, (grid.nt, grid.nx))
    return common, idio


def sample_replicate_increments(grid: Grid, m: int, M: int, seed: int, rep: int):
    """Ensemble noise for Monte Carlo over whole ensembles, keyed by replicate.

    Same shapes as :func:`sample_ensemble_increments`, drawn from the
    replicate domain with stream = rep.  The channel word encodes (particle,
    channel), so for a fixed replicate the idiosyncratic noise is nested
    across ensemble sizes and the common sheet does not depend on M at all —
    which is what pairs an M-refinement comparison replicate by replicate.
    """
    scale = np.sqrt(grid.dt * grid.dx)
    common = substream(seed, DOMAIN_REPLICATE, stream=rep, channel=0).normal(
        0.0, scale, (grid.nt, grid.nx)
    )
    idio = np.empty((M, m - 1, grid.nt, grid.nx))
    for p in range(M):
        for c in range(m - 1):
            gen = substream(seed, DOMAIN_REPLICATE, stream=rep, channel=1 + p * (m - 1) + c)
            idio[p, c] = gen.normal(0.0, scale, (grid.nt, grid.nx))
    return common, idio


def mean_reversion_field(rate: float, sigma, n: int = 1) -> CoefficientField:
    """Conditional OU dynamics: drift = rate * (mean of mu - y), constant beta.

    The drift is rate-Lipschitz in the state and rate-Lipschitz in the
    measure (through the mean), so the declared joint constant is 2 * rate.
    """
    sigma_arr = np.asarray(sigma, dtype=float)
    if sigma_arr.ndim == 1:
        sigma_arr = np.broadcast_to(sigma_arr[None, :], (n, sigma_arr.shape[0]))
    m = sigma_arr.shape[1]

    def drift(z, y, mu):
        return rate * (mu.samples.mean(axis=0)[None, :] - y)

    def diffusion(z, y, mu):
        return np.broadcast_to(sigma_arr, (y.shape[0], n, m))

    return CoefficientField(
        n=n,
        m=m,
        drift=drift,
        diffusion=diffusion,
        depends_on_measure=True,
        lipschitz_hint=2.0 * abs(rate),
    )


def solve_conditional_mkv(
    coeffs: CoefficientField,
    y0,
    M: int,
    grid: Grid,
    seed: int,
    common_increments: np.ndarray | None = None,
    idio_increments: np.ndarray | None = None,
) -> ParticleEnsemble:
    """Conditional mean-field particle system under shared common noise.

    At each node the empirical measure of all M particle states feeds the
    coefficients (frozen before any particle advances).  Channel 1 increments
    are identical across particles; channels 2..m are per-particle.  Optional
    increment arrays override the seed-derived noise — the hook used for
    common-random-number and refinement-coupled experiments.
    """
    if M < 1:
        raise ValueError(f"need at least one particle, got M={M}")
    if coeffs.m < 2:
        raise ValueError("conditional dynamics need m >= 2: one common plus idiosyncratic channels")
    if common_increments is None or idio_increments is None:
        sampled = sample_ensemble_increments(grid, coeffs.m, M, seed)
        common_increments = sampled[0] if common_increments is None else common_increments
        idio_increments = sampled[1] if idio_increments is None else idio_increments
    common_increments = np.asarray(common_increments, dtype=float)
    idio_increments = np.asarray(idio_increments, dtype=float)
    if common_increments.shape != (grid.nt, grid.nx):
        raise ValueError(f"common increments shape {common_increments.shape} != {(grid.nt, grid.nx)}")
    if idio_increments.shape != (M, coeffs.m - 1, grid.nt, grid.nx):
        raise ValueError(
            f"idiosyncratic increments shape {idio_increments.shape} != "
            f"{(M, coeffs.m - 1, grid.nt, grid.nx)}"
        )
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (coeffs.n,))
    nt, nx, n, m = grid.nt, grid.nx, coeffs.n, coeffs.m
    dtdx = grid.dt * grid.dx
    Y = np.empty((M, nt + 1, nx + 1, n))
    Y[:, 0, :, :] = y0
    Y[:, :, 0, :] = y0
    dB = np.empty((M, m))
    src = np.empty((M, nx, n))
    for i in range(nt):
        t_i = i * grid.dt
        for j in range(nx):
            states = Y[:, i, j, :]
            mu = EmpiricalMeasure(samples=states) if coeffs.depends_on_measure else None
            z = Point(t_i, j * grid.dx)
            alpha = _check_shapes("drift", coeffs.drift(z, states, mu), (M, n))
            beta = _check_shapes("diffusion", coeffs.diffusion(z, states, mu), (M, n, m))
            dB[:, 0] = common_increments[i, j]
            dB[:, 1:] = idio_increments[:, :, i, j]
            src[:, j, :] = alpha * dtdx + np.einsum("pnm,pm->pn", beta, dB)
        Y[:, i + 1, 1:, :] = (
            Y[:, i + 1, 0, None, :] + (Y[:, i, 1:, :] - Y[:, i, 0, None, :]) + np.cumsum(src, axis=1)
        )
    return ParticleEnsemble(
        values=Y,
        grid=grid,
        common_increments=common_increments,
        idio_increments=idio_increments,
        seed=seed,
        coeffs=coeffs,
        y0=y0,
    )


@dataclass(frozen=True)
class PicardResult:
    ensemble: ParticleEnsemble
    gaps: np.ndarray
    iterations: int
    converged: bool
    diverged: bool


def picard_solve(
    coeffs: CoefficientField,
    y0,
    M: int,
    grid: Grid,
    seed: int,
    max_iter: int,
    tol: float,
) -> PicardResult:
    """Picard iteration for the conditional mean-field system.

    Iterate 0 is the constant field y0.  Iterate k+1 solves the recursion
    with drift/diffusion evaluated along iterate k (states and empirical
    measures), on one fixed set of noise arrays.  Gaps are sup-over-nodes
    mean-square iterate differences; the divergence flag trips after three
    consecutive gap increases.
    """
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    common, idio = sample_ensemble_increments(grid, coeffs.m, M, seed)
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (coeffs.n,))
    nt, nx, n, m = grid.nt, grid.nx, coeffs.n, coeffs.m
    dtdx = grid.dt * grid.dx
    prev = np.broadcast_to(y0, (M, nt + 1, nx + 1, n)).copy()
    gaps = []
    converged = diverged = False
    dB = np.empty((M, m))
    iterations = 0
    for _ in range(max_iter):
        cur = np.empty_like(prev)
        cur[:, 0, :, :] = y0
        cur[:, :, 0, :] = y0
        src = np.empty((M, nx, n))
        for i in range(nt):
            t_i = i * grid.dt
            for j in range(nx):
                states = prev[:, i, j, :]  # frozen at the previous iterate
                mu = EmpiricalMeasure(samples=states) if coeffs.depends_on_measure else None
                z = Point(t_i, j * grid.dx)
                alpha = _check_shapes("drift", coeffs.drift(z, states, mu), (M, n))
                beta = _check_shapes("diffusion", coeffs.diffusion(z, states, mu), (M, n, m))
                dB[:, 0] = common[i, j]
                dB[:, 1:] = idio[:, :, i, j]
                src[:, j, :] = alpha * dtdx + np.einsum("pnm,pm->pn", beta, dB)
            cur[:, i + 1, 1:, :] = (
                cur[:, i + 1, 0, None, :]
                + (cur[:, i, 1:, :] - cur[:, i, 0, None, :])
                + np.cumsum(src, axis=1)
            )
        gap = float(np.max(np.mean(np.sum((cur - prev) ** 2, axis=-1), axis=0)))
        gaps.append(gap)
        iterations += 1
        prev = cur
        if gap < tol:
            converged = True
            break
        if len(gaps) >= 4 and all(gaps[-k] > gaps[-k - 1] for k in (1, 2, 3)):
            diverged = True
            break
    ensemble = ParticleEnsemble(
        values=prev,
        grid=grid,
        common_increments=common,
        idio_increments=idio,
        seed=seed,
        coeffs=coeffs,
        y0=y0,
    )
    return PicardResult(
        ensemble=ensemble,
        gaps=np.asarray(gaps),
        iterations=iterations,
        converged=converged,
        diverged=diverged,
    )


@dataclass(frozen=True)
class RadiusReport:
    area: float
    r0: float
    picard_threshold: float
    gronwall_threshold: float
    picard_ok: bool
    gronwall_ok: bool


def convergence_radius_report(coeffs: CoefficientField, grid: Grid) -> RadiusReport:
    """Compare the horizon area |z| = T*X against both contraction regimes.

    Picard: K |z| < sqrt(r0).  Gronwall: K |z| <= r0.  K is the declared
    lipschitz_hint; K = 0 makes both thresholds infinite.
    """
    if coeffs.lipschitz_hint is None:
        raise ValueError("convergence_radius_report needs coeffs.lipschitz_hint")
    K = coeffs.lipschitz_hint
    if K < 0:
        raise ValueError(f"Lipschitz hint must be nonnegative, got {K}")
    area = grid.horizon.area
    r0 = find_r0(1e-12)
    picard_threshold = np.inf if K == 0 else np.sqrt(r0) / K
    gronwall_threshold = np.inf if K == 0 else r0 / K
    return RadiusReport(
        area=area,
        r0=r0,
        picard_threshold=picard_threshold,
        gronwall_threshold=gronwall_threshold,
        picard_ok=area < picard_threshold,
        gronwall_ok=area <= gronwall_threshold,
    )


def state_slice_csv(field: StateField, filename: str, fixed: str, index: int) -> None:
    """CSV dump of one grid line (fixed='t' row or fixed='x' column) for plotting."""
    if fixed not in ("t", "x"):
        raise ValueError(f"fixed must be 't' or 'x', got {fixed!r}")
    grid = field.grid
    with open(filename, "w", newline="") as fh:
        if fixed == "t":
            coords = grid.x_nodes()
            rows = field.values[index, :, :]
            fh.write("x," + ",".join(f"y{k}" for k in range(field.n)) + "\n")
        else:
            coords = grid.t_nodes()
            rows = field.values[:, index, :]
            fh.write("t," + ",".join(f"y{k}" for k in range(field.n)) + "\n")
        for c, row in zip(coords, rows):
            fh.write(",".join(repr(float(v)) for v in (c, *row)) + "\n")
