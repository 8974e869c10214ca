"""Open-loop-in-the-measure control under partial observation on the plane.

The controller observes only the common channel B1 (and therefore the
conditional law mu of the state given that channel); the idiosyncratic
channels stay hidden.  A policy maps (z, observed common path on R_z,
conditional measure) to a control u, which enters the coefficients through
the extended signature drift(z, y, mu, u) / diffusion(z, y, mu, u).  Currying
a policy into a controlled coefficient field yields an ordinary coefficient
field, so the uncontrolled conditional mean-field solver is reused unchanged.

Two routes to the same performance number:

  direct        J  = E[ mean_p ( int ell(z, Y_p, u) dz + k(Y_p(horizon)) ) ]
  measure-based J~ = E[ int <mu_z, ell(z, ., u)> dz + <mu_horizon, k> ]

Both integrate the running cost over cells at lower corners — the same nodes
where the dynamics evaluated their coefficients, so the cost sees exactly the
controls that drove the particles.  On a single ensemble the two routes are
the same sum in a different order; their equality across *independent*
ensembles (each route gets its own seed) is the substantive check that the
control problem is well-posed on the measure: the verdict compares the gap
against combined Monte Carlo error.

Replicate noise lives in its own substream domain, keyed by replicate index,
so scanning policies at a fixed seed reuses common random numbers — policy
comparisons are paired, which is what makes small performance gaps
resolvable.  Tie-breaks in the scan go to the earliest policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import EmpiricalMeasure
from .plane import Grid, Point
from .rng import DOMAIN_CONTROL, substream
from .solver import CoefficientField, ParticleEnsemble, solve_conditional_mkv

__all__ = [
    "ControlPolicy",
    "ControlledCoefficients",
    "CostSpec",
    "curry_policy",
    "PerformanceEstimate",
    "performance_direct",
    "performance_measure_based",
    "GridSearchResult",
    "grid_search",
    "mean_feedback_policy",
    "constant_policy",
    "controlled_linear_field",
    "lq_cost",
]


@dataclass(frozen=True)
class ControlPolicy:
    """theta labels the policy; rule(z, common_view, mu) -> control vector.

    ``common_view`` is the read-only restriction of the common-channel node
    values to R_z (shape (i+1, j+1) at node (i, j)) — the policy's entire
    observation.  ``mu`` is the conditional-law estimate at z, itself a
    functional of the same observation.
    """

    theta: float
    rule: object


@dataclass(frozen=True)
class ControlledCoefficients:
    """Coefficient maps with a control slot: drift(z, y, mu, u) -> (B, n), etc."""

    n: int
    m: int
    d: int
    drift: object
    diffusion: object

    def __post_init__(self):
        if self.n < 1 or self.m < 2 or self.d < 1:
            raise ValueError(
                f"need n >= 1, m >= 2 (one common channel), d >= 1; "
                f"got n={self.n}, m={self.m}, d={self.d}"
            )


@dataclass(frozen=True)
class CostSpec:
    """running(z, y, u) -> (B,), terminal(y) -> (B,), with the horizon frozen in."""

    running: object
    terminal: object
    horizon: Point


def _common_node_values(grid: Grid, common_increments: np.ndarray) -> np.ndarray:
    values = np.zeros((grid.nt + 1, grid.nx + 1))
    values[1:, 1:] = common_increments.cumsum(axis=0).cumsum(axis=1)
    return values


def curry_policy(
    controlled: ControlledCoefficients,
    policy: ControlPolicy,
    common_values: np.ndarray,
    grid: Grid,
) -> CoefficientField:
    """Close the control slot: an ordinary coefficient field driven by the policy."""

    def observe(z, mu):
        i, j = grid.node_index(z)
        view = common_values[: i + 1, : j + 1].view()
        view.setflags(write=False)
        return np.atleast_1d(np.asarray(policy.rule(z, view, mu), dtype=float))

    def drift(z, y, mu):
        return controlled.drift(z, y, mu, observe(z, mu))

    def diffusion(z, y, mu):
        return controlled.diffusion(z, y, mu, observe(z, mu))

    return CoefficientField(
        n=controlled.n, m=controlled.m, drift=drift, diffusion=diffusion, depends_on_measure=True
    )


def _control_increments(grid: Grid, m: int, M: int, seed: int, rep: int):
    """Per-replicate ensemble noise in the control domain (CRN across policies)."""
    scale = np.sqrt(grid.dt * grid.dx)
    common = substream(seed, DOMAIN_CONTROL, stream=rep, channel=0).normal(
        0.0, scale, (grid.nt, grid.nx)
    )
    idio = np.empty((M, m - 1, grid.nt, grid.nx))
    for p in range(M):
        for c in range(m - 1):
            gen = substream(seed, DOMAIN_CONTROL, stream=rep, channel=1 + p * (m - 1) + c)
            idio[p, c] = gen.normal(0.0, scale, (grid.nt, grid.nx))
    return common, idio


@dataclass(frozen=True)
class PerformanceEstimate:
    theta: float
    value: float
    stderr: float
    replicate_values: np.ndarray
    route: str


def _replicate_cost(
    ensemble: ParticleEnsemble,
    policy: ControlPolicy,
    cost: CostSpec,
    common_values: np.ndarray,
    route: str,
) -> float:
    grid = ensemble.grid
    dtdx = grid.dt * grid.dx
    M = ensemble.particles
    per_particle = np.zeros(M)
    measure_total = 0.0
    for i in range(grid.nt):
        for j in range(grid.nx):
            z = Point(i * grid.dt, j * grid.dx)
            states = ensemble.values[:, i, j, :]
            mu = EmpiricalMeasure(samples=states)
            view = common_values[: i + 1, : j + 1].view()
            view.setflags(write=False)
            u = np.atleast_1d(np.asarray(policy.rule(z, view, mu), dtype=float))
            ell = np.asarray(cost.running(z, states, u), dtype=float)
            if route == "direct":
                per_particle += ell * dtdx
            else:
                measure_total += float(ell.mean()) * dtdx
    terminal = np.asarray(cost.terminal(ensemble.values[:, -1, -1, :]), dtype=float)
    if route == "direct":
        per_particle += terminal
        return float(per_particle.mean())
    return measure_total + float(terminal.mean())


def _performance(
    policy: ControlPolicy,
    controlled: ControlledCoefficients,
    cost: CostSpec,
    y0,
    M: int,
    grid: Grid,
    replicates: int,
    seed: int,
    route: str,
) -> PerformanceEstimate:
    if replicates < 2:
        raise ValueError(f"need at least two replicates, got {replicates}")
    if not (
        np.isclose(float(cost.horizon.t), float(grid.horizon.t))
        and np.isclose(float(cost.horizon.x), float(grid.horizon.x))
    ):
        raise ValueError(
            f"cost horizon {(cost.horizon.t, cost.horizon.x)} is not the grid horizon"
        )
    values = np.empty(replicates)
    for rep in range(replicates):
        common, idio = _control_increments(grid, controlled.m, M, seed, rep)
        common_values = _common_node_values(grid, common)
        coeffs = curry_policy(controlled, policy, common_values, grid)
        ensemble = solve_conditional_mkv(
            coeffs, y0, M, grid, seed, common_increments=common, idio_increments=idio
        )
        values[rep] = _replicate_cost(ensemble, policy, cost, common_values, route)
    return PerformanceEstimate(
        theta=policy.theta,
        value=float(values.mean()),
        stderr=float(values.std(ddof=1) / np.sqrt(replicates)),
        replicate_values=values,
        route=route,
    )


def performance_direct(
    policy: ControlPolicy,
    controlled: ControlledCoefficients,
    cost: CostSpec,
    y0,
    M: int,
    grid: Grid,
    replicates: int,
    seed: int,
) -> PerformanceEstimate:
    """J: average over particles of pathwise running-plus-terminal cost."""
    return _performance(policy, controlled, cost, y0, M, grid, replicates, seed, "direct")


def performance_measure_based(
    policy: ControlPolicy,
    controlled: ControlledCoefficients,
    cost: CostSpec,
    y0,
    M: int,
    grid: Grid,
    replicates: int,
    seed: int,
) -> PerformanceEstimate:
    """J~: cost integrated against the conditional empirical measures."""
    return _performance(policy, controlled, cost, y0, M, grid, replicates, seed, "measure")


@dataclass(frozen=True)
class GridSearchResult:
    best_index: int
    best_policy: ControlPolicy
    table: list


def grid_search(
    policies: list,
    controlled: ControlledCoefficients,
    cost: CostSpec,
    y0,
    M: int,
    grid: Grid,
    replicates: int,
    seed: int,
    route: str = "direct",
) -> GridSearchResult:
    """Evaluate every policy on common random numbers; earliest argmax wins."""
    if not policies:
        raise ValueError("need at least one policy")
    table = [
        _performance(p, controlled, cost, y0, M, grid, replicates, seed, route)
        for p in policies
    ]
    best = int(np.argmax([est.value for est in table]))
    return GridSearchResult(best_index=best, best_policy=policies[best], table=table)


# --------------------------------------------------------------------------
# stock policies, dynamics, and costs


def mean_feedback_policy(theta: float) -> ControlPolicy:
    """u = theta * mean of the conditional measure (componentwise)."""
    return ControlPolicy(
        theta=theta,
        rule=lambda z, common, mu: theta * mu.samples.mean(axis=0),
    )


def constant_policy(value) -> ControlPolicy:
    value_arr = np.atleast_1d(np.asarray(value, dtype=float))
    return ControlPolicy(theta=float(value_arr[0]), rule=lambda z, common, mu: value_arr)


def controlled_linear_field(
    drift_gain: float = -1.0,
    control_gain: float = 1.0,
    sigma: tuple = (0.5, 0.5),
) -> ControlledCoefficients:
    """Scalar controlled dynamics alpha = gain*y + control, beta constant."""
    sigma_arr = np.asarray(sigma, dtype=float).reshape(1, 1, -1)

    def drift(z, y, mu, u):
        return drift_gain * y + control_gain * u[None, :]

    def diffusion(z, y, mu, u):
        return np.broadcast_to(sigma_arr, (y.shape[0], 1, sigma_arr.shape[-1]))

    return ControlledCoefficients(
        n=1, m=sigma_arr.shape[-1], d=1, drift=drift, diffusion=diffusion
    )


def lq_cost(
    horizon: Point,
    state_weight: float = 1.0,
    control_weight: float = 1.0,
    terminal_weight: float = 1.0,
    target: float = 0.0,
) -> CostSpec:
    """Reward form of the quadratic tracking cost (maximized, hence negated)."""

    def running(z, y, u):
        return -(
            state_weight * np.sum((y - target) ** 2, axis=-1)
            + control_weight * float(np.sum(u**2))
        )

    def terminal(y):
        return -terminal_weight * np.sum((y - target) ** 2, axis=-1)

    return CostSpec(running=running, terminal=terminal, horizon=horizon)
