"""The Bessel-type entire function f, its critical zero r0, and the
Picard-majorant sequence x_n.

f(y) = sum_{n>=0} y^n / (n!)^2  — so f(-t) = J0(2*sqrt(t)) for t >= 0 and f
solves the ODE y f'' + f' = f.  Its first zero on the negative axis sits at
-r0 with r0 = (j_{0,1}/2)^2 ~ 1.4458; r0 is the horizon-area threshold of the
two-parameter Gronwall/Picard machinery: mean-square Picard iterates are
majorized by sum (K|z|)^{2n} x_n, which converges exactly when K|z| < sqrt(r0).

The x_n satisfy the convolution recursion x_n = -sum_{j=1}^n (-1)^j/(j!)^2
x_{n-j}; with the seed x_0 = 1 this makes (x_n) the coefficient sequence of
the reciprocal power series 1 / f(-t) = 1 / J0(2 sqrt(t)) — the generating-
function identity tested in the suite.  (The recursion alone does not fix
x_0; the seed is a library convention, consistent with the majorant role.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SeriesConfig",
    "f_series",
    "f_series_derivative",
    "find_r0",
    "x_seq",
    "picard_series_partial_sums",
]

_Y_GUARD = 700.0  # |y| cap: keeps term growth far from overflow at desk scale


@dataclass(frozen=True)
class SeriesConfig:
    truncation_terms: int = 60
    tail_tol: float = 1e-14

    def __post_init__(self):
        if self.truncation_terms < 10:
            raise ValueError(f"need at least 10 series terms, got {self.truncation_terms}")


def f_series(y, config: SeriesConfig = SeriesConfig()):
    """f(y) = sum y^n/(n!)^2 by the recursion term_n = term_{n-1} * y / n^2.

    Accepts scalars or arrays; stops early when every term has dropped below
    tail_tol relative to the running sum.
    """
    arr = np.asarray(y, dtype=float)
    if np.any(np.abs(arr) > _Y_GUARD):
        raise ValueError(f"|y| <= {_Y_GUARD:g} required for the series evaluation")
    total = np.ones_like(arr)
    term = np.ones_like(arr)
    for n in range(1, config.truncation_terms):
        term = term * arr / (n * n)
        total = total + term
        if np.all(np.abs(term) < config.tail_tol * np.maximum(np.abs(total), 1.0)):
            break
    if np.ndim(y) == 0:
        return float(total)
    return total


def f_series_derivative(y, config: SeriesConfig = SeriesConfig()):
    """f'(y) = sum_{n>=1} n y^{n-1}/(n!)^2, same truncation policy as f_series."""
    arr = np.asarray(y, dtype=float)
    if np.any(np.abs(arr) > _Y_GUARD):
        raise ValueError(f"|y| <= {_Y_GUARD:g} required for the series evaluation")
    total = np.ones_like(arr)  # n=1 term: 1/(1!)^2
    term = np.ones_like(arr)
    for n in range(2, config.truncation_terms):
        # term ratio between consecutive derivative terms: y * n / ((n-1) n^2)
        term = term * arr / (n * (n - 1))
        total = total + term
        if np.all(np.abs(term) < config.tail_tol * np.maximum(np.abs(total), 1.0)):
            break
    if np.ndim(y) == 0:
        return float(total)
    return total


def find_r0(tol: float) -> float:
    """First positive zero of t -> f(-t), by bisection on the bracket [1, 2].

    The bracket is re-verified on every call (f(-1) > 0 > f(-2)); its failure
    would mean a broken series evaluation, not a property of the root.
    """
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    lo, hi = 1.0, 2.0
    flo, fhi = f_series(-lo), f_series(-hi)
    if not (flo > 0.0 > fhi):
        raise RuntimeError(
            f"bisection bracket lost: f(-1)={flo}, f(-2)={fhi} — series evaluation is broken"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f_series(-mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def x_seq(n_max: int) -> np.ndarray:
    """Majorant coefficients x_0..x_n_max via the convolution recursion."""
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    # c_j = (-1)^j / (j!)^2, the coefficients of f(-t)
    c = np.ones(n_max + 1)
    for j in range(1, n_max + 1):
        c[j] = -c[j - 1] / (j * j)
    x = np.ones(n_max + 1)
    for n in range(1, n_max + 1):
        x[n] = -np.dot(c[1 : n + 1], x[n - 1 :: -1][: n])
    return x


def picard_series_partial_sums(K: float, area: float, n_max: int) -> np.ndarray:
    """Partial sums of the majorant series sum (K*area)^{2n} x_n.

    Convergent iff K*area < sqrt(r0); the caller reads convergence off the
    Cauchy differences and divergence off a magnitude blow-up.
    """
    if K < 0 or area < 0:
        raise ValueError(f"K and area must be nonnegative, got K={K}, area={area}")
    x = x_seq(n_max)
    q = (K * area) ** 2
    powers = q ** np.arange(n_max + 1)
    return np.cumsum(powers * x)
