"""Weak-form transport identity in Fourier variables, and its kernel algebra."""

import numpy as np
import pytest

from sheetlab import (
    FrequencyGrid,
    Grid,
    KernelContext,
    Point,
    ito_terms,
    kernel_a,
    lemma61_scalar_check,
    mean_reversion_field,
    residual_table,
    sample_replicate_increments,
    scalar_function,
    sheet_from_increments,
    solve_conditional_mkv,
    weak_residual,
)
from sheetlab.fokker_planck import _quarter_product_sum


def square_grid(k):
    return Grid(horizon=Point(1.0, 1.0), nt=k, nx=k)


class TestFrequencyGrid:
    def test_promotes_scalars_to_one_dimension(self):
        fg = FrequencyGrid(np.array([1.0, -1.0, 2.0]))
        assert fg.values.shape == (3, 1)
        assert len(fg) == 3
        np.testing.assert_array_equal(list(fg)[1], [-1.0])

    def test_rejects_higher_rank(self):
        with pytest.raises(ValueError):
            FrequencyGrid(np.zeros((2, 2, 2)))


class TestKernels:
    """Pointwise kernel values against hand algebra (n=1, m=2, w=2)."""

    @pytest.fixture()
    def ctx(self):
        return KernelContext(
            alpha=np.array([0.5]),
            beta=np.array([[0.7, 0.3]]),
            alpha_p=np.array([-0.2]),
            beta_p=np.array([[0.4, 0.1]]),
        )

    def test_drift_diffusion_kernel(self, ctx):
        # wa = 1, wq = 1.96 + 0.36
        assert kernel_a(1, 2.0, ctx) == pytest.approx(-1.16 - 1.0j, abs=1e-14)

    def test_single_channel_quadratic_part(self):
        # pure unit diffusion on one channel at w = 2: a1 = -(1/2) * 4 = -2
        ctx = KernelContext(alpha=np.array([0.0]), beta=np.array([[1.0]]))
        assert kernel_a(1, 2.0, ctx) == pytest.approx(-2.0 + 0.0j, abs=1e-14)

    def test_common_noise_kernel_uses_first_channel_only(self, ctx):
        assert kernel_a(2, 2.0, ctx) == pytest.approx(-1.4j, abs=1e-14)

    def test_pair_kernels(self, ctx):
        assert kernel_a(3, 2.0, ctx) == pytest.approx(-1.12 + 0.0j, abs=1e-14)
        assert kernel_a(4, 2.0, ctx) == pytest.approx(-0.24 + 1.404j, abs=1e-14)
        assert kernel_a(5, 2.0, ctx) == pytest.approx(0.7944 - 0.124j, abs=1e-14)

    def test_last_kernel_vanishes_off_the_quarter_order(self, ctx):
        ordered = KernelContext(
            alpha=ctx.alpha, beta=ctx.beta, alpha_p=ctx.alpha_p, beta_p=ctx.beta_p,
            zeta=Point(0.3, 0.8), zeta_p=Point(0.5, 0.2),
        )
        off = KernelContext(
            alpha=ctx.alpha, beta=ctx.beta, alpha_p=ctx.alpha_p, beta_p=ctx.beta_p,
            zeta=Point(0.5, 0.2), zeta_p=Point(0.3, 0.8),
        )
        assert kernel_a(5, 2.0, ordered) == pytest.approx(0.7944 - 0.124j, abs=1e-14)
        assert kernel_a(5, 2.0, off) == 0.0

    def test_pair_kernels_need_primed_coefficients(self):
        bare = KernelContext(alpha=np.array([0.0]), beta=np.array([[1.0, 0.0]]))
        for idx in (3, 4, 5):
            with pytest.raises(ValueError):
                kernel_a(idx, 1.0, bare)

    def test_unknown_index_rejected(self, ctx):
        with pytest.raises(ValueError):
            kernel_a(6, 1.0, ctx)


@pytest.fixture(scope="module")
def ensemble():
    g = square_grid(16)
    co = mean_reversion_field(0.5, (0.7, 0.5))
    return solve_conditional_mkv(co, 1.0, 50, g, seed=0)


class TestWeakResidual:
    def test_zero_frequency_is_exact(self, ensemble):
        assert weak_residual(ensemble, 0.0, Point(1.0, 1.0)) == 0.0

    def test_boundary_points_are_exact(self, ensemble):
        assert abs(weak_residual(ensemble, 1.0, Point(0.0, 1.0))) < 1e-14
        assert abs(weak_residual(ensemble, 2.0, Point(1.0, 0.0))) < 1e-14

    def test_conjugate_symmetry(self, ensemble):
        z = Point(1.0, 1.0)
        for w in (0.7, 1.0, 2.0):
            plus = weak_residual(ensemble, w, z)
            minus = weak_residual(ensemble, -w, z)
            assert minus == pytest.approx(np.conj(plus), abs=1e-12)

    def test_residual_table_matches_single_calls(self, ensemble):
        z = Point(0.5, 1.0)
        freqs = FrequencyGrid(np.array([1.0, -2.0]))
        table = residual_table(ensemble, freqs, z)
        assert len(table) == 2
        for wrow, res in table:
            assert res == pytest.approx(weak_residual(ensemble, wrow, z), abs=1e-12)

    def test_needs_carried_coefficients(self, ensemble):
        from dataclasses import replace

        stripped = replace(ensemble, coeffs=None, y0=None)
        with pytest.raises(ValueError):
            weak_residual(stripped, 1.0, Point(1.0, 1.0))

    def test_frequency_dimension_checked(self, ensemble):
        with pytest.raises(ValueError):
            weak_residual(ensemble, np.array([1.0, 2.0]), Point(1.0, 1.0))


class TestAgainstChangeOfVariables:
    """With the idiosyncratic channel silenced, the five-term sum must equal
    the seven-term pathwise expansion of exp(-i w y) applied particle-wise;
    both residuals then agree to rounding.  A live idiosyncratic channel
    breaks the match by design: those integrals are the finite-size error."""

    def build(self, sigma):
        g = square_grid(8)
        co = mean_reversion_field(0.5, sigma)
        ens = solve_conditional_mkv(co, 1.0, 1, g, seed=5)
        incr = np.concatenate([ens.common_increments[None], ens.idio_increments[0]], axis=0)
        sheet = sheet_from_increments(g, incr, seed=5)
        w = 1.3
        fw = scalar_function(
            lambda y: np.exp(-1j * w * y),
            lambda y: -1j * w * np.exp(-1j * w * y),
            lambda y: -(w**2) * np.exp(-1j * w * y),
            lambda y: 1j * (w**3) * np.exp(-1j * w * y),
            lambda y: (w**4) * np.exp(-1j * w * y),
        )
        wr = weak_residual(ens, w, Point(1.0, 1.0))
        rep = ito_terms(fw, co, ens.particle(0), sheet, Point(1.0, 1.0))
        return abs(wr - (rep.lhs - rep.total))

    def test_matches_with_common_noise_only(self):
        assert self.build((0.7, 0.0)) < 1e-12

    def test_differs_once_idiosyncratic_noise_enters(self):
        assert self.build((0.7, 0.5)) > 0.01


class TestParticleRefinement:
    def test_paired_ensembles_reduce_the_residual(self):
        g = square_grid(16)
        co = mean_reversion_field(0.5, (0.7, 0.5))
        z = Point(1.0, 1.0)
        res_small, res_large = [], []
        for rep in range(6):
            common, idio = sample_replicate_increments(g, 2, 800, seed=7, rep=rep)
            small = solve_conditional_mkv(
                co, 1.0, 100, g, 0, common_increments=common, idio_increments=idio[:100]
            )
            large = solve_conditional_mkv(
                co, 1.0, 800, g, 0, common_increments=common, idio_increments=idio
            )
            res_small.append(abs(weak_residual(small, 1.0, z)))
            res_large.append(abs(weak_residual(large, 1.0, z)))
        assert np.mean(res_small) / np.mean(res_large) > 1.2


class TestProductDifferentiation:
    def test_half_tie_sum_matches_weighted_enumeration(self):
        fk = lambda q: 1.0 + q.t + 0.5 * q.x**2  # noqa: E731
        gk = lambda q: np.cos(q.t) + q.x  # noqa: E731
        z = Point(0.8, 1.3)
        got = _quarter_product_sum(fk, gk, z, 6)
        sub = Grid(horizon=Point(0.8, 1.3), nt=6, nx=6)
        cn = sub.corner_points(6, 6)
        F = np.broadcast_to(np.asarray(fk(cn), float), (6, 6))
        G = np.broadcast_to(np.asarray(gk(cn), float), (6, 6))
        brute = 0.0
        for p in range(6):
            for jj in range(6):
                for it in range(6):
                    for q in range(6):
                        wt = 1.0 if p < it else (0.5 if p == it else 0.0)
                        wx = 1.0 if jj > q else (0.5 if jj == q else 0.0)
                        brute += wt * wx * F[p, jj] * G[it, q]
        brute *= (sub.dt * sub.dx) ** 2
        assert got == pytest.approx(brute, abs=1e-12)

    def test_half_tie_weights_integrate_constants_exactly(self):
        one = lambda q: np.ones(np.shape(q.t))  # noqa: E731
        for k in (4, 9, 16):
            got = _quarter_product_sum(one, one, Point(0.8, 1.3), k)
            assert got == pytest.approx((0.8 * 1.3) ** 2 / 4.0, abs=1e-12)

    def test_identity_for_constant_kernels(self):
        one = lambda q: np.ones(np.shape(q.t))  # noqa: E731
        rep = lemma61_scalar_check(one, one, Point(1.0, 1.0), square_grid(128), 1e-3)
        assert rep.mixed_partial == pytest.approx(1.0, abs=5e-3)
        assert rep.product_rhs == pytest.approx(1.0, abs=1e-12)
        assert rep.residual == pytest.approx(1.000250e-3, abs=1e-8)
        assert rep.residual < 5e-3

    def test_identity_for_separable_kernels(self):
        rep = lemma61_scalar_check(
            lambda q: q.t, lambda q: q.x, Point(1.0, 1.0), square_grid(128), 1e-3
        )
        assert rep.product_rhs == pytest.approx(0.25, abs=5e-3)
        assert rep.residual == pytest.approx(1.430184e-3, abs=1e-8)
        assert rep.residual < 2e-3

    def test_rejects_nonpositive_step(self):
        one = lambda q: np.ones(np.shape(q.t))  # noqa: E731
        with pytest.raises(ValueError):
            lemma61_scalar_check(one, one, Point(1.0, 1.0), square_grid(16), 0.0)
