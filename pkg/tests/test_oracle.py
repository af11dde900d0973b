"""Closed-form references: channel information, grid searches, Gaussian identities."""

import math

import numpy as np
import pytest

from reiglab import oracle
from reiglab.models import (
    ABTestModel,
    DiagnosticTestModel,
    PreferenceModel,
    ab_design_matrix,
    diagnostic_likelihood_table,
)

# independently derived channel information at the uniform prior, frozen
EIG_A_HALF = 0.2157615543388338
EIG_B_HALF = 0.21574219462857305
AB_EIG_BY_GROUP = {
    0: 1.7650004745232235,
    4: 4.516242477557728,
    10: 3.4543773896576195,
}


def binary_entropy(p):
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def channel_mi(table, r):
    """Entropy-difference route to the mutual information: an independent
    derivation from the divergence-average route the module uses."""
    prior = np.array([r, 1.0 - r])
    marginal = prior @ table
    h_marginal = binary_entropy(marginal[0])
    h_rows = sum(prior[s] * binary_entropy(table[s, 0]) for s in (0, 1))
    return h_marginal - h_rows


class TestBernoulliHelpers:
    def test_grid_stays_inside_open_interval(self):
        grid = oracle.bernoulli_prior_grid(101, 1e-3)
        assert grid.shape == (101,)
        assert grid[0] == 1e-3 and grid[-1] == 1.0 - 1e-3
        assert np.all(np.diff(grid) > 0)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            oracle.bernoulli_prior_grid(1)
        with pytest.raises(ValueError):
            oracle.bernoulli_prior_grid(10, 0.5)

    def test_kl_zero_iff_equal(self):
        assert oracle.bernoulli_kl(0.3, 0.3) == 0.0
        assert oracle.bernoulli_kl(0.3, 0.31) > 0.0

    def test_kl_known_value(self):
        # KL(Ber(1/2) | Ber(1/4)) = log(4/3) / 2 by direct expansion
        np.testing.assert_allclose(
            oracle.bernoulli_kl(0.5, 0.25), 0.5 * math.log(4.0 / 3.0), rtol=1e-14
        )

    def test_kl_vectorized(self):
        qs = np.array([0.1, 0.5, 0.9])
        out = oracle.bernoulli_kl(qs, 0.5)
        assert out.shape == (3,)
        np.testing.assert_allclose(out[0], out[2], rtol=1e-13)


class TestDiagnosticChannel:
    def setup_method(self):
        self.model = DiagnosticTestModel()

    def test_uniform_prior_values_frozen(self):
        np.testing.assert_allclose(
            oracle.discrete_eig_exact(self.model, "A", 0.5), EIG_A_HALF, rtol=1e-12
        )
        np.testing.assert_allclose(
            oracle.discrete_eig_exact(self.model, "B", 0.5), EIG_B_HALF, rtol=1e-12
        )

    def test_symmetric_channel_closed_form(self):
        """The second test flips both states at the same rate, so at the
        uniform prior its information is log 2 minus the flip entropy."""
        fn, fp = self.model.rates("B")
        assert fn == fp
        expected = math.log(2.0) - binary_entropy(fn)
        np.testing.assert_allclose(
            oracle.discrete_eig_exact(self.model, "B", 0.5), expected, rtol=1e-12
        )

    def test_entropy_difference_route_agrees(self):
        for test in ("A", "B"):
            table = diagnostic_likelihood_table(self.model, test)
            for r in (0.1, 0.3, 0.5, 0.7, 0.9):
                np.testing.assert_allclose(
                    oracle.discrete_eig_exact(self.model, test, r),
                    channel_mi(table, r),
                    rtol=1e-11,
                )

    def test_divergences_nonnegative_and_prior_normalized(self):
        d, prior = oracle.diagnostic_divergences(self.model, "A", 0.3)
        assert d.shape == (2,) and prior.shape == (2,)
        assert np.all(d >= 0)
        np.testing.assert_allclose(prior.sum(), 1.0, rtol=1e-15)

    def test_degenerate_priors_carry_no_information(self):
        assert oracle.discrete_eig_exact(self.model, "A", 0.0) == 0.0
        assert oracle.discrete_eig_exact(self.model, "A", 1.0) == 0.0

    def test_symmetric_channel_is_prior_symmetric(self):
        for r in (0.05, 0.2, 0.45):
            np.testing.assert_allclose(
                oracle.discrete_eig_exact(self.model, "B", r),
                oracle.discrete_eig_exact(self.model, "B", 1.0 - r),
                rtol=1e-12,
            )

    def test_prior_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError):
            oracle.diagnostic_divergences(self.model, "A", 1.2)
        with pytest.raises(ValueError):
            oracle.discrete_eig_exact(self.model, "B", -0.1)


class TestAffineRelaxation:
    def setup_method(self):
        self.model = DiagnosticTestModel()

    def test_affine_in_the_averaging_prior(self):
        a = oracle.discrete_iaff_exact(self.model, "A", 0.0, 0.4)
        b = oracle.discrete_iaff_exact(self.model, "A", 1.0, 0.4)
        for r in (0.1, 0.25, 0.5, 0.8):
            np.testing.assert_allclose(
                oracle.discrete_iaff_exact(self.model, "A", r, 0.4),
                (1.0 - r) * a + r * b,
                rtol=1e-12,
            )

    def test_tangent_at_the_nominal_prior(self):
        for test in ("A", "B"):
            for r in (0.2, 0.5, 0.75):
                np.testing.assert_allclose(
                    oracle.discrete_iaff_exact(self.model, test, r, r),
                    oracle.discrete_eig_exact(self.model, test, r),
                    rtol=1e-12,
                )

    def test_majorizes_the_exact_information(self):
        # concavity of information in the prior makes the tangent an
        # upper bound everywhere
        grid = np.linspace(0.02, 0.98, 49)
        for r_p in (0.3, 0.5, 0.7):
            for r_q in grid:
                assert (
                    oracle.discrete_iaff_exact(self.model, "A", r_q, r_p)
                    >= oracle.discrete_eig_exact(self.model, "A", r_q) - 1e-12
                )


class TestRobustGridAndDual:
    def setup_method(self):
        self.model = DiagnosticTestModel()

    def test_grid_and_dual_routes_agree(self):
        for test, r_p, eps in [("A", 0.5, 0.05), ("B", 0.5, 0.02),
                               ("A", 0.3, 0.1), ("B", 0.7, 0.01)]:
            grid_val, _ = oracle.discrete_reig_grid(self.model, test, r_p, eps)
            dual_val = oracle.discrete_reig_dual(self.model, test, r_p, eps).value
            np.testing.assert_allclose(grid_val, dual_val, rtol=1e-7, atol=1e-9)

    def test_zero_radius_recovers_the_nominal_information(self):
        # grid feasibility admits sub-ulp neighbors whose divergence
        # rounds to zero, so exact recovery holds only to ~1e-8
        value, argmin = oracle.discrete_reig_grid(self.model, "A", 0.5, 0.0)
        np.testing.assert_allclose(
            value, oracle.discrete_eig_exact(self.model, "A", 0.5), rtol=1e-7
        )
        np.testing.assert_allclose(argmin, 0.5, atol=1e-6)

    def test_argmin_stays_inside_the_ball(self):
        eps = 0.05
        _, argmin = oracle.discrete_reig_grid(self.model, "A", 0.5, eps)
        assert oracle.bernoulli_kl(argmin, 0.5) <= eps + 1e-9

    def test_monotone_nonincreasing_in_radius(self):
        vals = [oracle.discrete_reig_grid(self.model, "B", 0.5, eps)[0]
                for eps in (0.01, 0.05, 0.1)]
        assert vals[0] >= vals[1] >= vals[2]

    def test_sandwich_ordering(self):
        """Worst-case exact information, worst-case frozen average, and
        the nominal information must come back in that order."""
        for eps in (0.01, 0.02, 0.1):
            nominal = oracle.discrete_eig_exact(self.model, "A", 0.5)
            frozen, _ = oracle.discrete_reig_grid(self.model, "A", 0.5, eps)
            exact = oracle.discrete_true_reig_grid(self.model, "A", 0.5, eps)
            assert exact <= frozen + 1e-9
            assert frozen <= nominal + 1e-9

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            oracle.discrete_reig_grid(self.model, "A", 0.5, -0.01)
        with pytest.raises(ValueError):
            oracle.discrete_true_reig_grid(self.model, "A", 0.5, -0.01)


class TestCrossings:
    def test_single_crossing_near_one_half(self):
        model = DiagnosticTestModel()
        crossings = oracle.eig_difference_crossings(model)
        assert crossings.shape == (1,)
        c = float(crossings[0])
        assert c < 0.5
        assert abs(c - 0.5) < 2e-4
        np.testing.assert_allclose(c, 0.49987503, atol=5e-7)

    def test_information_difference_changes_sign_across_it(self):
        model = DiagnosticTestModel()
        c = float(oracle.eig_difference_crossings(model)[0])

        def diff(r):
            return oracle.discrete_eig_exact(model, "A", r) - oracle.discrete_eig_exact(
                model, "B", r
            )

        assert diff(c - 2e-4) * diff(c + 2e-4) < 0

    def test_coarse_scan_finds_the_same_count(self):
        model = DiagnosticTestModel()
        assert oracle.eig_difference_crossings(model, resolution=2001).shape == (1,)


class TestLinearGaussian:
    def test_unit_scalar_value(self):
        np.testing.assert_allclose(
            oracle.linear_gaussian_eig([[1.0]], [[1.0]]), 0.5 * math.log(2.0), rtol=1e-13
        )

    def test_default_noise_is_identity(self):
        sigma = np.diag([2.0, 0.5])
        x = np.array([[1.0, 1.0], [0.0, 1.0], [2.0, -1.0]])
        np.testing.assert_allclose(
            oracle.linear_gaussian_eig(sigma, x),
            oracle.linear_gaussian_eig(sigma, x, noise=np.eye(3)),
            rtol=1e-13,
        )

    def test_noise_whitening_identity(self):
        sigma = np.diag([2.0, 0.5])
        x = np.array([[1.0, 1.0], [0.0, 1.0]])
        np.testing.assert_allclose(
            oracle.linear_gaussian_eig(sigma, x, noise=4.0 * np.eye(2)),
            oracle.linear_gaussian_eig(sigma, x / 2.0),
            rtol=1e-12,
        )

    def test_prior_scale_and_design_scale_interchange(self):
        sigma = np.array([[1.5, 0.2], [0.2, 0.7]])
        x = np.array([[1.0, -1.0], [0.5, 2.0]])
        c = 3.0
        np.testing.assert_allclose(
            oracle.linear_gaussian_eig(c**2 * sigma, x),
            oracle.linear_gaussian_eig(sigma, c * x),
            rtol=1e-12,
        )

    def test_extra_observation_never_hurts(self):
        sigma = np.diag([1.0, 4.0])
        x = np.array([[1.0, 0.0]])
        x_more = np.vstack([x, [0.3, 0.9]])
        assert oracle.linear_gaussian_eig(sigma, x_more) >= oracle.linear_gaussian_eig(
            sigma, x
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            oracle.linear_gaussian_eig(np.ones((2, 3)), np.eye(2))
        with pytest.raises(ValueError):
            oracle.linear_gaussian_eig([[1.0, 0.5], [0.0, 1.0]], np.eye(2))
        with pytest.raises(ValueError):
            oracle.linear_gaussian_eig([[-1.0]], [[1.0]])
        with pytest.raises(ValueError):
            oracle.linear_gaussian_eig(np.eye(2), np.eye(3))
        with pytest.raises(ValueError):
            oracle.linear_gaussian_eig(np.eye(2), np.eye(2), noise=np.eye(3))

    def test_two_group_designs_match_independent_sum(self):
        """Orthogonal group columns split the log det into two scalar
        terms, one per effect, which pins every design on the grid."""
        model = ABTestModel()
        v1, v2 = model.prior_cov[0, 0], model.prior_cov[1, 1]
        for n_a in range(model.n + 1):
            direct = 0.5 * (math.log1p(v1 * n_a) + math.log1p(v2 * (model.n - n_a)))
            np.testing.assert_allclose(
                oracle.linear_gaussian_eig(model.prior_cov, ab_design_matrix(model, n_a)),
                direct,
                rtol=1e-12,
            )

    def test_two_group_anchors_frozen(self):
        model = ABTestModel()
        for n_a, expected in AB_EIG_BY_GROUP.items():
            np.testing.assert_allclose(
                oracle.linear_gaussian_eig(model.prior_cov, ab_design_matrix(model, n_a)),
                expected,
                rtol=1e-12,
            )


class TestGaussianKl:
    def test_shift_anchors_frozen(self):
        ab = ABTestModel()
        np.testing.assert_allclose(
            oracle.gaussian_kl([4.46, 0.0], [0.0, 0.0], np.diag(ab.prior_cov)),
            0.099458,
            rtol=1e-12,
        )
        np.testing.assert_allclose(oracle.gaussian_kl([0.1], [0.0], [0.05]), 0.1, rtol=1e-12)
        pref = PreferenceModel()
        shifted = PreferenceModel.perturbed()
        np.testing.assert_allclose(
            oracle.gaussian_kl([shifted.prior_mean], [pref.prior_mean], [pref.prior_sd**2]),
            0.067528125,
            rtol=1e-12,
        )

    def test_zero_at_equal_means(self):
        assert oracle.gaussian_kl([1.0, 2.0], [1.0, 2.0], [0.5, 3.0]) == 0.0

    def test_scalar_variance_broadcasts(self):
        np.testing.assert_allclose(
            oracle.gaussian_kl([1.0, 1.0], [0.0, 0.0], 2.0), 0.5, rtol=1e-13
        )

    def test_additive_across_coordinates(self):
        total = oracle.gaussian_kl([1.0, -2.0], [0.0, 0.0], [0.5, 4.0])
        parts = oracle.gaussian_kl([1.0], [0.0], [0.5]) + oracle.gaussian_kl(
            [-2.0], [0.0], [4.0]
        )
        np.testing.assert_allclose(total, parts, rtol=1e-13)

    def test_validation(self):
        with pytest.raises(ValueError):
            oracle.gaussian_kl([1.0, 2.0], [0.0], [1.0])
        with pytest.raises(ValueError):
            oracle.gaussian_kl([1.0], [0.0], [0.0])
