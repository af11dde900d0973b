"""Random stream addressing and log-domain reductions."""

import numpy as np
import pytest

from reiglab.core import RandomStream, log_mean_exp, standard_normal_draws, substream


class TestRandomStream:
    def test_same_address_reproduces_draws(self):
        a = RandomStream(7).generator().standard_normal(16)
        b = RandomStream(7).generator().standard_normal(16)
        np.testing.assert_array_equal(a, b)

    def test_different_seeds_differ(self):
        a = RandomStream(7).generator().standard_normal(16)
        b = RandomStream(8).generator().standard_normal(16)
        assert not np.array_equal(a, b)

    def test_sibling_substreams_differ(self):
        root = RandomStream(3)
        a = root.substream(0).generator().standard_normal(16)
        b = root.substream(1).generator().standard_normal(16)
        assert not np.array_equal(a, b)

    def test_child_differs_from_parent(self):
        root = RandomStream(3)
        a = root.generator().standard_normal(16)
        b = root.substream(0).generator().standard_normal(16)
        assert not np.array_equal(a, b)

    def test_nested_path_addressing(self):
        direct = RandomStream(5, (1, 2)).generator().standard_normal(8)
        chained = RandomStream(5).substream(1).substream(2).generator().standard_normal(8)
        np.testing.assert_array_equal(direct, chained)

    def test_functional_substream_matches_method(self):
        root = RandomStream(11)
        assert substream(root, 4) == root.substream(4)

    def test_frozen(self):
        root = RandomStream(0)
        with pytest.raises(AttributeError):
            root.master_seed = 1

    def test_integer_index_normalized_to_path(self):
        assert RandomStream(2, 3) == RandomStream(2, (3,))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            RandomStream(-1)
        with pytest.raises(ValueError):
            RandomStream(0, (-1,))
        with pytest.raises(ValueError):
            RandomStream(0).substream(-2)

    def test_standard_normal_draws(self):
        draws = standard_normal_draws(RandomStream(9), 5)
        assert draws.shape == (5,)
        assert standard_normal_draws(RandomStream(9), 0).shape == (0,)
        with pytest.raises(ValueError):
            standard_normal_draws(RandomStream(9), -1)


class TestLogMeanExp:
    def test_matches_direct_computation(self):
        rng = np.random.default_rng(0)
        v = rng.normal(size=50)
        np.testing.assert_allclose(log_mean_exp(v), np.log(np.mean(np.exp(v))), rtol=1e-12)

    def test_large_offsets_do_not_overflow(self):
        v = np.array([1000.0, 1000.5, 999.5])
        expected = 1000.0 + np.log(np.mean(np.exp(v - 1000.0)))
        np.testing.assert_allclose(log_mean_exp(v), expected, rtol=1e-12)

    def test_neg_inf_entries_are_zero_mass(self):
        v = np.array([0.0, -np.inf])
        np.testing.assert_allclose(log_mean_exp(v), np.log(0.5), rtol=1e-12)

    def test_all_neg_inf_slice(self):
        assert log_mean_exp(np.array([-np.inf, -np.inf])) == -np.inf

    def test_axis_reduction(self):
        rng = np.random.default_rng(1)
        v = rng.normal(size=(4, 6))
        out = log_mean_exp(v, axis=1)
        assert out.shape == (4,)
        np.testing.assert_allclose(out, np.log(np.mean(np.exp(v), axis=1)), rtol=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            log_mean_exp(np.array([]))
        with pytest.raises(ValueError):
            log_mean_exp(np.array([0.0, np.nan]))
        with pytest.raises(ValueError):
            log_mean_exp(np.array([0.0, np.inf]))
