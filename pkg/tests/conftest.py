"""Shared fixtures and toy models for the test suite."""

import math

import numpy as np
import pytest

from reiglab.core import RandomStream

_LOG_2PI = math.log(2.0 * math.pi)


class IndependentToyModel:
    """Outcome carries no information: y ~ N(0,1) regardless of theta.

    The mutual information between parameter and outcome is exactly
    zero, which pins the expected value of every estimator.
    """

    name = "independent_toy"
    theta_dim = 1

    def design_grid(self):
        return [0.0]

    def sample_prior(self, stream: RandomStream, n: int):
        theta = stream.generator().standard_normal((int(n), 1))
        return theta, self.log_prior(theta)

    def log_prior(self, theta):
        t = np.asarray(theta, dtype=float)[..., 0]
        return -0.5 * (t**2 + _LOG_2PI)

    def sample_outcomes(self, theta, design, stream: RandomStream, n: int):
        return stream.generator().standard_normal((int(n), 1))

    def log_likelihood(self, y, theta, design):
        yy = np.asarray(y, dtype=float)[..., 0]
        tt = np.asarray(theta, dtype=float)[..., 0]
        yy, _ = np.broadcast_arrays(yy, tt)
        return -0.5 * (yy**2 + _LOG_2PI)


class EchoOutcomeModel:
    """Deterministic toy: every outcome equals its generating parameter.

    Used to verify pairing structure in shuffle-based estimators; the
    outcome column is a perfect fingerprint of the parameter draw.
    """

    name = "echo_toy"
    theta_dim = 1

    def design_grid(self):
        return [0.0]

    def sample_prior(self, stream: RandomStream, n: int):
        theta = stream.generator().standard_normal((int(n), 1))
        return theta, self.log_prior(theta)

    def log_prior(self, theta):
        t = np.asarray(theta, dtype=float)[..., 0]
        return -0.5 * (t**2 + _LOG_2PI)

    def sample_outcomes(self, theta, design, stream: RandomStream, n: int):
        t = float(np.asarray(theta, dtype=float).reshape(()))
        return np.full((int(n), 1), t)

    def log_likelihood(self, y, theta, design):
        raise NotImplementedError("pairing toy has no density")


@pytest.fixture
def independent_toy():
    return IndependentToyModel()


@pytest.fixture
def echo_toy():
    return EchoOutcomeModel()
