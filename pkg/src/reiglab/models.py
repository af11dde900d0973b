"""Benchmark experiment models.

Four generative models, each exposing the same surface: prior sampling
and log-density, outcome sampling and log-likelihood for a design, score
functions for gradient-based proposal training, and a canonical design
grid.  All densities are returned in nats in the log domain.  Parameter
vectors are ``(n, k)`` arrays and outcomes ``(n, d)`` arrays; the
log-likelihood broadcasts over leading batch axes.

Models are immutable after construction and constructible from a JSON
document whose field names mirror the dataclass fields; defaults
reproduce the reference benchmark settings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy.special import expit, log_ndtr, logit

from reiglab.core import RandomStream

__all__ = [
    "ABTestModel",
    "DiagnosticTestModel",
    "PKModel",
    "PreferenceModel",
    "SamplingError",
    "ab_design_matrix",
    "design_grid",
    "diagnostic_likelihood_table",
    "model_from_config",
    "pk_mean_response",
    "preference_log_likelihood",
    "sample_likelihood",
    "sample_prior",
]

_LOG_2PI = math.log(2.0 * math.pi)


class SamplingError(RuntimeError):
    """A sampler exhausted its rejection budget."""


def _as_batch(arr, dim: int, label: str) -> np.ndarray:
    """Coerce to float array with a trailing axis of size ``dim``."""
    a = np.asarray(arr, dtype=float)
    if a.ndim == 0 or a.shape[-1] != dim:
        if dim == 1:
            a = a[..., np.newaxis]
        else:
            raise ValueError(f"{label} must have trailing dimension {dim}, got shape {a.shape}")
    return a


# ---------------------------------------------------------------------------
# Diagnostic two-test model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiagnosticTestModel:
    """Binary disease state probed by one of two imperfect tests.

    The state is 1 (sick) with probability ``prior_prob``.  Test "A"
    almost never misses a sick patient but flags half of the healthy
    ones; test "B" errs both ways at the same rate.  Outcomes are 1
    (positive) or 0 (negative).
    """

    prior_prob: float = 0.5
    fn_a: float = 1e-16
    fp_a: float = 0.5
    fn_b: float = 0.184
    fp_b: float = 0.184

    name = "diagnostic"
    theta_dim = 1

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= float(v) <= 1.0:
                raise ValueError(f"{f.name} must lie in [0, 1], got {v!r}")

    # -- configuration ------------------------------------------------------

    @classmethod
    def from_config(cls, cfg: dict) -> "DiagnosticTestModel":
        return cls(**{f.name: float(cfg[f.name]) for f in fields(cls) if f.name in cfg})

    def to_config(self) -> dict:
        return {"name": self.name, **{f.name: getattr(self, f.name) for f in fields(self)}}

    # -- model surface ------------------------------------------------------

    def rates(self, test: str) -> tuple[float, float]:
        """(false-negative rate, false-positive rate) of ``test``."""
        if test == "A":
            return self.fn_a, self.fp_a
        if test == "B":
            return self.fn_b, self.fp_b
        raise ValueError(f"unknown test {test!r}; expected 'A' or 'B'")

    def design_grid(self) -> list[str]:
        return ["A", "B"]

    def sample_prior(self, stream: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
        gen = stream.generator()
        theta = (gen.random(int(n)) < self.prior_prob).astype(float)[:, np.newaxis]
        return theta, self.log_prior(theta)

    def log_prior(self, theta) -> np.ndarray:
        t = _as_batch(theta, 1, "theta")[..., 0]
        with np.errstate(divide="ignore"):
            return np.where(t > 0.5, np.log(self.prior_prob), np.log1p(-self.prior_prob))

    def sample_outcomes(self, theta, test: str, stream: RandomStream, n: int) -> np.ndarray:
        table = diagnostic_likelihood_table(self, test)
        t = _as_batch(theta, 1, "theta")[..., 0]
        p_pos = np.where(t > 0.5, table[0, 0], table[1, 0])
        gen = stream.generator()
        return (gen.random(int(n)) < p_pos).astype(float)[:, np.newaxis]

    def log_likelihood(self, y, theta, test: str) -> np.ndarray:
        table = diagnostic_likelihood_table(self, test)
        yy = _as_batch(y, 1, "y")[..., 0]
        tt = _as_batch(theta, 1, "theta")[..., 0]
        yy, tt = np.broadcast_arrays(yy, tt)
        p_pos = np.where(tt > 0.5, table[0, 0], table[1, 0])
        with np.errstate(divide="ignore"):
            return np.where(yy > 0.5, np.log(p_pos), np.log1p(-p_pos))

    def enumerate_support(self, test: str):
        """Exact support: states, prior weights, outcomes, outcome table.

        Returns ``(theta_states (2, 1), prior_probs (2,), y_states (2, 1),
        table (2, 2))`` with state order (sick, healthy) and outcome order
        (positive, negative).
        """
        table = diagnostic_likelihood_table(self, test)
        theta_states = np.array([[1.0], [0.0]])
        prior = np.array([self.prior_prob, 1.0 - self.prior_prob])
        y_states = np.array([[1.0], [0.0]])
        return theta_states, prior, y_states, table


def diagnostic_likelihood_table(model: DiagnosticTestModel, test: str) -> np.ndarray:
    """Outcome table ``[[P(pos|sick), P(neg|sick)], [P(pos|healthy), P(neg|healthy)]]``."""
    fn, fp = model.rates(test)
    return np.array([[1.0 - fn, fn], [fp, 1.0 - fp]])


# ---------------------------------------------------------------------------
# A/B allocation model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ABTestModel:
    """Gaussian two-group response with a group-size design.

    ``n`` participants are split into group A (first ``n_A``) and group B;
    each contributes one observation of its group mean with unit noise.
    The group means carry a bivariate normal prior.  Designs are the
    integer group sizes ``n_A`` in ``0..n``.
    """

    n: int = 10
    prior_mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    prior_cov: np.ndarray = field(default_factory=lambda: np.diag([10.0**2, 1.82**2]))

    name = "ab_test"
    theta_dim = 2

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        mean = np.asarray(self.prior_mean, dtype=float).reshape(2)
        cov = np.asarray(self.prior_cov, dtype=float)
        if cov.shape == (2,):
            cov = np.diag(cov)
        if cov.shape != (2, 2):
            raise ValueError(f"prior_cov must be 2x2 or a length-2 diagonal, got shape {cov.shape}")
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if np.any(np.linalg.eigvalsh(cov) <= 0):
            raise ValueError("prior_cov must be positive definite")
        object.__setattr__(self, "prior_mean", mean)
        object.__setattr__(self, "prior_cov", cov)

    @classmethod
    def from_config(cls, cfg: dict) -> "ABTestModel":
        kw = {}
        for name in ("n", "prior_mean", "prior_cov"):
            if name in cfg:
                kw[name] = cfg[name]
        return cls(**kw)

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "prior_mean": self.prior_mean.tolist(),
            "prior_cov": self.prior_cov.tolist(),
        }

    @classmethod
    def perturbed(cls) -> "ABTestModel":
        """Benchmark variant with the group-A mean shifted to 4.46."""
        return cls(prior_mean=np.array([4.46, 0.0]))

    def design_grid(self) -> list[int]:
        return list(range(self.n + 1))

    def sample_prior(self, stream: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
        gen = stream.generator()
        chol = np.linalg.cholesky(self.prior_cov)
        z = gen.standard_normal((int(n), 2))
        theta = self.prior_mean + z @ chol.T
        return theta, self.log_prior(theta)

    def log_prior(self, theta) -> np.ndarray:
        t = _as_batch(theta, 2, "theta")
        prec = np.linalg.inv(self.prior_cov)
        delta = t - self.prior_mean
        quad = np.einsum("...i,ij,...j->...", delta, prec, delta)
        _, logdet = np.linalg.slogdet(self.prior_cov)
        return -0.5 * (quad + logdet + 2 * _LOG_2PI)

    def grad_log_prior(self, theta) -> np.ndarray:
        t = _as_batch(theta, 2, "theta")
        prec = np.linalg.inv(self.prior_cov)
        return -(t - self.prior_mean) @ prec.T

    def sample_outcomes(self, theta, n_a: int, stream: RandomStream, n: int) -> np.ndarray:
        x = ab_design_matrix(self, n_a)
        t = np.asarray(theta, dtype=float).reshape(2)
        gen = stream.generator()
        return x @ t + gen.standard_normal((int(n), self.n))

    def log_likelihood(self, y, theta, n_a: int) -> np.ndarray:
        x = ab_design_matrix(self, n_a)
        yy = _as_batch(y, self.n, "y")
        tt = _as_batch(theta, 2, "theta")
        resid = yy - tt @ x.T
        return -0.5 * (np.sum(resid**2, axis=-1) + self.n * _LOG_2PI)

    def grad_log_likelihood_theta(self, y, theta, n_a: int) -> np.ndarray:
        x = ab_design_matrix(self, n_a)
        yy = _as_batch(y, self.n, "y")
        tt = _as_batch(theta, 2, "theta")
        resid = yy - tt @ x.T
        return resid @ x

    # -- conjugate closed forms (shared with the exact-posterior proposal) --

    def posterior_moments(self, n_a: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(cov, gain, offset)`` with posterior mean ``gain @ y + offset``."""
        x = ab_design_matrix(self, n_a)
        prec = np.linalg.inv(self.prior_cov) + x.T @ x
        cov = np.linalg.inv(prec)
        gain = cov @ x.T
        offset = cov @ np.linalg.solve(self.prior_cov, self.prior_mean)
        return cov, gain, offset

    def log_marginal(self, y, n_a: int) -> np.ndarray:
        """Exact log-density of the outcome vector under the prior predictive."""
        x = ab_design_matrix(self, n_a)
        yy = _as_batch(y, self.n, "y")
        cov = np.eye(self.n) + x @ self.prior_cov @ x.T
        delta = yy - x @ self.prior_mean
        sol = np.linalg.solve(cov, delta[..., np.newaxis])[..., 0]
        _, logdet = np.linalg.slogdet(cov)
        return -0.5 * (np.sum(delta * sol, axis=-1) + logdet + self.n * _LOG_2PI)


def ab_design_matrix(model: ABTestModel, n_a: int) -> np.ndarray:
    """Allocation matrix: first ``n_a`` rows (1, 0), the rest (0, 1)."""
    if not isinstance(n_a, (int, np.integer)) or not 0 <= int(n_a) <= model.n:
        raise ValueError(f"n_a must be an integer in 0..{model.n}, got {n_a!r}")
    x = np.zeros((model.n, 2))
    x[: int(n_a), 0] = 1.0
    x[int(n_a) :, 1] = 1.0
    return x


# ---------------------------------------------------------------------------
# Preference elicitation model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PreferenceModel:
    """Scalar valuation probed by a censored sigmoid response.

    A latent valuation ``theta`` has a wide normal prior.  Offering the
    amount ``xi`` produces a latent utility ``eta ~ N(xi - theta,
    1 + xi^2)`` reported as ``y = sigmoid(eta)`` censored into
    ``[censor, 1 - censor]``; the censored endpoints carry point mass.
    """

    prior_mean: float = 0.0
    prior_sd: float = 20.0
    censor: float = 0.005

    name = "preference"
    theta_dim = 1

    def __post_init__(self):
        if self.prior_sd <= 0:
            raise ValueError(f"prior_sd must be positive, got {self.prior_sd!r}")
        if not 0.0 < self.censor < 0.5:
            raise ValueError(f"censor must lie in (0, 0.5), got {self.censor!r}")

    @classmethod
    def from_config(cls, cfg: dict) -> "PreferenceModel":
        kw = {k: float(cfg[k]) for k in ("prior_mean", "prior_sd", "censor") if k in cfg}
        return cls(**kw)

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "prior_mean": self.prior_mean,
            "prior_sd": self.prior_sd,
            "censor": self.censor,
        }

    @classmethod
    def perturbed(cls) -> "PreferenceModel":
        """Benchmark variant with the prior mean shifted to -7.35."""
        return cls(prior_mean=-7.35)

    def design_grid(self) -> list[float]:
        return [float(x) for x in np.linspace(-80.0, 80.0, 101)]

    def sample_prior(self, stream: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
        gen = stream.generator()
        theta = self.prior_mean + self.prior_sd * gen.standard_normal((int(n), 1))
        return theta, self.log_prior(theta)

    def log_prior(self, theta) -> np.ndarray:
        t = _as_batch(theta, 1, "theta")[..., 0]
        z = (t - self.prior_mean) / self.prior_sd
        return -0.5 * (z**2 + _LOG_2PI) - math.log(self.prior_sd)

    def grad_log_prior(self, theta) -> np.ndarray:
        t = _as_batch(theta, 1, "theta")
        return -(t - self.prior_mean) / self.prior_sd**2

    def sample_outcomes(self, theta, xi: float, stream: RandomStream, n: int) -> np.ndarray:
        t = np.asarray(theta, dtype=float).reshape(())
        sd = math.sqrt(1.0 + float(xi) ** 2)
        gen = stream.generator()
        eta = (float(xi) - t) + sd * gen.standard_normal(int(n))
        y = expit(eta)
        y = np.clip(y, self.censor, 1.0 - self.censor)
        return y[:, np.newaxis]

    def log_likelihood(self, y, theta, xi: float) -> np.ndarray:
        return preference_log_likelihood(self, y, theta, xi)

    def grad_log_likelihood_theta(self, y, theta, xi: float) -> np.ndarray:
        gamma = self.censor
        sd = math.sqrt(1.0 + float(xi) ** 2)
        yy = _as_batch(y, 1, "y")[..., 0]
        tt = _as_batch(theta, 1, "theta")[..., 0]
        yy, tt = np.broadcast_arrays(yy, tt)
        mean = float(xi) - tt

        y_int = np.clip(yy, gamma, 1.0 - gamma)
        grad_interior = -(logit(y_int) - mean) / sd**2

        a = (logit(gamma) - mean) / sd
        log_phi_a = -0.5 * (a**2 + _LOG_2PI)
        grad_low = np.exp(log_phi_a - log_ndtr(a)) / sd

        b = (logit(1.0 - gamma) - mean) / sd
        log_phi_b = -0.5 * (b**2 + _LOG_2PI)
        grad_high = -np.exp(log_phi_b - log_ndtr(-b)) / sd

        out = np.where(yy <= gamma, grad_low, np.where(yy >= 1.0 - gamma, grad_high, grad_interior))
        return out[..., np.newaxis]


def preference_log_likelihood(model: PreferenceModel, y, theta, xi: float) -> np.ndarray:
    """Log-density of the censored sigmoid response.

    Interior outcomes carry the Gaussian density of ``logit(y)`` under
    ``N(xi - theta, 1 + xi^2)`` times the change-of-variables factor
    ``1 / (y (1 - y))``; outcomes at the censoring thresholds carry the
    matching Gaussian tail masses.
    """
    gamma = model.censor
    sd = math.sqrt(1.0 + float(xi) ** 2)
    yy = _as_batch(y, 1, "y")[..., 0]
    tt = _as_batch(theta, 1, "theta")[..., 0]
    yy, tt = np.broadcast_arrays(yy, tt)
    if np.any((yy < gamma) | (yy > 1.0 - gamma)):
        raise ValueError("outcome outside the censored interval")
    mean = float(xi) - tt

    y_int = np.clip(yy, gamma, 1.0 - gamma)
    z = (logit(y_int) - mean) / sd
    ll_interior = -0.5 * (z**2 + _LOG_2PI) - math.log(sd) - np.log(y_int * (1.0 - y_int))

    ll_low = log_ndtr((logit(gamma) - mean) / sd)
    ll_high = log_ndtr(-(logit(1.0 - gamma) - mean) / sd)

    return np.where(yy <= gamma, ll_low, np.where(yy >= 1.0 - gamma, ll_high, ll_interior))


# ---------------------------------------------------------------------------
# Pharmacokinetic model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PKModel:
    """One-compartment drug concentration probed at a sampling time.

    The parameter vector is the componentwise log of (absorption rate
    ``k_a``, elimination rate ``k_e``, volume ``V``) with an independent
    normal prior, truncated by rejection to ``k_a > k_e``.  Observing at
    time ``t`` yields the compartment mean under multiplicative and
    additive Gaussian noise.  Designs are sampling times in hours.
    """

    prior_location: np.ndarray = field(
        default_factory=lambda: np.array([0.0, math.log(0.1), math.log(20.0)])
    )
    prior_var: np.ndarray = field(default_factory=lambda: np.full(3, 0.05))
    dose: float = 400.0
    mult_noise_var: float = 0.01
    add_noise_var: float = 0.1
    retry_cap: int = 1_000_000

    name = "pk"
    theta_dim = 3

    def __post_init__(self):
        loc = np.asarray(self.prior_location, dtype=float).reshape(3)
        var = np.asarray(self.prior_var, dtype=float)
        if var.ndim == 0:
            var = np.full(3, float(var))
        var = var.reshape(3)
        if np.any(var <= 0):
            raise ValueError("prior_var entries must be positive")
        if self.dose <= 0 or self.mult_noise_var < 0 or self.add_noise_var <= 0:
            raise ValueError("dose and noise variances must be positive")
        object.__setattr__(self, "prior_location", loc)
        object.__setattr__(self, "prior_var", var)
        object.__setattr__(self, "retry_cap", int(self.retry_cap))

    @classmethod
    def from_config(cls, cfg: dict) -> "PKModel":
        kw = {}
        for name in ("prior_location", "prior_var", "dose", "mult_noise_var", "add_noise_var", "retry_cap"):
            if name in cfg:
                kw[name] = cfg[name]
        return cls(**kw)

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "prior_location": self.prior_location.tolist(),
            "prior_var": self.prior_var.tolist(),
            "dose": self.dose,
            "mult_noise_var": self.mult_noise_var,
            "add_noise_var": self.add_noise_var,
            "retry_cap": self.retry_cap,
        }

    @classmethod
    def perturbed(cls) -> "PKModel":
        """Benchmark variant with the log absorption-rate location at 0.1."""
        return cls(prior_location=np.array([0.1, math.log(0.1), math.log(20.0)]))

    def design_grid(self) -> list[float]:
        return [float(t) for t in np.geomspace(0.05, 24.0, 50)]

    def constraint_ok(self, theta) -> np.ndarray:
        """Rejection constraint on log-parameters: absorption exceeds elimination."""
        t = _as_batch(theta, 3, "theta")
        return t[..., 0] > t[..., 1]

    def sample_prior(self, stream: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
        gen = stream.generator()
        sd = np.sqrt(self.prior_var)
        out = np.empty((int(n), 3))
        filled = 0
        drawn = 0
        while filled < int(n):
            batch = max(int(n) - filled, 64)
            z = gen.standard_normal((batch, 3))
            cand = self.prior_location + sd * z
            drawn += batch
            keep = cand[self.constraint_ok(cand)]
            take = min(len(keep), int(n) - filled)
            out[filled : filled + take] = keep[:take]
            filled += take
            if drawn > self.retry_cap:
                raise SamplingError(
                    f"prior rejection sampler exceeded {self.retry_cap} draws "
                    f"({filled}/{n} accepted)"
                )
        return out, self.log_prior(out)

    def log_prior(self, theta) -> np.ndarray:
        """Normal log-density of the log-parameters.

        The rejection constraint removes only ~1e-13 of the prior mass,
        so the truncation constant is deliberately ignored; proposal
        densities follow the same convention.
        """
        t = _as_batch(theta, 3, "theta")
        z2 = (t - self.prior_location) ** 2 / self.prior_var
        return -0.5 * (np.sum(z2, axis=-1) + 3 * _LOG_2PI + np.sum(np.log(self.prior_var)))

    def grad_log_prior(self, theta) -> np.ndarray:
        t = _as_batch(theta, 3, "theta")
        return -(t - self.prior_location) / self.prior_var

    def sample_outcomes(self, theta, t_obs: float, stream: RandomStream, n: int) -> np.ndarray:
        mu = float(pk_mean_response(np.exp(np.asarray(theta, dtype=float).reshape(3)), t_obs, dose=self.dose))
        gen = stream.generator()
        eps1 = gen.standard_normal(int(n)) * math.sqrt(self.mult_noise_var)
        eps2 = gen.standard_normal(int(n)) * math.sqrt(self.add_noise_var)
        y = mu * (1.0 + eps1) + eps2
        return y[:, np.newaxis]

    def _mean_and_var(self, theta, t_obs: float) -> tuple[np.ndarray, np.ndarray]:
        t = _as_batch(theta, 3, "theta")
        phys = np.exp(t)
        mu = pk_mean_response(phys, t_obs, dose=self.dose, validate=False)
        var = self.mult_noise_var * mu**2 + self.add_noise_var
        return mu, var

    def log_likelihood(self, y, theta, t_obs: float) -> np.ndarray:
        yy = _as_batch(y, 1, "y")[..., 0]
        mu, var = self._mean_and_var(theta, t_obs)
        yy, mu = np.broadcast_arrays(yy, mu)
        return -0.5 * ((yy - mu) ** 2 / var + np.log(var) + _LOG_2PI)

    def grad_log_likelihood_theta(self, y, theta, t_obs: float) -> np.ndarray:
        yy = _as_batch(y, 1, "y")[..., 0]
        t = _as_batch(theta, 3, "theta")
        phys = np.exp(t)
        ka, ke, vol = phys[..., 0], phys[..., 1], phys[..., 2]
        tt = float(t_obs)

        ee, ea = np.exp(-ke * tt), np.exp(-ka * tt)
        diff = ee - ea
        denom = ka - ke
        mu = (self.dose / vol) * (ka / denom) * diff
        var = self.mult_noise_var * mu**2 + self.add_noise_var

        # dmu/d(physical parameter), then chain through the exp link
        dmu_dka = (self.dose / vol) * (-ke / denom**2 * diff + (ka / denom) * tt * ea)
        dmu_dke = (self.dose / vol) * (ka / denom**2 * diff - (ka / denom) * tt * ee)
        dmu_dvol = -mu / vol
        dmu = np.stack([dmu_dka * ka, dmu_dke * ke, dmu_dvol * vol], axis=-1)

        resid = yy - mu
        dll_dmu = resid / var + (resid**2 / (2 * var**2) - 0.5 / var) * (2 * self.mult_noise_var * mu)
        return dll_dmu[..., np.newaxis] * dmu


def pk_mean_response(theta, t_obs: float, dose: float = 400.0, validate: bool = True) -> np.ndarray:
    """Mean concentration of a one-compartment model with first-order uptake.

    ``theta`` holds physical values ``(k_a, k_e, V)`` in its trailing axis:
    ``(dose / V) (k_a / (k_a - k_e)) (exp(-k_e t) - exp(-k_a t))``.
    """
    th = _as_batch(theta, 3, "theta")
    ka, ke, vol = th[..., 0], th[..., 1], th[..., 2]
    if validate and np.any(ka <= ke):
        raise ValueError("pk_mean_response requires k_a > k_e")
    if validate and (np.any(ke <= 0) or np.any(vol <= 0)):
        raise ValueError("pk_mean_response requires positive rates and volume")
    tt = float(t_obs)
    if tt < 0:
        raise ValueError(f"observation time must be nonnegative, got {t_obs!r}")
    return (dose / vol) * (ka / (ka - ke)) * (np.exp(-ke * tt) - np.exp(-ka * tt))


# ---------------------------------------------------------------------------
# Registry and functional surface
# ---------------------------------------------------------------------------


MODEL_REGISTRY = {
    "diagnostic": DiagnosticTestModel,
    "ab_test": ABTestModel,
    "preference": PreferenceModel,
    "pk": PKModel,
}


def model_from_config(cfg: dict):
    """Build a model from a JSON-style document with a ``name`` field."""
    if "name" not in cfg:
        raise ValueError("model configuration requires a 'name' field")
    name = cfg["name"]
    if name not in MODEL_REGISTRY:
        raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODEL_REGISTRY)}")
    return MODEL_REGISTRY[name].from_config(cfg)


def sample_prior(model, stream: RandomStream, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` prior parameter vectors and their log-densities."""
    if int(n) < 1:
        raise ValueError(f"sample count must be positive, got {n!r}")
    return model.sample_prior(stream, int(n))


def sample_likelihood(model, theta, design, stream: RandomStream, n: int) -> np.ndarray:
    """Draw ``n`` outcomes for one parameter vector under ``design``."""
    if int(n) < 1:
        raise ValueError(f"sample count must be positive, got {n!r}")
    return model.sample_outcomes(theta, design, stream, int(n))


def design_grid(model) -> list:
    """Canonical candidate designs of ``model``."""
    return model.design_grid()
