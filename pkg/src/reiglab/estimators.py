"""Sampled information-gain estimators.

The workhorse quantity is the vector of per-parameter divergence
estimates ``d_i ~ KL(p(y | theta_i, design) || p(y | design))``: the
outer parameter draws are split into ``n1`` values with ``n2`` outcome
draws each, and each outcome's marginal log-density is estimated from
``m`` proposal draws, either as a pure importance-weighted mixture
("vnmc" scheme) or with the generating parameter appended to the mixture
("ace" scheme, a lower bound in expectation).  Averaging ``d`` gives the
EIG estimate; the robust module consumes ``d`` unaveraged.

The discrete diagnostic model bypasses sampling entirely: its two-state
support is enumerated and the same log-domain machinery runs on exact
weights.

A small scorer network trained on the difference-of-expectations bound
("mine") provides a likelihood-free lower-bound estimator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from reiglab.core import RandomStream, log_mean_exp
from reiglab.proposals import PriorProposal

__all__ = [
    "DivergenceSamples",
    "EstimatorConfig",
    "EstimatorError",
    "ScorerNetwork",
    "ace_eig",
    "divergence_samples",
    "exact_divergences",
    "kl_per_theta",
    "mine_divergences",
    "mine_eig",
    "mine_objective_and_grads",
    "nmc_eig",
    "train_scorer",
    "vnmc_eig",
]

LOG_MARGINAL_CLIP = 1e8

_SCHEMES = ("vnmc", "ace")


class EstimatorError(RuntimeError):
    """An estimator produced a non-finite value; carries diagnostics."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class EstimatorConfig:
    """Sample-size and seeding policy for one estimation run.

    ``n1`` outer parameter draws, ``n2`` outcome draws per parameter,
    ``m`` proposal draws per outcome, all rooted at ``seed``.
    """

    n1: int = 100
    n2: int = 10
    m: int = 30
    seed: int = 0

    def __post_init__(self):
        for name in ("n1", "n2", "m"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")


@dataclass
class DivergenceSamples:
    """Per-parameter divergence estimates plus diagnostics.

    ``d`` has one entry per outer parameter draw (or per enumerated
    state when ``weights`` is set); ``zs`` keeps the per-(parameter,
    outcome) terms whose row means produce ``d``.  ``z_weights`` is the
    exact joint weight of each flattened ``zs`` entry when enumeration
    was used.
    """

    d: np.ndarray
    zs: np.ndarray
    weights: np.ndarray | None = None
    z_weights: np.ndarray | None = None
    clip_count: int = 0
    exact: bool = False

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=float)
        if self.d.ndim != 1 or self.d.size == 0:
            raise ValueError("d must be a nonempty vector")
        if not np.all(np.isfinite(self.d)):
            raise EstimatorError(
                "non-finite divergence estimates",
                {"bad_indices": np.flatnonzero(~np.isfinite(self.d)).tolist()},
            )

    def eig(self) -> float:
        """Plain estimate: the (weighted) mean of ``d``."""
        if self.weights is not None:
            return float(np.dot(self.weights, self.d))
        return float(np.mean(self.d))

    def joint_values(self) -> tuple[np.ndarray, np.ndarray | None]:
        """Flattened per-joint-sample terms and their weights (if exact)."""
        return self.zs.reshape(-1), self.z_weights


def _inner_log_marginal(model, y, design, proposal, stream: RandomStream, m: int,
                        scheme: str, theta_self=None) -> tuple[np.ndarray, int]:
    """Estimate log p(y | design) for each row of ``y``.

    Uses ``m`` proposal draws per outcome; the "ace" scheme appends the
    generating parameter ``theta_self`` as an extra mixture component.
    Estimates are clipped to ``[-LOG_MARGINAL_CLIP, LOG_MARGINAL_CLIP]``
    and the clip count is returned alongside.
    """
    theta_q, log_q = proposal.sample(y, design, stream, m)          # (B, m, k), (B, m)
    log_p = model.log_prior(theta_q)                                # (B, m)
    log_lik = model.log_likelihood(y[:, np.newaxis, :], theta_q, design)
    log_w = log_p + log_lik - log_q                                 # (B, m)

    if scheme == "ace":
        t_self = np.asarray(theta_self, dtype=float).reshape(1, -1)
        w_self = (
            model.log_prior(t_self)
            + model.log_likelihood(y, np.broadcast_to(t_self, (y.shape[0], t_self.shape[-1])), design)
            - proposal.logpdf(t_self[np.newaxis, :, :], y, design)[:, 0]
        )
        log_w = np.concatenate([w_self[:, np.newaxis], log_w], axis=1)

    log_marg = log_mean_exp(log_w, axis=1)
    clipped = np.clip(log_marg, -LOG_MARGINAL_CLIP, LOG_MARGINAL_CLIP)
    n_clipped = int(np.sum(clipped != log_marg))
    return clipped, n_clipped


def kl_per_theta(model, theta, design, proposal, cfg: EstimatorConfig,
                 scheme: str = "vnmc", stream: RandomStream | None = None) -> float:
    """Divergence estimate for a single parameter vector.

    Draws ``cfg.n2`` outcomes from the likelihood at ``theta`` and
    averages ``log p(y | theta) - log_marginal(y)`` over them.
    """
    z, _ = _kl_terms(model, theta, design, proposal, cfg, scheme,
                     stream if stream is not None else RandomStream(cfg.seed))
    return float(np.mean(z))


def _kl_terms(model, theta, design, proposal, cfg, scheme, stream):
    if scheme not in _SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {_SCHEMES}")
    y = model.sample_outcomes(theta, design, stream.substream(0), cfg.n2)   # (n2, dy)
    t = np.asarray(theta, dtype=float).reshape(1, -1)
    log_lik_self = model.log_likelihood(y, np.broadcast_to(t, (y.shape[0], t.shape[-1])), design)
    log_marg, n_clip = _inner_log_marginal(
        model, y, design, proposal, stream.substream(1), cfg.m, scheme, theta_self=theta
    )
    z = log_lik_self - log_marg
    if not np.all(np.isfinite(z)):
        raise EstimatorError(
            "non-finite inner estimate",
            {"design": design, "bad_outcomes": np.flatnonzero(~np.isfinite(z)).tolist()},
        )
    return z, n_clip


def exact_divergences(model, design) -> DivergenceSamples:
    """Enumerate a discrete model's support instead of sampling.

    The marginal is the prior-weighted mixture over enumerated states
    computed with the same log-domain reduction the sampled path uses,
    and the per-state divergence is the exact expectation over outcomes.
    """
    theta_states, prior, y_states, _ = model.enumerate_support(design)
    n_states = theta_states.shape[0]
    n_out = y_states.shape[0]

    log_lik = model.log_likelihood(
        y_states[np.newaxis, :, :], theta_states[:, np.newaxis, :], design
    )                                                               # (state, outcome)
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior)
    # log p(y): prior-weighted mixture over states, in the log domain
    log_marg = log_mean_exp(log_prior[:, np.newaxis] + log_lik + np.log(n_states), axis=0)

    zs = log_lik - log_marg[np.newaxis, :]                          # (state, outcome)
    cond = np.exp(log_lik)
    d = np.sum(np.where(cond > 0, cond * zs, 0.0), axis=1)

    joint_w = (prior[:, np.newaxis] * cond).reshape(-1)
    return DivergenceSamples(
        d=d, zs=zs, weights=prior, z_weights=joint_w, clip_count=0, exact=True
    )


def divergence_samples(model, design, cfg: EstimatorConfig, proposal=None,
                       scheme: str = "vnmc") -> DivergenceSamples:
    """Divergence estimates for ``cfg.n1`` prior draws.

    With ``proposal=None`` the prior itself proposes, which reduces the
    marginal estimate to the plain ``m``-sample prior mixture.  Models
    exposing exact enumeration short-circuit to :func:`exact_divergences`.
    Per-parameter work runs on dedicated substreams, so results do not
    depend on how the loop is scheduled.
    """
    if hasattr(model, "enumerate_support"):
        return exact_divergences(model, design)
    if proposal is None:
        proposal = PriorProposal(model)
    root = RandomStream(cfg.seed)
    thetas, _ = model.sample_prior(root.substream(0), cfg.n1)
    zs = np.empty((cfg.n1, cfg.n2))
    clip_count = 0
    for i in range(cfg.n1):
        z, n_clip = _kl_terms(
            model, thetas[i], design, proposal, cfg, scheme, root.substream(1).substream(i)
        )
        zs[i] = z
        clip_count += n_clip
    return DivergenceSamples(d=zs.mean(axis=1), zs=zs, clip_count=clip_count)


def nmc_eig(model, design, cfg: EstimatorConfig, proposal=None) -> float:
    """Nested Monte Carlo EIG: prior-mixture marginal unless a proposal is given."""
    return divergence_samples(model, design, cfg, proposal=proposal, scheme="vnmc").eig()


def vnmc_eig(model, design, proposal, cfg: EstimatorConfig) -> float:
    """Variational NMC EIG: importance-weighted marginal (upper bound in expectation)."""
    return divergence_samples(model, design, cfg, proposal=proposal, scheme="vnmc").eig()


def ace_eig(model, design, proposal, cfg: EstimatorConfig) -> float:
    """Contrastive EIG: marginal mixture includes the generating parameter
    (lower bound in expectation)."""
    return divergence_samples(model, design, cfg, proposal=proposal, scheme="ace").eig()


# ---------------------------------------------------------------------------
# Scorer-network (MINE-style) estimator
# ---------------------------------------------------------------------------


@dataclass
class ScorerNetwork:
    """Two-hidden-layer tanh network scoring (parameter, outcome) pairs.

    Inputs are standardized by the frozen ``shift``/``scale`` before the
    first layer.  ``forward`` returns one scalar score per row.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: float
    shift: np.ndarray
    scale: np.ndarray

    PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")

    @classmethod
    def initialized(cls, input_dim: int, stream: RandomStream, hidden: int = 64,
                    shift=None, scale=None) -> "ScorerNetwork":
        gen = stream.generator()
        w1 = gen.standard_normal((input_dim, hidden)) / np.sqrt(input_dim)
        w2 = gen.standard_normal((hidden, hidden)) / np.sqrt(hidden)
        w3 = gen.standard_normal(hidden) / np.sqrt(hidden)
        return cls(
            w1=w1, b1=np.zeros(hidden), w2=w2, b2=np.zeros(hidden), w3=w3, b3=0.0,
            shift=np.zeros(input_dim) if shift is None else np.asarray(shift, dtype=float),
            scale=np.ones(input_dim) if scale is None else np.asarray(scale, dtype=float),
        )

    @classmethod
    def zero(cls, input_dim: int, hidden: int = 64) -> "ScorerNetwork":
        """All-zero parameters; scores every pair 0."""
        return cls(
            w1=np.zeros((input_dim, hidden)), b1=np.zeros(hidden),
            w2=np.zeros((hidden, hidden)), b2=np.zeros(hidden),
            w3=np.zeros(hidden), b3=0.0,
            shift=np.zeros(input_dim), scale=np.ones(input_dim),
        )

    def forward(self, x: np.ndarray) -> np.ndarray:
        xs = (np.asarray(x, dtype=float) - self.shift) / self.scale
        h1 = np.tanh(xs @ self.w1 + self.b1)
        h2 = np.tanh(h1 @ self.w2 + self.b2)
        return h2 @ self.w3 + self.b3

    def _forward_cache(self, x):
        xs = (x - self.shift) / self.scale
        h1 = np.tanh(xs @ self.w1 + self.b1)
        h2 = np.tanh(h1 @ self.w2 + self.b2)
        return xs, h1, h2, h2 @ self.w3 + self.b3

    def _backward(self, cache, dt: np.ndarray) -> dict:
        xs, h1, h2, _ = cache
        dw3 = h2.T @ dt
        db3 = float(np.sum(dt))
        dh2 = dt[:, np.newaxis] * self.w3
        da2 = dh2 * (1.0 - h2**2)
        dw2 = h1.T @ da2
        db2 = da2.sum(axis=0)
        dh1 = da2 @ self.w2.T
        da1 = dh1 * (1.0 - h1**2)
        dw1 = xs.T @ da1
        db1 = da1.sum(axis=0)
        return {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2, "w3": dw3, "b3": db3}

    def params(self) -> dict:
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def with_params(self, params: dict) -> "ScorerNetwork":
        return replace(self, **{k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in params.items()})


def mine_objective_and_grads(net: ScorerNetwork, x_joint: np.ndarray,
                             x_shuffled: np.ndarray) -> tuple[float, dict]:
    """Difference-of-expectations bound and its parameter gradients.

    ``mean(T(joint)) - mean(exp(T(shuffled) - 1))``; for the optimal
    scorer the bound equals the mutual information, and for any scorer
    its expectation is a lower bound.
    """
    n = x_joint.shape[0]
    cache_j = net._forward_cache(np.asarray(x_joint, dtype=float))
    cache_s = net._forward_cache(np.asarray(x_shuffled, dtype=float))
    t_joint, t_shuf = cache_j[3], cache_s[3]
    exp_term = np.exp(t_shuf - 1.0)
    value = float(np.mean(t_joint) - np.mean(exp_term))
    grads_j = net._backward(cache_j, np.full(n, 1.0 / n))
    grads_s = net._backward(cache_s, -exp_term / n)
    grads = {k: grads_j[k] + grads_s[k] for k in grads_j}
    return value, grads


def _mine_pairs(model, design, cfg: EstimatorConfig, root: RandomStream):
    """Joint (theta, y) pairs in the standard n1 x n2 layout, flattened."""
    thetas, _ = model.sample_prior(root.substream(0), cfg.n1)
    dy = None
    ys = []
    for i in range(cfg.n1):
        y = model.sample_outcomes(thetas[i], design, root.substream(1).substream(i), cfg.n2)
        dy = y.shape[-1]
        ys.append(y)
    y_flat = np.concatenate(ys, axis=0)
    theta_flat = np.repeat(thetas, cfg.n2, axis=0)
    return theta_flat, y_flat.reshape(cfg.n1 * cfg.n2, dy)


def mine_divergences(model, design, net: ScorerNetwork, cfg: EstimatorConfig) -> DivergenceSamples:
    """Per-parameter contributions to the scorer bound.

    Marginal pairs are formed by cyclically shifting the outcome batch
    one whole parameter block, so no outcome is ever scored against the
    parameter that generated it regardless of the N2 grouping.
    """
    if cfg.n1 < 2:
        raise ValueError("scorer estimation needs at least two parameter draws")
    theta_flat, y_flat = _mine_pairs(model, design, cfg, RandomStream(cfg.seed))
    y_marg = np.roll(y_flat.reshape(cfg.n1, cfg.n2, -1), 1, axis=0).reshape(y_flat.shape)
    x_joint = np.concatenate([theta_flat, y_flat], axis=1)
    x_shuf = np.concatenate([theta_flat, y_marg], axis=1)
    terms = net.forward(x_joint) - np.exp(net.forward(x_shuf) - 1.0)
    zs = terms.reshape(cfg.n1, cfg.n2)
    return DivergenceSamples(d=zs.mean(axis=1), zs=zs)


def mine_eig(model, design, net: ScorerNetwork, cfg: EstimatorConfig) -> float:
    """Scorer-bound EIG estimate at the given network."""
    return mine_divergences(model, design, net, cfg).eig()


def train_scorer(model, design, cfg: EstimatorConfig, epochs: int = 500,
                 step_size: float = 1e-3, batch_size: int = 256,
                 holdout_frac: float = 0.2, hidden: int = 64,
                 momentum: float = 0.9, clip_norm: float = 5.0) -> ScorerNetwork:
    """Fit a scorer network by gradient ascent on the bound.

    Momentum SGD over minibatches of joint pairs; the marginal batch is
    the cyclic shift of the outcome minibatch after each epoch's fresh
    permutation.  Gradients are clipped to ``clip_norm`` in global norm
    and non-finite steps are dropped: the exponential term can overflow
    when a scorer drifts large mid-training.  The returned parameters
    are the checkpoint with the best held-out objective, which therefore
    never falls below the initial network's held-out value.
    """
    root = RandomStream(cfg.seed)
    theta_flat, y_flat = _mine_pairs(model, design, cfg, root.substream(0))
    x = np.concatenate([theta_flat, y_flat], axis=1)
    n = x.shape[0]
    n_hold = max(2, int(round(holdout_frac * n)))
    if n - n_hold < 2:
        raise ValueError("not enough pairs to split off a holdout set")
    perm = root.substream(1).generator().permutation(n)
    hold, train = x[perm[:n_hold]], x[perm[n_hold:]]
    y_cols = slice(theta_flat.shape[1], None)

    def holdout_value(candidate: ScorerNetwork) -> float:
        # average the marginal term over several rotations; a single
        # fixed pairing lets checkpoint selection overfit one shuffle
        t_joint = float(np.mean(candidate.forward(hold)))
        exp_terms = []
        for shift in (1, 2, 3, 5, 7):
            xs = hold.copy()
            xs[:, y_cols] = np.roll(hold[:, y_cols], shift % hold.shape[0], axis=0)
            exp_terms.append(np.mean(np.exp(candidate.forward(xs) - 1.0)))
        return t_joint - float(np.mean(exp_terms))

    net = ScorerNetwork.initialized(
        x.shape[1], root.substream(2), hidden=hidden,
        shift=train.mean(axis=0), scale=np.maximum(train.std(axis=0), 1e-8),
    )
    best_params, best_value = net.params(), holdout_value(net)
    velocity = {k: np.zeros_like(v) if isinstance(v, np.ndarray) else 0.0 for k, v in net.params().items()}

    order_stream = root.substream(3)
    for epoch in range(int(epochs)):
        order = order_stream.substream(epoch).generator().permutation(train.shape[0])
        for start in range(0, train.shape[0], batch_size):
            batch = train[order[start : start + batch_size]]
            if batch.shape[0] < 2:
                continue
            shuf = batch.copy()
            shuf[:, y_cols] = np.roll(batch[:, y_cols], 1, axis=0)
            with np.errstate(over="ignore", invalid="ignore"):
                _, grads = mine_objective_and_grads(net, batch, shuf)
            norm = np.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values()))
            if not np.isfinite(norm):
                velocity = {k: np.zeros_like(v) if isinstance(v, np.ndarray) else 0.0
                            for k, v in velocity.items()}
                continue
            scale = min(1.0, clip_norm / max(norm, 1e-30))
            for k in velocity:
                velocity[k] = momentum * velocity[k] + scale * grads[k]
                new = getattr(net, k) + step_size * velocity[k]
                setattr(net, k, new)
        with np.errstate(over="ignore", invalid="ignore"):
            value = holdout_value(net)
        if np.isfinite(value) and value > best_value:
            best_value, best_params = value, net.params()

    return net.with_params(best_params)
