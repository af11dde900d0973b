"""Closed-form and brute-force reference values.

Everything here is computed independently of the sampling estimators:
channel quantities in the linear domain by exact enumeration, conjugate
linear-Gaussian information gain by a determinant identity, and robust
values for the two-outcome diagnostic model by grid search over its
one-parameter family of priors.  The grid route and the dual solve are
deliberately separate code paths so they can cross-check each other.
"""

from __future__ import annotations

import numpy as np
from scipy.special import rel_entr

from reiglab.models import DiagnosticTestModel, diagnostic_likelihood_table
from reiglab.robust import DualResult, dual_min

__all__ = [
    "bernoulli_kl",
    "bernoulli_prior_grid",
    "diagnostic_divergences",
    "discrete_eig_exact",
    "discrete_iaff_exact",
    "discrete_reig_dual",
    "discrete_reig_grid",
    "discrete_true_reig_grid",
    "eig_difference_crossings",
    "gaussian_kl",
    "linear_gaussian_eig",
]

GRID_RESOLUTION = 100_000
GRID_MARGIN = 1e-6


def bernoulli_prior_grid(resolution: int = GRID_RESOLUTION, margin: float = GRID_MARGIN) -> np.ndarray:
    """Equispaced grid of prior probabilities strictly inside (0, 1).

    The margin keeps every KL divergence on the grid finite.
    """
    if resolution < 2 or not 0 < margin < 0.5:
        raise ValueError("need resolution >= 2 and margin in (0, 0.5)")
    return np.linspace(margin, 1.0 - margin, int(resolution))


def bernoulli_kl(r_q, r_p) -> np.ndarray | float:
    """KL(Bernoulli(r_q) | Bernoulli(r_p)) in nats, elementwise."""
    q = np.asarray(r_q, dtype=float)
    p = np.asarray(r_p, dtype=float)
    out = rel_entr(q, p) + rel_entr(1.0 - q, 1.0 - p)
    return float(out) if out.ndim == 0 else out


def diagnostic_divergences(model: DiagnosticTestModel, test: str, r_p: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact per-state divergences to the outcome marginal under ``r_p``.

    Returns ``(d, prior)`` with ``d[s] = KL(p(y|state s) | p(y))`` for
    states ordered (sick, healthy), all in the linear domain.
    """
    if not 0.0 <= r_p <= 1.0:
        raise ValueError(f"prior probability must lie in [0, 1], got {r_p!r}")
    table = diagnostic_likelihood_table(model, test)
    prior = np.array([r_p, 1.0 - r_p])
    marginal = prior @ table
    d = rel_entr(table, marginal[np.newaxis, :]).sum(axis=1)
    return d, prior


def discrete_eig_exact(model: DiagnosticTestModel, test: str, r: float) -> float:
    """Exact mutual information of the two-outcome channel at prior ``r``."""
    d, prior = diagnostic_divergences(model, test, r)
    keep = prior > 0
    return float(np.dot(prior[keep], d[keep]))


def discrete_iaff_exact(model: DiagnosticTestModel, test: str, r_q: float, r_p: float) -> float:
    """Divergences frozen at ``r_p``, averaged under the prior ``r_q``.

    Affine in ``r_q`` and equal to the exact information gain at
    ``r_q = r_p``; an upper bound on it elsewhere.
    """
    d, _ = diagnostic_divergences(model, test, r_p)
    return float(r_q * d[0] + (1.0 - r_q) * d[1])


def _grid_minimize(objective, r_p: float, epsilon: float, resolution: int, refine: int):
    """Minimize a vectorized objective over the KL ball around ``r_p``.

    The nominal prior is always a candidate, so the feasible set is
    never empty.  Each refinement pass re-grids one spacing around the
    incumbent at finer resolution.
    """
    lo, hi = GRID_MARGIN, 1.0 - GRID_MARGIN
    candidates = np.append(bernoulli_prior_grid(resolution), np.clip(r_p, lo, hi))
    spacing = (hi - lo) / (resolution - 1)
    best_r, best_val = None, np.inf
    for _ in range(refine + 1):
        feasible = candidates[bernoulli_kl(candidates, r_p) <= epsilon]
        values = objective(feasible)
        k = int(np.argmin(values))
        if values[k] < best_val:
            best_val, best_r = float(values[k]), float(feasible[k])
        candidates = np.linspace(max(lo, best_r - spacing), min(hi, best_r + spacing), 2001)
        spacing = (candidates[-1] - candidates[0]) / 2000
    return best_val, best_r


def discrete_reig_grid(model: DiagnosticTestModel, test: str, r_p: float, epsilon: float,
                       resolution: int = GRID_RESOLUTION, refine: int = 2) -> tuple[float, float]:
    """Worst-case frozen-divergence value over the KL ball, by grid search.

    Returns ``(value, argmin prior probability)``.  This is the grid
    route to the same quantity the weighted dual solve computes.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    d, _ = diagnostic_divergences(model, test, r_p)

    def objective(rs):
        return rs * d[0] + (1.0 - rs) * d[1]

    return _grid_minimize(objective, r_p, epsilon, resolution, refine)


def discrete_true_reig_grid(model: DiagnosticTestModel, test: str, r_p: float, epsilon: float,
                            resolution: int = GRID_RESOLUTION, refine: int = 2) -> float:
    """Worst-case exact information gain over the KL ball, by grid search.

    The divergences are recomputed under each candidate prior rather
    than frozen at the nominal one; tractable because the prior family
    is one-dimensional.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    table = diagnostic_likelihood_table(model, test)

    def objective(rs):
        priors = np.stack([rs, 1.0 - rs], axis=1)
        marginals = priors @ table
        per_state = np.stack(
            [rel_entr(table[s][np.newaxis, :], marginals).sum(axis=1) for s in (0, 1)], axis=1
        )
        return np.sum(priors * per_state, axis=1)

    value, _ = _grid_minimize(objective, r_p, epsilon, resolution, refine)
    return value


def discrete_reig_dual(model: DiagnosticTestModel, test: str, r_p: float, epsilon: float) -> DualResult:
    """Dual-solve route to the grid value of ``discrete_reig_grid``.

    Runs the prior-weighted dual on the exact two-entry divergence
    vector; agreement with the grid search validates both routes.
    """
    d, prior = diagnostic_divergences(model, test, r_p)
    return dual_min(d, epsilon, weights=prior)


def eig_difference_crossings(model: DiagnosticTestModel, resolution: int = 20_001,
                             margin: float = 1e-4) -> np.ndarray:
    """Prior probabilities where the two tests' information gains cross.

    Scans the exact gain difference (test A minus test B) on a grid and
    returns the midpoint of every sign-changing bracket.
    """
    grid = bernoulli_prior_grid(resolution, margin)
    diff = np.array(
        [discrete_eig_exact(model, "A", r) - discrete_eig_exact(model, "B", r) for r in grid]
    )
    sign = np.sign(diff)
    # treat exact zeros as keeping the previous sign so a touch without
    # a crossing is not double counted
    for i in range(1, sign.size):
        if sign[i] == 0:
            sign[i] = sign[i - 1]
    flips = np.nonzero(sign[1:] * sign[:-1] < 0)[0]
    return (grid[flips] + grid[flips + 1]) / 2.0


def linear_gaussian_eig(prior_cov, design_matrix, noise=None) -> float:
    """Exact information gain of a linear-Gaussian observation.

    For outcomes ``y = X theta + eta`` with ``theta ~ N(mu, prior_cov)``
    and ``eta ~ N(0, noise)``, the gain is
    ``0.5 log det(I + noise^{-1/2} X prior_cov X^T noise^{-1/2})``,
    independent of the prior mean.  ``noise`` defaults to the identity.
    """
    sigma = np.atleast_2d(np.asarray(prior_cov, dtype=float))
    x = np.atleast_2d(np.asarray(design_matrix, dtype=float))
    if sigma.shape[0] != sigma.shape[1]:
        raise ValueError("prior covariance must be square")
    if not np.allclose(sigma, sigma.T) or np.min(np.linalg.eigvalsh(sigma)) < -1e-10:
        raise ValueError("prior covariance must be symmetric positive semidefinite")
    if x.shape[1] != sigma.shape[0]:
        raise ValueError("design matrix columns must match the parameter dimension")
    n = x.shape[0]
    if noise is None:
        gram = x @ sigma @ x.T
    else:
        noise = np.atleast_2d(np.asarray(noise, dtype=float))
        if noise.shape != (n, n):
            raise ValueError("noise covariance must be square of the outcome dimension")
        root = np.linalg.cholesky(noise)
        half = np.linalg.solve(root, x)
        gram = half @ sigma @ half.T
    sign, logdet = np.linalg.slogdet(np.eye(n) + gram)
    if sign <= 0:
        raise ValueError("information matrix lost positive definiteness")
    return 0.5 * float(logdet)


def gaussian_kl(mu1, mu0, variances) -> float:
    """KL between same-covariance diagonal Gaussians: sum (dmu)^2 / (2 var)."""
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    mu0 = np.atleast_1d(np.asarray(mu0, dtype=float))
    var = np.broadcast_to(np.atleast_1d(np.asarray(variances, dtype=float)), mu1.shape)
    if mu1.shape != mu0.shape:
        raise ValueError("mean vectors must share a shape")
    if np.any(var <= 0):
        raise ValueError("variances must be positive")
    return float(np.sum((mu1 - mu0) ** 2 / (2.0 * var)))
