"""Figure data series and their rendered plots.

Each ``render_*`` function computes the data behind one named figure,
writes it as a CSV in long format, renders a PNG of the same series next
to it, and returns ``(csv_path, png_path)``.  Budgets default to desk
scale; pass smaller ``n1`` / larger ``subsample`` to go faster.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from reiglab import oracle, robust
from reiglab.estimators import EstimatorConfig, divergence_samples, mine_divergences, train_scorer
from reiglab.models import (
    ABTestModel,
    DiagnosticTestModel,
    PKModel,
    PreferenceModel,
    ab_design_matrix,
)
from reiglab.proposals import train_affine_proposal

__all__ = [
    "render_fig1",
    "render_worstcase",
    "render_abtest",
    "render_preference",
    "render_pk",
]


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def _paths(out_dir: str, name: str) -> tuple[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, f"{name}.csv"), os.path.join(out_dir, f"{name}.png")


def render_fig1(out_dir: str, resolution: int = 801) -> tuple[str, str]:
    """Exact EIG of both diagnostic tests across the prior grid."""
    model = DiagnosticTestModel()
    grid = np.linspace(1e-3, 1.0 - 1e-3, int(resolution))
    eig_a = np.array([oracle.discrete_eig_exact(model, "A", r) for r in grid])
    eig_b = np.array([oracle.discrete_eig_exact(model, "B", r) for r in grid])
    crossings = oracle.eig_difference_crossings(model)

    csv_path, png_path = _paths(out_dir, "fig1")
    _write_csv(
        csv_path,
        ["prior_prob", "eig_test_a", "eig_test_b"],
        [[float(r), float(a), float(b)] for r, a, b in zip(grid, eig_a, eig_b)],
    )

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(grid, eig_a, label="test A")
    ax.plot(grid, eig_b, label="test B")
    for r in crossings:
        ax.axvline(float(r), color="gray", linestyle=":", linewidth=1)
    ax.set_xlabel("prior disease probability")
    ax.set_ylabel("EIG (nats)")
    ax.set_title("Which diagnostic test is more informative")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return csv_path, png_path


def render_worstcase(out_dir: str, n1: int = 1000, seed: int = 5, m: int = 512,
                     subsample: int = 1) -> tuple[str, str]:
    """Nominal vs shifted EIG next to the robust lower envelope.

    The ambiguity radius equals the divergence between the shifted and
    nominal priors, so the robust curve must run at or below both.
    """
    nominal = PreferenceModel()
    shifted = PreferenceModel.perturbed()
    epsilon = oracle.gaussian_kl(
        [shifted.prior_mean], [nominal.prior_mean], [nominal.prior_sd**2]
    )
    designs = nominal.design_grid()[:: max(1, int(subsample))]
    cfg = EstimatorConfig(n1=int(n1), n2=1, m=int(m), seed=int(seed))

    rows = []
    for xi in designs:
        ds_nom = divergence_samples(nominal, xi, cfg)
        ds_shift = divergence_samples(shifted, xi, cfg)
        reig = robust.dual_min(ds_nom.d, epsilon, weights=ds_nom.weights).value
        rows.append([float(xi), ds_nom.eig(), ds_shift.eig(), reig, float(epsilon)])

    csv_path, png_path = _paths(out_dir, "worstcase")
    _write_csv(csv_path, ["design", "eig_nominal", "eig_shifted", "reig", "epsilon"], rows)

    arr = np.array([r[:4] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(arr[:, 0], arr[:, 1], label="EIG, nominal prior")
    ax.plot(arr[:, 0], arr[:, 2], label="EIG, shifted prior")
    ax.plot(arr[:, 0], arr[:, 3], label=f"REIG at matched radius {epsilon:.4g}")
    ax.set_xlabel("offer amount")
    ax.set_ylabel("nats")
    ax.set_title("Robust envelope under a prior shift")
    ax.legend()
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return csv_path, png_path


def _convergence_and_radius_rows(model, designs, n1, seed, epochs, inner_sizes,
                                 epsilons, oracle_fn=None):
    """Shared sweep: bound tightening over ``m`` plus a radius sweep."""
    rows = []
    for xi in designs:
        train_cfg = EstimatorConfig(n1=int(n1), n2=1, m=30, seed=int(seed))
        proposal = train_affine_proposal(model, xi, train_cfg, epochs=int(epochs))
        for m in inner_sizes:
            cfg = EstimatorConfig(n1=int(n1), n2=1, m=int(m), seed=int(seed) + 1)
            for scheme in ("vnmc", "ace"):
                ds = divergence_samples(model, xi, cfg, proposal=proposal, scheme=scheme)
                rows.append([scheme, float(xi), int(m), "", ds.eig()])
        base = divergence_samples(
            model, xi, EstimatorConfig(n1=int(n1), n2=1, m=30, seed=int(seed) + 1),
            proposal=proposal, scheme="vnmc",
        )
        for eps in epsilons:
            res = robust.dual_min(base.d, eps, weights=base.weights)
            rows.append(["reig_vnmc", float(xi), 30, float(eps), res.value])
        if oracle_fn is not None:
            rows.append(["oracle", float(xi), "", "", float(oracle_fn(xi))])
    return rows


def _plot_convergence_and_radius(rows, xlabel, title, png_path, inner_sizes, epsilons):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for scheme, style in (("vnmc", "-"), ("ace", "--")):
        for m in inner_sizes:
            pts = sorted((r[1], r[4]) for r in rows if r[0] == scheme and r[2] == m)
            ax1.plot([p[0] for p in pts], [p[1] for p in pts], style,
                     alpha=0.4 + 0.6 * (inner_sizes.index(m) / max(1, len(inner_sizes) - 1)),
                     label=f"{scheme.upper()} m={m}")
    orc = sorted((r[1], r[4]) for r in rows if r[0] == "oracle")
    if orc:
        ax1.plot([p[0] for p in orc], [p[1] for p in orc], "k:", label="exact")
    ax1.set_xlabel(xlabel)
    ax1.set_ylabel("nats")
    ax1.set_title("bound tightening in m")
    ax1.legend(fontsize=7)

    for eps in epsilons:
        pts = sorted((r[1], r[4]) for r in rows if r[0] == "reig_vnmc" and r[3] == eps)
        ax2.plot([p[0] for p in pts], [p[1] for p in pts], label=f"radius {eps:g}")
    ax2.set_xlabel(xlabel)
    ax2.set_ylabel("nats")
    ax2.set_title("robust value vs radius")
    ax2.legend(fontsize=7)

    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)


def render_abtest(out_dir: str, n1: int = 200, seed: int = 0, epochs: int = 200,
                  subsample: int = 1) -> tuple[str, str]:
    """Trial-split benchmark: estimator bounds against the conjugate oracle."""
    model = ABTestModel.perturbed()
    designs = model.design_grid()[:: max(1, int(subsample))]
    inner_sizes = [30, 100, 1000]
    epsilons = [0.0, 0.001, 0.01, 0.1]

    def exact(n_a):
        return oracle.linear_gaussian_eig(model.prior_cov, ab_design_matrix(model, n_a))

    rows = _convergence_and_radius_rows(
        model, designs, n1, seed, epochs, inner_sizes, epsilons, oracle_fn=exact
    )
    csv_path, png_path = _paths(out_dir, "abtest")
    _write_csv(csv_path, ["series", "design", "inner_m", "epsilon", "value"], rows)
    _plot_convergence_and_radius(
        rows, "group A size", "Group allocation benchmark", png_path, inner_sizes, epsilons
    )
    return csv_path, png_path


def render_preference(out_dir: str, n1: int = 200, seed: int = 0, epochs: int = 200,
                      subsample: int = 4) -> tuple[str, str]:
    """Censored-response benchmark: estimator bounds and the radius sweep."""
    model = PreferenceModel()
    designs = model.design_grid()[:: max(1, int(subsample))]
    inner_sizes = [30, 100, 1000]
    epsilons = [0.0, 0.001, 0.01, 0.1]

    rows = _convergence_and_radius_rows(
        model, designs, n1, seed, epochs, inner_sizes, epsilons
    )
    csv_path, png_path = _paths(out_dir, "preference")
    _write_csv(csv_path, ["series", "design", "inner_m", "epsilon", "value"], rows)
    _plot_convergence_and_radius(
        rows, "offer amount", "Valuation benchmark", png_path, inner_sizes, epsilons
    )
    return csv_path, png_path


def render_pk(out_dir: str, n1: int = 2000, seed: int = 4, epochs: int = 500,
              subsample: int = 5) -> tuple[str, str]:
    """Concentration-sampling benchmark with the scorer estimator.

    One scorer trains per sampling time; evaluation sweeps the total
    sample count, and the robust panel sweeps the radius on the largest
    evaluation batch with the upper-tail dual.
    """
    model = PKModel()
    designs = model.design_grid()[:: max(1, int(subsample))]
    totals = [10_000, 30_000, 50_000]
    epsilons = [0.0, 0.05, 0.1, 0.2]

    rows = []
    for t in designs:
        train_cfg = EstimatorConfig(n1=int(n1), n2=1, m=1, seed=int(seed))
        net = train_scorer(model, t, train_cfg, epochs=int(epochs))
        largest = None
        for total in totals:
            cfg = EstimatorConfig(n1=max(2, total // 10), n2=10, m=1, seed=int(seed) + 1)
            ds = mine_divergences(model, t, net, cfg)
            rows.append(["mine", float(t), int(total), "", ds.eig()])
            largest = ds
        for eps in epsilons:
            res = robust.dual_max(largest.d, eps, weights=largest.weights)
            rows.append(["reig_max_mine", float(t), int(totals[-1]), float(eps), res.value])

    csv_path, png_path = _paths(out_dir, "pk")
    _write_csv(csv_path, ["series", "design", "n_total", "epsilon", "value"], rows)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for total in totals:
        pts = sorted((r[1], r[4]) for r in rows if r[0] == "mine" and r[2] == total)
        ax1.plot([p[0] for p in pts], [p[1] for p in pts], label=f"N={total}")
    ax1.set_xscale("log")
    ax1.set_xlabel("sampling time (h)")
    ax1.set_ylabel("nats")
    ax1.set_title("scorer estimate vs sample count")
    ax1.legend(fontsize=7)

    for eps in epsilons:
        pts = sorted((r[1], r[4]) for r in rows if r[0] == "reig_max_mine" and r[3] == eps)
        ax2.plot([p[0] for p in pts], [p[1] for p in pts], label=f"radius {eps:g}")
    ax2.set_xscale("log")
    ax2.set_xlabel("sampling time (h)")
    ax2.set_ylabel("nats")
    ax2.set_title("upper-tail robust value vs radius")
    ax2.legend(fontsize=7)

    fig.suptitle("Sampling-time benchmark")
    fig.tight_layout()
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return csv_path, png_path
