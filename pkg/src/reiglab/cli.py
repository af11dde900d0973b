"""Command-line front end.

Subcommands:
  run            estimate EIG/robust values over design, epsilon, and
                 seed sweeps, persisting one CSV row per estimate
  figure         emit the data series (CSV) for a named figure and
                 render the matching PNG alongside
  oracle-report  run every closed-form cross-check and report pass/fail

A JSON config file supplies run settings; command-line flags override
individual fields.  The environment variable REIG_LAB_SEED provides the
default master seed when neither config nor flags name one.

Exit codes: 0 success, 2 usage or config error, 3 total estimation
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field, fields
from multiprocessing import Pool

import numpy as np

from reiglab import oracle, robust
from reiglab.estimators import (
    EstimatorConfig,
    EstimatorError,
    divergence_samples,
    mine_divergences,
    train_scorer,
)
from reiglab.models import MODEL_REGISTRY, DiagnosticTestModel, SamplingError, model_from_config
from reiglab.proposals import ExactPosteriorProposal, train_affine_proposal
from reiglab.records import EstimateRecord, write_records_csv

SEED_ENV_VAR = "REIG_LAB_SEED"
ESTIMATORS = ("nmc", "vnmc", "ace", "mine")
ROBUST_MODES = ("none", "reig", "reig_max", "reig_joint")
PROPOSAL_KINDS = ("prior", "exact_posterior", "trained")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_ALL_FAILED = 3


class ConfigError(ValueError):
    """Raised for malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Settings for one estimation sweep."""

    model: str = "diagnostic"
    model_params: dict = field(default_factory=dict)
    estimator: str = "nmc"
    robust_mode: str = "none"
    epsilons: list = field(default_factory=lambda: [0.0])
    n1: int = 100
    n2: int = 10
    m: int = 30
    seeds: list = field(default_factory=lambda: [0])
    designs: list | None = None
    proposal: str = "prior"
    workers: int = 1
    timing: bool = True
    out: str = "records.csv"

    def validate(self) -> "RunConfig":
        if self.model not in MODEL_REGISTRY:
            raise ConfigError(f"unknown model {self.model!r}; known: {sorted(MODEL_REGISTRY)}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}; known: {ESTIMATORS}")
        if self.robust_mode not in ROBUST_MODES:
            raise ConfigError(f"unknown robust mode {self.robust_mode!r}; known: {ROBUST_MODES}")
        if self.proposal not in PROPOSAL_KINDS:
            raise ConfigError(f"unknown proposal {self.proposal!r}; known: {PROPOSAL_KINDS}")
        if self.estimator == "mine" and self.robust_mode == "reig_joint":
            raise ConfigError("the scorer estimator has no joint-sample decomposition")
        if self.robust_mode != "none" and not self.epsilons:
            raise ConfigError("robust modes need a nonempty epsilon list")
        for eps in self.epsilons:
            if not np.isfinite(eps) or eps < 0:
                raise ConfigError(f"epsilon values must be finite and nonnegative, got {eps!r}")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        for n, label in [(self.n1, "n1"), (self.n2, "n2"), (self.m, "m"), (self.workers, "workers")]:
            if int(n) < 1:
                raise ConfigError(f"{label} must be a positive integer, got {n!r}")
        try:
            probe = model_from_config({"name": self.model, **self.model_params})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad model_params for {self.model!r}: {exc}") from exc
        if self.proposal == "exact_posterior" and not hasattr(probe, "posterior_moments"):
            raise ConfigError(
                f"model {self.model!r} has no closed-form posterior for the exact proposal"
            )
        return self


_CONFIG_KEY_ALIASES = {"epsilon": "epsilons", "seed": "seeds"}


def _coerce_list(value) -> list:
    return list(value) if isinstance(value, (list, tuple)) else [value]


def build_run_config(config_path: str | None, overrides: dict) -> RunConfig:
    """Merge JSON config, flag overrides, and the seed environment default."""
    merged: dict = {}
    if config_path is not None:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path!r}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config document must be a JSON object")
        merged.update(loaded)

    merged.update({k: v for k, v in overrides.items() if v is not None})

    normalized: dict = {}
    known = {f.name for f in fields(RunConfig)}
    for key, value in merged.items():
        key = _CONFIG_KEY_ALIASES.get(key, key)
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}")
        normalized[key] = value

    if "seeds" not in normalized and os.environ.get(SEED_ENV_VAR):
        try:
            normalized["seeds"] = [int(os.environ[SEED_ENV_VAR])]
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from exc

    for key in ("epsilons", "seeds"):
        if key in normalized:
            normalized[key] = _coerce_list(normalized[key])
    if "epsilons" in normalized:
        normalized["epsilons"] = [float(e) for e in normalized["epsilons"]]
    if "seeds" in normalized:
        normalized["seeds"] = [int(s) for s in normalized["seeds"]]
    if "designs" in normalized and normalized["designs"] is not None:
        normalized["designs"] = _coerce_list(normalized["designs"])
    if not isinstance(normalized.get("model_params", {}), dict):
        raise ConfigError("model_params must be a JSON object")

    try:
        cfg = RunConfig(**normalized)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def _resolve_designs(model, cfg: RunConfig) -> list:
    if cfg.designs is None:
        return list(model.design_grid())
    grid = model.design_grid()
    coerce = type(grid[0])
    try:
        return [coerce(d) for d in cfg.designs]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"designs incompatible with {cfg.model!r} grid: {exc}") from exc


_SCHEME = {"nmc": "vnmc", "vnmc": "vnmc", "ace": "ace"}


def _estimate_cell(cfg: RunConfig, design, seed: int) -> list[EstimateRecord]:
    """All records for one (design, seed) cell; divergences sampled once."""
    model = model_from_config({"name": cfg.model, **cfg.model_params})
    est_cfg = EstimatorConfig(n1=cfg.n1, n2=cfg.n2, m=cfg.m, seed=seed)

    t0 = time.perf_counter()
    if cfg.estimator == "mine":
        net = train_scorer(model, design, est_cfg)
        samples = mine_divergences(model, design, net, est_cfg)
    else:
        proposal = None
        if cfg.proposal == "exact_posterior":
            proposal = ExactPosteriorProposal(model, design)
        elif cfg.proposal == "trained" and cfg.estimator != "nmc":
            proposal = train_affine_proposal(model, design, est_cfg)
        samples = divergence_samples(
            model, design, est_cfg, proposal=proposal, scheme=_SCHEME[cfg.estimator]
        )
    sample_ms = (time.perf_counter() - t0) * 1e3

    def record(eps: float, value: float, lambda_star, dual_ms: float) -> EstimateRecord:
        return EstimateRecord(
            model=cfg.model,
            design=str(design),
            estimator=cfg.estimator,
            robust_mode=cfg.robust_mode,
            epsilon=float(eps),
            n1=cfg.n1,
            n2=cfg.n2,
            m=cfg.m,
            seed=seed,
            value=value,
            lambda_star=lambda_star,
            clip_count=samples.clip_count,
            runtime_ms=(sample_ms + dual_ms) if cfg.timing else 0.0,
        )

    if cfg.robust_mode == "none":
        return [record(0.0, samples.eig(), None, 0.0)]

    records = []
    if cfg.robust_mode == "reig_joint":
        values, weights = samples.joint_values()
    else:
        values, weights = samples.d, samples.weights
    for eps in cfg.epsilons:
        t1 = time.perf_counter()
        if cfg.robust_mode == "reig_max":
            res = robust.dual_max(values, eps, weights=weights)
        else:
            res = robust.dual_min(values, eps, weights=weights)
        records.append(record(eps, res.value, res.lambda_star, (time.perf_counter() - t1) * 1e3))
    return records


def _cell_worker(args) -> tuple[str, object]:
    cfg_dict, design, seed = args
    cfg = RunConfig(**cfg_dict)
    try:
        return ("ok", _estimate_cell(cfg, design, seed))
    except (EstimatorError, SamplingError, ValueError) as exc:
        return ("error", f"design {design!r} seed {seed}: {exc}")


def run_sweep(cfg: RunConfig) -> tuple[list[EstimateRecord], list[str]]:
    """Estimate every (design, seed) cell; returns (records, error notes).

    Cells fan out to a worker pool when ``cfg.workers > 1``.  Results are
    assembled in cell-list order regardless of completion order, so the
    output is independent of the worker count.
    """
    model = model_from_config({"name": cfg.model, **cfg.model_params})
    designs = _resolve_designs(model, cfg)
    cfg_dict = {f.name: getattr(cfg, f.name) for f in fields(RunConfig)}
    cells = [(cfg_dict, design, seed) for design in designs for seed in cfg.seeds]

    if cfg.workers > 1:
        with Pool(processes=cfg.workers) as pool:
            outcomes = pool.map(_cell_worker, cells)
    else:
        outcomes = [_cell_worker(c) for c in cells]

    records: list[EstimateRecord] = []
    errors: list[str] = []
    for status, payload in outcomes:
        if status == "ok":
            records.extend(payload)
        else:
            errors.append(str(payload))
    return records, errors


def _cmd_run(args) -> int:
    overrides = {
        "model": args.model,
        "estimator": args.estimator,
        "robust_mode": args.robust_mode,
        "epsilons": args.epsilon,
        "n1": args.n1,
        "n2": args.n2,
        "m": args.m,
        "seeds": args.seed,
        "designs": args.designs,
        "proposal": args.proposal,
        "workers": args.workers,
        "timing": args.timing,
        "out": args.out,
    }
    try:
        cfg = build_run_config(args.config, overrides)
        records, errors = run_sweep(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for note in errors:
        print(f"estimation failed: {note}", file=sys.stderr)
    if errors and not records:
        return EXIT_ALL_FAILED
    write_records_csv(records, cfg.out)
    print(f"wrote {len(records)} records to {cfg.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle-report
# ---------------------------------------------------------------------------

# frozen reference values, each computed by an independent closed form
DIAGNOSTIC_EIG_A_HALF = 0.2157615543388338
DIAGNOSTIC_EIG_B_HALF = 0.21574219462857305
AB_SHIFT_KL = 0.099458
PK_SHIFT_KL = 0.1
PREFERENCE_SHIFT_KL = 0.067528125


def _oracle_checks(models: list[str], duality_tol: float) -> list[dict]:
    checks: list[dict] = []

    def add(name: str, value: float, threshold: float):
        checks.append(
            {
                "check": name,
                "value": f"{value:.6g}",
                "threshold": f"{threshold:.6g}",
                "passed": bool(value <= threshold),
            }
        )

    rng = np.random.default_rng(20240501)

    if "diagnostic" in models:
        diag = DiagnosticTestModel()
        add("diagnostic_equality_test_a",
            abs(oracle.discrete_eig_exact(diag, "A", 0.5) - DIAGNOSTIC_EIG_A_HALF), 1e-9)
        add("diagnostic_equality_test_b",
            abs(oracle.discrete_eig_exact(diag, "B", 0.5) - DIAGNOSTIC_EIG_B_HALF), 1e-9)

        crossings = oracle.eig_difference_crossings(diag)
        add("eig_crossing_count", abs(len(crossings) - 1), 0)
        add("eig_crossing_location", abs(float(crossings[0]) - 0.5) if len(crossings) else np.inf, 1e-3)

        worst = 0.0
        for _ in range(20):
            r_p = float(rng.uniform(0.05, 0.95))
            eps = float(rng.uniform(0.0, 0.5))
            test = str(rng.choice(["A", "B"]))
            grid_value, _ = oracle.discrete_reig_grid(diag, test, r_p, eps)
            dual_value = oracle.discrete_reig_dual(diag, test, r_p, eps).value
            worst = max(worst, abs(grid_value - dual_value))
        add("duality_cross_check", worst, duality_tol)

        violation = 0.0
        for test in ("A", "B"):
            plain = oracle.discrete_eig_exact(diag, test, 0.5)
            for eps in (0.01, 0.05, 0.2):
                relaxed, _ = oracle.discrete_reig_grid(diag, test, 0.5, eps)
                true_value = oracle.discrete_true_reig_grid(diag, test, 0.5, eps)
                violation = max(violation, relaxed - plain, true_value - relaxed,
                                (relaxed - true_value) - eps)
        add("sandwich_ordering_and_gap", violation, 1e-9)

        slope_excess = 0.0
        for test in ("A", "B"):
            for h in (1e-2, 1e-3, 1e-4):
                fd = (oracle.discrete_eig_exact(diag, test, 0.5 + h)
                      - oracle.discrete_iaff_exact(diag, test, 0.5 + h, 0.5)) / h
                slope_excess = max(slope_excess, abs(fd) - 10.0 * h)
        add("tangency_slope", slope_excess, 0.0)

    worst = 0.0
    for _ in range(50):
        d = rng.normal(size=rng.integers(2, 30))
        eps = float(rng.uniform(0.01, 1.0))
        scale = float(rng.uniform(0.1, 5.0))
        shiftc = float(rng.normal())
        base = robust.dual_min(d, eps).value
        worst = max(
            worst,
            abs(robust.dual_min(d, 0.0).value - float(np.mean(d))),
            abs(robust.dual_min(d, np.log(d.size) + 0.5).value - float(np.min(d))),
            abs(robust.dual_min(d + shiftc, eps).value - (base + shiftc)),
            abs(robust.dual_min(scale * d, eps).value - scale * base),
        )
    add("dual_limit_identities", worst, 1e-9)

    worst = 0.0
    for _ in range(10):
        d = rng.normal(size=8)
        eps = 0.05
        res = robust.dual_min(d, eps)
        if res.boundary_flag != "interior":
            continue
        grad = -robust.subgradient_d(res, d)
        h = 1e-6
        for i in range(d.size):
            dp, dm = d.copy(), d.copy()
            dp[i] += h
            dm[i] -= h
            fd = (robust.dual_min(dp, eps).value - robust.dual_min(dm, eps).value) / (2 * h)
            worst = max(worst, abs(fd - grad[i]) / max(1.0, abs(fd)))
    add("subgradient_finite_difference", worst, 1e-5)

    worst = 0.0
    for _ in range(20):
        d = rng.normal(size=16)
        lam = float(rng.uniform(1e-3, 10.0))
        eps = float(rng.uniform(0.0, 1.0))
        g = lam * eps + lam * np.log(np.mean(np.exp(-d / lam)))
        upper = lam * eps - float(np.min(d))
        lower = upper - lam * np.log(d.size)
        worst = max(worst, g - upper, lower - g)
    add("squeeze_bounds", worst, 1e-9)

    if "ab_test" in models:
        from reiglab.models import ABTestModel, ab_design_matrix

        ab = ABTestModel()
        add("linear_gaussian_scalar",
            abs(oracle.linear_gaussian_eig([[1.0]], [[1.0]]) - 0.5 * np.log(2.0)), 1e-12)
        worst = 0.0
        for n_a in range(11):
            direct = 0.5 * (np.log1p(ab.prior_cov[0, 0] * n_a)
                            + np.log1p(ab.prior_cov[1, 1] * (ab.n - n_a)))
            worst = max(worst, abs(
                oracle.linear_gaussian_eig(ab.prior_cov, ab_design_matrix(ab, n_a)) - direct))
        add("linear_gaussian_ab_designs", worst, 1e-9)
        add("gaussian_kl_ab_shift",
            abs(oracle.gaussian_kl([4.46, 0.0], [0.0, 0.0],
                                   np.diag(ab.prior_cov)) - AB_SHIFT_KL), 1e-12)

    if "pk" in models:
        add("gaussian_kl_pk_shift",
            abs(oracle.gaussian_kl([0.1], [0.0], [0.05]) - PK_SHIFT_KL), 1e-12)

    if "preference" in models:
        from reiglab.models import PreferenceModel

        pref = PreferenceModel()
        perturbed = PreferenceModel.perturbed()
        add("gaussian_kl_preference_shift",
            abs(oracle.gaussian_kl([perturbed.prior_mean], [pref.prior_mean],
                                   [pref.prior_sd**2]) - PREFERENCE_SHIFT_KL), 1e-12)

    return checks


def _cmd_oracle_report(args) -> int:
    requested = [m for m in (args.models.split(",") if args.models is not None else sorted(MODEL_REGISTRY)) if m != ""]
    if not requested:
        print("oracle-report: empty model list", file=sys.stderr)
        return EXIT_USAGE
    unknown = [m for m in requested if m not in MODEL_REGISTRY]
    if unknown:
        print(f"oracle-report: unknown models {unknown}", file=sys.stderr)
        return EXIT_USAGE

    checks = _oracle_checks(requested, args.duality_tol)

    import csv

    out = args.out
    rows = [["check", "value", "threshold", "passed"]] + [
        [c["check"], c["value"], c["threshold"], str(c["passed"]).lower()] for c in checks
    ]
    if out == "-":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerows(rows)
    else:
        with open(out, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        print(f"wrote {len(checks)} checks to {out}")

    failed = [c for c in checks if not c["passed"]]
    for c in failed:
        print(f"FAILED {c['check']}: value {c['value']} exceeds {c['threshold']}", file=sys.stderr)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _cmd_figure(args) -> int:
    from reiglab import reporting

    renderers = {
        "fig1": reporting.render_fig1,
        "worstcase": reporting.render_worstcase,
        "abtest": reporting.render_abtest,
        "preference": reporting.render_preference,
        "pk": reporting.render_pk,
    }
    render = renderers[args.name]
    kwargs = {}
    if args.n1 is not None:
        kwargs["n1"] = args.n1
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.subsample is not None:
        kwargs["subsample"] = args.subsample
    if args.epochs is not None:
        kwargs["epochs"] = args.epochs
    try:
        csv_path, png_path = render(args.out, **kwargs)
    except TypeError as exc:
        print(f"figure {args.name}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wrote {csv_path} and {png_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reiglab",
        description="EIG estimation with robust KL-ball post-processing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="estimate over design/epsilon/seed sweeps")
    run_p.add_argument("--config", help="JSON config file")
    run_p.add_argument("--model", choices=sorted(MODEL_REGISTRY))
    run_p.add_argument("--estimator", choices=list(ESTIMATORS))
    run_p.add_argument("--robust-mode", dest="robust_mode", choices=list(ROBUST_MODES))
    run_p.add_argument("--epsilon", type=float, action="append",
                       help="ambiguity radius; repeat for a sweep")
    run_p.add_argument("--n1", type=int, help="outer parameter draws")
    run_p.add_argument("--n2", type=int, help="outcome draws per parameter")
    run_p.add_argument("--m", type=int, help="inner marginal draws")
    run_p.add_argument("--seed", type=int, action="append",
                       help="master seed; repeat for replicates")
    run_p.add_argument("--designs", help="comma-separated design subset")
    run_p.add_argument("--proposal", choices=list(PROPOSAL_KINDS))
    run_p.add_argument("--workers", type=int)
    run_p.add_argument("--timing", dest="timing", action="store_true", default=None,
                       help="record wall-clock runtime per row (default)")
    run_p.add_argument("--no-timing", dest="timing", action="store_false", default=None,
                       help="write runtime_ms as 0 for reproducible bytes")
    run_p.add_argument("--out", help="output CSV path")
    run_p.set_defaults(handler=_cmd_run)

    fig_p = sub.add_parser("figure", help="emit figure data CSV and PNG")
    fig_p.add_argument("name", choices=["fig1", "worstcase", "abtest", "preference", "pk"])
    fig_p.add_argument("--out", default="figures", help="output directory")
    fig_p.add_argument("--n1", type=int, help="outer sample budget override")
    fig_p.add_argument("--seed", type=int, help="master seed")
    fig_p.add_argument("--subsample", type=int, help="design grid stride")
    fig_p.add_argument("--epochs", type=int, help="training epoch override")
    fig_p.set_defaults(handler=_cmd_figure)

    orc_p = sub.add_parser("oracle-report", help="run closed-form cross-checks")
    orc_p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    orc_p.add_argument("--duality-tol", dest="duality_tol", type=float, default=1e-5)
    orc_p.add_argument("--models", help="comma-separated model subset")
    orc_p.set_defaults(handler=_cmd_oracle_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run" and args.designs is not None:
        args.designs = [part for part in args.designs.split(",") if part]
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
