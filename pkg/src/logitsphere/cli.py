"""Command-line front end.

Subcommands
-----------
verify-bounds   run the Gaussian-integral inequality grid (optionally the
                Monte Carlo moment grid) and write bounds_report.csv;
                exit 1 if any check fails
sweep           estimate n*(d, beta, epsilon) over a grid and write
                sweep.csv and phase.svg
estimate        run one estimator on a dataset file, print JSON
sample          draw a dataset from the model and write the wire format
schema-check    validate a CSV produced by this tool

Exit codes: 0 success, 1 verification failure, 2 usage/config error.
All outputs are deterministic functions of (config, seed): there is no
wall-clock seeding, and sweep timings are zeroed in the CSV unless
``--timings`` is given (real timings would break byte-reproducibility).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import bounds as bounds_mod
from . import dataio, moments, svgplot
from .estimators import (
    EstimatorSpec,
    adaptive_estimate,
    linear_estimate,
    relu_erm_estimate,
    zero_one_erm_estimate,
)
from .model import InverseTemperature, UnitParameter, sample_dataset
from .quadrature import QuadratureConfig, QuadratureError
from .rng import RngSeed
from .sweep import CellSpec, SuccessCriterion, SweepCell, find_n_star, fit_regime_slope
from .bounds import IdentityMismatchError

USAGE_ERROR = 2
VERIFY_ERROR = 1


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _cfg(args, config: dict, key: str, default):
    """Explicit CLI flag wins, then config file, then the default."""
    cli_val = getattr(args, key.replace("-", "_"), None)
    if cli_val is not None:
        return cli_val
    if key in config:
        return config[key]
    return default


def _float_list(value, name: str) -> list[float]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    out = [float(v) for v in value]
    if not out:
        raise ConfigError(f"{name} grid must be nonempty")
    return out


def _beta_list(value) -> list[InverseTemperature]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if not value:
        raise ConfigError("beta grid must be nonempty")
    return [InverseTemperature.parse(v) for v in value]


def _ensure_outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    try:
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}")
    return out


# ---------------------------------------------------------------------------
# verify-bounds


def _moment_reports_as_bounds(args_draws: int, seed: RngSeed) -> list[bounds_mod.BoundReport]:
    """Map the Monte Carlo moment grid onto the bounds CSV schema.

    The rho column carries the parameter correlation 1 - dist^2/2 and the
    tolerance column the 4-standard-error allowance.
    """
    reports = []
    for beta in (2.0, 4.0, 8.0):
        for dist in (0.1, 0.3, 0.6):
            rho = 1.0 - 0.5 * dist * dist
            ms = moments.hinge_gap_moments(
                beta, rho, args_draws, seed.derive("moments", beta, dist), (2, 3, 4)
            )
            for q, (m, se) in ms.items():
                bound = moments.explicit_moment_bound(beta, dist, q)
                reports.append(
                    bounds_mod._report(
                        "hinge_gap_moment",
                        m,
                        bound,
                        "<=",
                        "MonteCarlo",
                        4.0 * se,
                        beta=beta,
                        rho=rho,
                        q=q,
                        value=m,
                    )
                )
    return reports


def cmd_verify_bounds(args) -> int:
    config = _load_config(args.config)
    try:
        out = _ensure_outdir(_cfg(args, config, "out", "."))
        seed = RngSeed(int(_cfg(args, config, "seed", 0)))
        report_tol = float(_cfg(args, config, "report_tol", bounds_mod.DEFAULT_REPORT_TOL))
        quad_cfg = QuadratureConfig(
            node_count=int(_cfg(args, config, "node_count", 96)),
            abs_tol=float(_cfg(args, config, "quad_tol", 1e-12)),
        )
        betas = _float_list(_cfg(args, config, "betas", list(bounds_mod.DEFAULT_BETA_GRID)), "beta")
        rhos = _float_list(_cfg(args, config, "rhos", list(bounds_mod.DEFAULT_RHO_GRID)), "rho")
        qmax = int(_cfg(args, config, "qmax", 8))
        with_moments = bool(_cfg(args, config, "moments", False))
        moment_draws = int(_cfg(args, config, "moment_draws", 1_000_000))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR

    try:
        reports = bounds_mod.default_grid_reports(
            betas=betas, rhos=rhos, qs=tuple(range(qmax + 1)), tol=report_tol,
            config=quad_cfg, kl_seed=seed,
        )
        if with_moments:
            reports.extend(_moment_reports_as_bounds(moment_draws, seed))
    except (QuadratureError, IdentityMismatchError) as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return VERIFY_ERROR

    csv_text = dataio.bounds_csv_text(reports)
    (out / "bounds_report.csv").write_text(csv_text, encoding="utf-8", newline="\n")
    failures = [r for r in reports if not r.passed]
    print(f"{len(reports)} checks, {len(failures)} failed -> {out / 'bounds_report.csv'}")
    for r in failures:
        print(
            f"FAIL {r.name} beta={r.beta} rho={r.rho} q={r.q} "
            f"lhs={r.lhs!r} rhs={r.rhs!r} margin={r.margin!r}"
        )
    return 0 if not failures else VERIFY_ERROR


# ---------------------------------------------------------------------------
# sweep


def _run_cell(payload):
    cell, master = payload
    return find_n_star(cell, master)


def cmd_sweep(args) -> int:
    config = _load_config(args.config)
    try:
        out = _ensure_outdir(_cfg(args, config, "out", "."))
        seed = RngSeed(int(_cfg(args, config, "seed", 0)))
        estimators = _cfg(args, config, "estimators", None)
        if isinstance(estimators, str):
            estimators = [e for e in estimators.split(",") if e.strip()]
        if not estimators:
            raise ConfigError("estimator grid must be nonempty")
        ds = [int(v) for v in (_cfg(args, config, "d", None) or [])] or None
        if ds is None:
            raise ConfigError("d grid must be nonempty")
        betas = _beta_list(_cfg(args, config, "beta", []))
        epsilons = _float_list(_cfg(args, config, "epsilon", []), "epsilon")
        criterion_mode = str(_cfg(args, config, "criterion", "probability_half"))
        trials = int(_cfg(args, config, "trials", 200))
        confirm = int(_cfg(args, config, "confirm_factor", 4))
        n_cap = int(_cfg(args, config, "n_cap", 1_000_000))
        fixed_truth = bool(_cfg(args, config, "fixed_truth", False))
        jobs = int(_cfg(args, config, "jobs", 1))
        strict = bool(args.strict or config.get("strict", False))
        timings = bool(args.timings or config.get("timings", False))
        cells = [
            CellSpec(
                d=d,
                beta=b,
                epsilon=e,
                estimator=est,
                criterion=SuccessCriterion(criterion_mode, e),
                trials=trials,
                confirm_factor=confirm,
                n_cap=n_cap,
                fixed_truth=fixed_truth,
            )
            for est in estimators
            for d in ds
            for b in betas
            for e in epsilons
        ]
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR

    payloads = [(c, seed) for c in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell, payloads))
    else:
        results = [_run_cell(p) for p in payloads]

    csv_text = dataio.sweep_csv_text(results, with_timings=timings)
    (out / "sweep.csv").write_text(csv_text, encoding="utf-8", newline="\n")

    slopes = _series_slopes(results)
    svg_text = svgplot.render_phase_svg(results, slopes)
    (out / "phase.svg").write_text(svg_text, encoding="utf-8", newline="\n")

    unresolved = [c for c in results if not c.resolved]
    for cell in results:
        s = cell.spec
        n_txt = str(cell.n_star) if cell.resolved else "unresolved"
        print(f"{s.estimator} d={s.d} beta={s.beta} eps={s.epsilon:g}: n*={n_txt}")
    print(f"wrote {out / 'sweep.csv'} and {out / 'phase.svg'}")
    if unresolved:
        print(f"{len(unresolved)} unresolved cell(s)")
        if strict:
            return VERIFY_ERROR
    return 0


def _series_slopes(cells: list[SweepCell]) -> dict[tuple[str, float], float]:
    groups: dict[tuple, list[SweepCell]] = {}
    for c in cells:
        if c.resolved and not c.spec.beta.is_infinite:
            key = (c.spec.estimator, c.spec.epsilon, c.spec.d, c.spec.criterion.mode)
            groups.setdefault(key, []).append(c)
    slopes: dict[tuple[str, float], float] = {}
    counts: dict[tuple[str, float], int] = {}
    for key, group in groups.items():
        short = (key[0], key[1])
        counts[short] = counts.get(short, 0) + 1
        if len(group) >= 4:
            try:
                slope, _ = fit_regime_slope(group, "beta")
            except ValueError:
                continue
            slopes[short] = slope
    return {k: v for k, v in slopes.items() if counts.get(k, 0) == 1}


# ---------------------------------------------------------------------------
# estimate / sample


def _estimator_spec_from(args) -> EstimatorSpec:
    return EstimatorSpec(
        restarts=args.restarts,
        max_iters=args.max_iters,
        exact_dim3=args.exact_dim3,
        net_resolution=args.net_resolution,
        seed=RngSeed(args.seed).derive("estimate"),
    )


def cmd_estimate(args) -> int:
    try:
        dataset = dataio.read_dataset(args.input)
    except FileNotFoundError:
        print(f"input file not found: {args.input}", file=sys.stderr)
        return USAGE_ERROR
    except dataio.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    spec = _estimator_spec_from(args)
    runner = {
        "linear": lambda: linear_estimate(dataset),
        "relu": lambda: relu_erm_estimate(dataset, spec),
        "zero_one": lambda: zero_one_erm_estimate(dataset, spec),
        "adaptive": lambda: adaptive_estimate(dataset, spec),
    }[args.estimator]
    try:
        result = runner()
    except ValueError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return VERIFY_ERROR
    payload = {
        "estimator": args.estimator,
        "d": dataset.dim,
        "n": dataset.n,
        "estimate": [float(v) for v in result.estimate.coords],
        "objective": result.objective_value,
        "converged": result.converged,
        "restarts_used": result.restarts_used,
        "exact": result.exact,
        "branch": result.branch,
        "threshold": result.threshold,
    }
    print(json.dumps(payload))
    return 0


def cmd_sample(args) -> int:
    seed = RngSeed(args.seed)
    try:
        beta = InverseTemperature.parse(args.beta)
        truth = UnitParameter.random(args.d, seed.derive("truth").generator())
        dataset = sample_dataset(truth, beta, args.n, seed.derive("data"))
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    dataio.write_dataset(dataset, args.out)
    print(json.dumps({"file": args.out, "d": args.d, "n": args.n,
                      "truth": [float(v) for v in truth.coords]}))
    return 0


def cmd_schema_check(args) -> int:
    try:
        text = Path(args.path).read_text(encoding="utf-8")
    except FileNotFoundError:
        print(f"file not found: {args.path}", file=sys.stderr)
        return USAGE_ERROR
    kind = args.kind
    if kind == "auto":
        header = text.splitlines()[0] if text else ""
        if header == ",".join(dataio.SWEEP_COLUMNS):
            kind = "sweep"
        elif header == ",".join(dataio.BOUNDS_COLUMNS):
            kind = "bounds"
        else:
            print("cannot infer schema from header", file=sys.stderr)
            return VERIFY_ERROR
    errors = (
        dataio.validate_sweep_csv(text) if kind == "sweep" else dataio.validate_bounds_csv(text)
    )
    for e in errors:
        print(e)
    print(f"{kind} schema: {'OK' if not errors else f'{len(errors)} error(s)'}")
    return 0 if not errors else VERIFY_ERROR


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="logitsphere", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    vb = sub.add_parser("verify-bounds", help="run the inequality verification grid")
    vb.add_argument("--config", default=None)
    vb.add_argument("--out", default=None)
    vb.add_argument("--seed", type=int, default=None)
    vb.add_argument("--report-tol", dest="report_tol", type=float, default=None)
    vb.add_argument("--quad-tol", dest="quad_tol", type=float, default=None)
    vb.add_argument("--node-count", dest="node_count", type=int, default=None)
    vb.add_argument("--betas", default=None, help="comma-separated beta grid")
    vb.add_argument("--rhos", default=None, help="comma-separated correlation grid")
    vb.add_argument("--qmax", type=int, default=None)
    vb.add_argument("--moments", action="store_const", const=True, default=None,
                    help="also run the Monte Carlo moment grid")
    vb.add_argument("--moment-draws", dest="moment_draws", type=int, default=None)
    vb.set_defaults(func=cmd_verify_bounds)

    sw = sub.add_parser("sweep", help="estimate sample complexity over a grid")
    sw.add_argument("--config", default=None)
    sw.add_argument("--out", default=None)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--estimators", default=None, help="comma-separated estimator kinds")
    sw.add_argument("--d", type=int, nargs="+", default=None)
    sw.add_argument("--beta", nargs="+", default=None, help="values or the token 'inf'")
    sw.add_argument("--epsilon", type=float, nargs="+", default=None)
    sw.add_argument("--criterion", default=None,
                    choices=("probability_half", "expected_error", "median_error"))
    sw.add_argument("--trials", type=int, default=None)
    sw.add_argument("--confirm-factor", dest="confirm_factor", type=int, default=None)
    sw.add_argument("--n-cap", dest="n_cap", type=int, default=None)
    sw.add_argument("--fixed-truth", dest="fixed_truth", action="store_const", const=True,
                    default=None)
    sw.add_argument("--jobs", type=int, default=None)
    sw.add_argument("--strict", action="store_true")
    sw.add_argument("--timings", action="store_true",
                    help="write real wall times (breaks byte-reproducibility)")
    sw.set_defaults(func=cmd_sweep)

    es = sub.add_parser("estimate", help="run one estimator on a dataset file")
    es.add_argument("--input", required=True)
    es.add_argument("--estimator", required=True,
                    choices=("linear", "relu", "zero_one", "adaptive"))
    es.add_argument("--seed", type=int, default=0)
    es.add_argument("--restarts", type=int, default=3)
    es.add_argument("--max-iters", dest="max_iters", type=int, default=1500)
    es.add_argument("--exact-dim3", dest="exact_dim3", action="store_true")
    es.add_argument("--net-resolution", dest="net_resolution", type=float, default=0.01)
    es.set_defaults(func=cmd_estimate)

    sa = sub.add_parser("sample", help="draw a dataset and write the wire format")
    sa.add_argument("--d", type=int, required=True)
    sa.add_argument("--beta", required=True)
    sa.add_argument("--n", type=int, required=True)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--out", required=True)
    sa.set_defaults(func=cmd_sample)

    sc = sub.add_parser("schema-check", help="validate a CSV against its schema")
    sc.add_argument("path")
    sc.add_argument("--kind", choices=("sweep", "bounds", "auto"), default="auto")
    sc.set_defaults(func=cmd_schema_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
