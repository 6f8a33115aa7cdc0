"""Command-line interface: ``entropy-tomography <command> ...``.

Exit status is 0 only when every hard check of the command passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import bounds
from .designs import KINDS, design_constants, make_design
from .estimator import SolverConfig, solve_entropy_penalized, write_estimate
from .harness import (
    SWEEP_AXES,
    ExperimentSpec,
    emit_csv,
    emit_plotdata,
    load_config,
    make_state,
    rate_context,
    derive_seed,
    run_bernstein_suite,
    run_population_props,
    run_recovery,
    run_scaling_sweep,
)
from .noise import NOISE_KINDS, NoiseModel, read_dataset, simulate_measurements, write_dataset
from .states import random_density

RESULT_COLUMNS_HELP = """\
result CSV columns (fixed order):
  spec_hash   12-hex digest of the experiment spec
  axis, x     sweep axis and its value ("n" and n for plain runs)
  n, rank, sigma, m, rep, seed, epsilon
  <metrics>   requested error metrics: l2pi and hs are squared distances,
              trace is ||est - rho||_1, hellinger is H^2, kl-sym the
              symmetrized KL divergence, fidelity is 1 - F
  iterations, residual, tol_stat, converged, monotone, wall_time
"""

ESTIMATE_HELP = """\
estimate CSV: '# key=value' metadata lines (epsilon, iterations,
stationarity_residual, tol_stat, converged), then columns i,j,re,im with one
row per matrix entry.
"""


def _epsilon(text: str | None) -> dict:
    if text is None:
        return {}
    if text.startswith("auto:"):
        return {"epsilon": None, "epsilon_D": float(text[5:])}
    return {"epsilon": float(text), "epsilon_D": None}


def _ints(text: str) -> tuple:
    return tuple(int(float(p)) for p in text.split(",") if p.strip())


def _floats(text: str) -> list:
    return [float(p) for p in text.split(",") if p.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file with an [experiment] section; flags override it")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", default=None, help="output directory (default: current directory)")
    p.add_argument("--design", choices=KINDS)
    p.add_argument("--m", type=int, help="matrix dimension")
    p.add_argument("--k", type=int, help="number of qubits (Pauli design, m = 2**k)")
    p.add_argument("--n", help="sample size, or comma-separated list")
    p.add_argument("--rank", type=int)
    p.add_argument("--sigma", type=float, help="noise scale (std for gaussian, bound otherwise)")
    p.add_argument("--noise", choices=NOISE_KINDS)
    p.add_argument("--epsilon", help="fixed value, or auto:D for D * eps_{n,m}")
    p.add_argument("--flavor", choices=bounds.EPSILON_FLAVORS, help="eps_{n,m} flavor for auto:D")
    p.add_argument("--reps", type=int)
    p.add_argument("--state", choices=("random", "uniform"))
    p.add_argument("--workers", type=int, default=1)


def _spec(args) -> tuple[ExperimentSpec, dict]:
    cfg = load_config(args.config) if args.config else {"experiment": {}}
    d = dict(cfg["experiment"])
    flag_map = {"design": "design", "m": "m", "k": "k", "rank": "rank", "sigma": "sigma",
                "noise": "noise", "reps": "reps", "seed": "seed", "flavor": "epsilon_flavor", "state": "state"}
    for flag, name in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            d[name] = v
    if getattr(args, "n", None):
        d["ns"] = _ints(args.n)
    d.update(_epsilon(getattr(args, "epsilon", None)))
    if "epsilon" in d and "epsilon_D" not in d:
        d["epsilon_D"] = None
    return ExperimentSpec(**d), cfg


def _dist(args, default_kind: str, default_m: int):
    kind = args.design or default_kind
    if args.m is None and args.k is None:
        return make_design(kind, m=default_m)
    return make_design(kind, m=args.m, k=args.k)


def _outdir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _row_checks(rows) -> list[str]:
    bad = []
    for r in rows:
        if not r.monotone:
            bad.append(f"objective increased (n={r.n}, rep={r.rep})")
        if r.converged and not r.residual <= r.tol_stat:
            bad.append(f"converged solve with residual {r.residual:.3e} > {r.tol_stat:.3e}")
    return bad


def _finish(problems: list[str]) -> int:
    for p in problems:
        print(f"FAIL: {p}", file=sys.stderr)
    return 1 if problems else 0


def cmd_simulate(args) -> int:
    spec, _ = _spec(args)
    out = _outdir(args)
    rows = run_recovery(spec, workers=args.workers)
    emit_csv(rows, out / "results.csv")
    (out / "spec.json").write_text(json.dumps(asdict(spec), indent=2, default=list))
    if args.save_data:
        seed = derive_seed(spec.seed, 0, 0)
        rho = make_state(spec, seed)
        data = simulate_measurements(rho, spec.dist(), NoiseModel(spec.noise, spec.sigma), spec.ns[0], seed)
        write_dataset(data, out / "dataset.csv")
    nconv = sum(r.converged for r in rows)
    print(f"{len(rows)} rows ({nconv} converged) -> {out / 'results.csv'}")
    return _finish(_row_checks(rows))


def cmd_estimate(args) -> int:
    data = read_dataset(args.data)
    meta = data.meta
    eps_text = args.epsilon or "auto:1"
    if eps_text.startswith("auto:"):
        spec = ExperimentSpec(design=meta["design"], m=meta["m"] if meta["design"] != "pauli" else None,
                              k=meta.get("k"), noise=meta["noise"],
                              sigma=args.sigma if args.sigma is not None else meta["noise_scale"],
                              ns=(data.n,), epsilon_D=float(eps_text[5:]), epsilon_flavor=args.flavor)
        eps = spec.epsilon_D * bounds.epsilon_threshold(rate_context(spec, data.n), spec.flavor)
    else:
        eps = float(eps_text)
    dist = make_design(meta["design"], m=meta["m"], k=meta.get("k")) if args.known_design else None
    res = solve_entropy_penalized(data, dist, SolverConfig(epsilon=eps, max_iter=args.max_iter))
    out = _outdir(args)
    path = write_estimate(res, out / "estimate.csv", {"n": data.n, "m": data.dim})
    print(f"epsilon={eps:.6g} iterations={res.iterations} residual={res.stationarity_residual:.3e} "
          f"converged={res.converged} -> {path}")
    tr = np.asarray(res.objective_trace)
    problems = [] if np.all(np.diff(tr) <= 1e-12 * np.maximum(1.0, np.abs(tr[:-1]))) else ["objective increased"]
    return _finish(problems)


def cmd_sweep(args) -> int:
    spec, cfg = _spec(args)
    sweep_cfg = cfg.get("sweep", {})
    axis = args.axis or sweep_cfg.get("axis")
    if axis is None:
        raise SystemExit("sweep needs --axis")
    values = _floats(args.values or sweep_cfg.get("values", ""))
    if not values and axis == "n":
        values = list(spec.ns)
    rep = run_scaling_sweep(spec, axis, values, workers=args.workers)
    out = _outdir(args)
    emit_csv(rep.rows, out / f"sweep_{axis}.csv")
    emit_plotdata(rep.rows, out / f"sweep_{axis}_plot.csv")
    summary = {"axis": axis, "x": rep.x.tolist(), "median": rep.median.tolist(), "slope": rep.slope,
               "ci": list(rep.ci)}
    (out / f"sweep_{axis}.json").write_text(json.dumps(summary, indent=2))
    print(f"axis={axis} slope={rep.slope:.3f} 95% CI=({rep.ci[0]:.3f}, {rep.ci[1]:.3f})")
    problems = _row_checks(rep.rows)
    if args.expect_slope:
        lo, hi = _floats(args.expect_slope)
        if not lo <= rep.slope <= hi:
            problems.append(f"slope {rep.slope:.3f} outside [{lo}, {hi}]")
    return _finish(problems)


def cmd_bernstein(args) -> int:
    dist = _dist(args, "mc-uniform", 4)
    n = int(args.n or 50)
    reps = args.reps or 10**4
    tab = run_bernstein_suite(dist, n, reps, rng=args.seed or 0)
    out = _outdir(args)
    with (out / "bernstein.csv").open("w") as fh:
        fh.write("t,empirical,bound,allowance\n")
        for row in zip(tab.t, tab.empirical, tab.bound, tab.allowance):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    print(f"sigma_X={tab.sigma_X:.4g} U={tab.U:.4g} violations={tab.violations}/{len(tab.t)}")
    return _finish([f"{tab.violations} Bernstein violations"] if tab.violations else [])


def cmd_popcheck(args) -> int:
    dist = _dist(args, "pauli", 4)
    rng = np.random.default_rng(args.seed or 0)
    rho = random_density(dist.dim, dist.dim, rng)
    grid = _floats(args.eps_grid) if args.eps_grid else np.geomspace(1e-3, 1e-1, 8)
    rows = run_population_props(dist, rho, grid)
    out = _outdir(args)
    cols = ["epsilon", "error_sq", "penalty_norm_rhs", "alignment_lhs", "alignment_rhs", "low_rank_ratio",
            "gibbs_ratio", "iterations", "residual", "converged"]
    with (out / "popcheck.csv").open("w") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(repr(getattr(r, c)) for c in cols) + "\n")
    problems = []
    for r in rows:
        if not r.penalty_norm_ok:
            problems.append(f"penalty-norm bound violated at epsilon={r.epsilon:.3g}")
        if not r.alignment_ok:
            problems.append(f"alignment bound violated at epsilon={r.epsilon:.3g}")
    print(f"{len(rows)} epsilon values, {len(problems)} violations -> {out / 'popcheck.csv'}")
    return _finish(problems)


def cmd_bounds(args) -> int:
    ctx = bounds.RateContext(m=args.m or 4, n=int(args.n or 1000), t=args.t, sigma_xi=args.sigma,
                             c_xi=args.c_xi, psi1_xi=args.psi1, C=args.C, D=args.D)
    if args.design:
        dist = make_design(args.design, m=ctx.m)
        ctx = ctx.with_design(design_constants(dist))
    tag = args.theorem
    if tag.startswith("epsilon:"):
        comps = bounds.epsilon_components(ctx, tag.split(":", 1)[1], unbounded_noise=args.unbounded)
        print(f"{tag},{max(comps.values())!r}," + ",".join(f"{k}={v!r}" for k, v in comps.items()))
        return 0
    info_fields = {f.name: f for f in fields(bounds.OracleInfo)}
    info = {}
    for item in args.set or []:
        key, _, val = item.partition("=")
        if key not in info_fields:
            raise SystemExit(f"unknown oracle field {key!r}; choose from {sorted(info_fields)}")
        info[key] = float(val)
    rep = bounds.oracle_rhs(ctx, tag, bounds.OracleInfo(**info), unbounded_noise=args.unbounded)
    print(",".join(rep.csv_header()))
    print(",".join(repr(v) if isinstance(v, float) else str(v) for v in rep.csv_row()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entropy-tomography",
                                description="Entropy-penalized density matrix estimation experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a recovery experiment and write result rows",
                       epilog=RESULT_COLUMNS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _common(s)
    s.add_argument("--save-data", action="store_true", help="also write the first replication's dataset")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate a state from one dataset CSV",
                       epilog=ESTIMATE_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    e.add_argument("--data", required=True, help="dataset CSV written by 'simulate --save-data'")
    e.add_argument("--epsilon", help="fixed value, or auto:D (default auto:1)")
    e.add_argument("--flavor", choices=bounds.EPSILON_FLAVORS)
    e.add_argument("--sigma", type=float, help="noise scale for auto:D (default: from the dataset metadata)")
    e.add_argument("--known-design", action="store_true", help="use the exact L2(Pi) norm of the design")
    e.add_argument("--max-iter", type=int, default=5000)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_estimate)

    w = sub.add_parser("sweep", help="scaling sweep with log-log slope",
                       epilog=RESULT_COLUMNS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _common(w)
    w.add_argument("--axis", choices=SWEEP_AXES)
    w.add_argument("--values", help="comma-separated grid values for the axis")
    w.add_argument("--expect-slope", help="lo,hi: fail unless the slope lies in [lo, hi]")
    w.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bernstein", help="Monte-Carlo check of the matrix Bernstein tail bound")
    _common(b)
    b.set_defaults(func=cmd_bernstein)

    c = sub.add_parser("popcheck", help="population-solution approximation bounds along an epsilon grid")
    _common(c)
    c.add_argument("--eps-grid", help="comma-separated epsilon values (default: 8 log-spaced in [1e-3, 1e-1])")
    c.set_defaults(func=cmd_popcheck)

    o = sub.add_parser("bounds", help="evaluate one error bound or epsilon threshold",
                       epilog="tags: " + ", ".join(sorted(bounds.DISPLAYS))
                       + "; epsilon:<flavor> for thresholds")
    o.add_argument("--theorem", required=True, help="bound tag, or epsilon:<flavor>")
    o.add_argument("--m", type=int)
    o.add_argument("--n")
    o.add_argument("--t", type=float, default=1.0)
    o.add_argument("--sigma", type=float)
    o.add_argument("--c-xi", type=float)
    o.add_argument("--psi1", type=float)
    o.add_argument("--C", type=float, default=1.0)
    o.add_argument("--D", type=float, default=1.0)
    o.add_argument("--design", choices=KINDS, help="fill design constants from this design")
    o.add_argument("--unbounded", action="store_true", help="psi_1 variant for unbounded noise")
    o.add_argument("--set", action="append", metavar="FIELD=VALUE",
                   help="oracle field (approx_error_sq, epsilon, rank, a_log_S, tail_norm, ...)")
    o.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
