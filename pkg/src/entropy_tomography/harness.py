"""Seeded Monte-Carlo experiments: recovery runs, scaling sweeps, matrix
Bernstein checks and population-solution checks, with CSV output."""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .bounds import (
    EPSILON_FLAVORS,
    RateContext,
    approx_rhs,
    bernstein_tail,
    epsilon_threshold,
)
from .designs import (
    KINDS,
    DesignDistribution,
    alignment_coefficient,
    design_constants,
    hvec,
    l2_pi_norm,
    lambda_coefficient,
    make_design,
    reference_gram,
)
from .estimator import SolverConfig, solve_entropy_penalized, solve_population
from .hermitian import DomainError, op_norm, schatten_norm
from .noise import NoiseModel, noise_constants, simulate_measurements
from .states import (
    fidelity,
    gibbs_tail,
    gibbs_truncate,
    hellinger_sq,
    random_density,
    random_projector,
    symmetrized_kl,
    trace_distance,
)

METRICS = ("l2pi", "hs", "trace", "hellinger", "kl-sym", "fidelity")
STATE_RECIPES = ("random", "uniform")
DEFAULT_FLAVOR = {"mc-uniform": "completion", "pauli": "pauli", "mc-entry": "bounded",
                  "gauss": "subgaussian", "rademacher": "subgaussian"}


@dataclass(frozen=True)
class ExperimentSpec:
    """One recovery experiment.

    The true state has the requested ``rank``; ``state="random"`` draws
    Exponential(1) eigenvalue weights, ``state="uniform"`` uses P_L / rank.
    Exactly one of ``epsilon`` (fixed) and ``epsilon_D`` (epsilon =
    D * eps_{n,m} of ``epsilon_flavor``) is set.
    """

    design: str = "pauli"
    m: int | None = None
    k: int | None = None
    rank: int = 1
    state: str = "random"
    noise: str = "gaussian"
    sigma: float = 0.1
    ns: tuple = (1000,)
    epsilon: float | None = None
    epsilon_D: float | None = 1.0
    epsilon_flavor: str | None = None
    t: float = 1.0
    reps: int = 10
    seed: int = 0
    known_design: bool = False
    metrics: tuple = ("l2pi", "hs", "trace")
    max_iter: int = 5000

    def __post_init__(self):
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        if self.design not in KINDS:
            raise ValueError(f"unknown design {self.design!r}; choose from {KINDS}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.ns or min(self.ns) < 1:
            raise ValueError("every n must be at least 1")
        if self.state not in STATE_RECIPES:
            raise ValueError(f"unknown state recipe {self.state!r}; choose from {STATE_RECIPES}")
        bad = set(self.metrics) - set(METRICS)
        if bad or not self.metrics:
            raise ValueError(f"unknown metrics {sorted(bad)}; choose from {METRICS}")
        if (self.epsilon is None) == (self.epsilon_D is None):
            raise ValueError("set exactly one of epsilon and epsilon_D")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.epsilon_D is not None and self.epsilon_D <= 0:
            raise ValueError("epsilon_D must be positive")
        if self.epsilon_flavor is not None and self.epsilon_flavor not in EPSILON_FLAVORS:
            raise ValueError(f"unknown epsilon flavor {self.epsilon_flavor!r}; choose from {EPSILON_FLAVORS}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        dist = self.dist()
        if not 1 <= self.rank <= dist.dim:
            raise ValueError(f"rank must lie in [1, {dist.dim}]")
        NoiseModel(self.noise, self.sigma)

    def dist(self) -> DesignDistribution:
        return _design(self.design, self.m, self.k)

    @property
    def flavor(self) -> str:
        return self.epsilon_flavor or DEFAULT_FLAVOR[self.design]

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@lru_cache(maxsize=32)
def _design(kind, m, k):
    return make_design(kind, m=m, k=k)


@lru_cache(maxsize=32)
def _constants(kind, m, k):
    return design_constants(_design(kind, m, k), np.random.default_rng(12345))


def rate_context(spec: ExperimentSpec, n: int) -> RateContext:
    """Rate context of ``spec`` at sample size ``n``.

    c_xi is the almost-sure noise bound when finite and the psi_2-based
    constant otherwise (Gaussian noise).
    """
    nc = noise_constants(NoiseModel(spec.noise, spec.sigma))
    c_xi = nc.c_xi_bound if math.isfinite(nc.c_xi_bound) else nc.c_xi_log
    dist = spec.dist()
    ctx = RateContext(m=dist.dim, n=n, t=spec.t, sigma_xi=nc.sigma_xi, c_xi=c_xi, psi1_xi=nc.psi1,
                      D=spec.epsilon_D or 1.0)
    if spec.flavor == "bounded":
        ctx = ctx.with_design(_constants(spec.design, spec.m, spec.k))
    return ctx


def resolve_epsilon(spec: ExperimentSpec, n: int) -> float:
    if spec.epsilon is not None:
        return float(spec.epsilon)
    return spec.epsilon_D * epsilon_threshold(rate_context(spec, n), spec.flavor)


def derive_seed(master: int, g: int, r: int) -> int:
    """64-bit stream seed for replication ``r`` at grid point ``g``."""
    state = np.random.SeedSequence([master, g, r]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def make_state(spec: ExperimentSpec, seed: int) -> np.ndarray:
    rng = np.random.default_rng([seed, 1])
    m = spec.dist().dim
    if spec.state == "uniform":
        return random_projector(m, spec.rank, rng) / spec.rank
    return random_density(m, spec.rank, rng)


def error_metrics(est: np.ndarray, rho: np.ndarray, dist: DesignDistribution, metrics) -> dict:
    """Squared L2(Pi) and Hilbert-Schmidt distances, nuclear norm distance,
    squared Hellinger distance, symmetrized KL (inf if either state is
    singular) and infidelity 1 - F."""
    out = {}
    for name in metrics:
        if name == "l2pi":
            out[name] = l2_pi_norm(dist, est - rho) ** 2
        elif name == "hs":
            out[name] = schatten_norm(est - rho, 2) ** 2
        elif name == "trace":
            out[name] = trace_distance(est, rho)
        elif name == "hellinger":
            out[name] = hellinger_sq(est, rho)
        elif name == "kl-sym":
            try:
                out[name] = max(0.0, symmetrized_kl(est, rho))
            except DomainError:
                out[name] = math.inf
        elif name == "fidelity":
            out[name] = max(0.0, 1.0 - fidelity(est, rho))
    return out


@dataclass
class ResultRow:
    spec_hash: str
    axis: str
    x: float
    n: int
    rank: int
    sigma: float
    m: int
    rep: int
    seed: int
    epsilon: float
    metrics: dict
    iterations: int
    residual: float
    tol_stat: float
    converged: bool
    monotone: bool
    wall_time: float


BASE_COLUMNS = ("spec_hash", "axis", "x", "n", "rank", "sigma", "m", "rep", "seed", "epsilon")
TAIL_COLUMNS = ("iterations", "residual", "tol_stat", "converged", "monotone", "wall_time")
TIMING_COLUMNS = ("wall_time",)


def _run_point(spec: ExperimentSpec, n: int, g: int, r: int, axis: str, x: float) -> ResultRow:
    dist = spec.dist()
    seed = derive_seed(spec.seed, g, r)
    rho = make_state(spec, seed)
    eps = resolve_epsilon(spec, n)
    start = time.perf_counter()
    data = simulate_measurements(rho, dist, NoiseModel(spec.noise, spec.sigma), n, seed)
    cfg = SolverConfig(epsilon=eps, max_iter=spec.max_iter)
    res = solve_entropy_penalized(data, dist if spec.known_design else None, cfg)
    wall = time.perf_counter() - start
    tr = np.asarray(res.objective_trace)
    monotone = bool(np.all(np.diff(tr) <= 1e-12 * np.maximum(1.0, np.abs(tr[:-1]))))
    return ResultRow(spec.digest(), axis, float(x), n, spec.rank, spec.sigma, dist.dim, r, seed, eps,
                     error_metrics(res.estimate, rho, dist, spec.metrics), res.iterations,
                     res.stationarity_residual, res.tol_stat, res.converged, monotone, wall)


def _run_tasks(tasks, workers: int):
    if workers <= 1:
        return [_run_point(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda t: _run_point(*t), tasks))


def run_recovery(spec: ExperimentSpec, *, workers: int = 1) -> list[ResultRow]:
    """Simulate, estimate and score every (n, replication) of ``spec``.

    Solver failures are kept as rows with ``converged=False``.  Results do
    not depend on ``workers``: every replication has its own derived seed.
    """
    tasks = [(spec, n, g, r, "n", n) for g, n in enumerate(spec.ns) for r in range(spec.reps)]
    return _run_tasks(tasks, workers)


@dataclass
class SweepReport:
    axis: str
    x: np.ndarray
    median: np.ndarray
    slope: float
    ci: tuple
    rows: list = field(repr=False, default_factory=list)


SWEEP_AXES = ("n", "rank", "m", "sigma")


def ols_slope(x, y) -> float:
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def run_scaling_sweep(spec: ExperimentSpec, axis: str, values, *, metric: str = "l2pi",
                      n_boot: int = 1000, workers: int = 1) -> SweepReport:
    """Log-log OLS slope of the median error against ``axis``, with a
    percentile bootstrap interval from resampling replications."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown axis {axis!r}; choose from {SWEEP_AXES}")
    values = [float(v) for v in values]
    if len(set(values)) < 3 or min(values) <= 0:
        raise ValueError("a sweep needs at least 3 distinct positive grid values")
    if metric not in spec.metrics:
        spec = replace(spec, metrics=spec.metrics + (metric,))
    tasks = []
    for g, v in enumerate(values):
        if axis == "n":
            s = replace(spec, ns=(int(v),))
        elif axis == "rank":
            s = replace(spec, rank=int(v))
        elif axis == "sigma":
            s = replace(spec, sigma=v)
        else:
            s = replace(spec, m=int(v), k=None) if spec.design != "pauli" else replace(spec, m=None, k=int(round(math.log2(v))))
        tasks += [(s, s.ns[0], g, r, axis, v) for r in range(spec.reps)]
    rows = _run_tasks(tasks, workers)
    errs = np.array([[rw.metrics[metric] for rw in rows if rw.x == v] for v in values])
    med = np.median(errs, axis=1)
    slope = ols_slope(values, med)
    rng = np.random.default_rng([spec.seed, 0xB007])
    boots = []
    for _ in range(n_boot):
        idx = rng.integers(0, errs.shape[1], size=errs.shape)
        boots.append(ols_slope(values, np.median(np.take_along_axis(errs, idx, axis=1), axis=1)))
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
    return SweepReport(axis, np.array(values), med, slope, ci, rows)


def calibrate_D(spec: ExperimentSpec, grid=(0.01, 0.03, 0.1, 0.3, 1.0, 3.0), *, n: int | None = None,
                metric: str = "l2pi", workers: int = 1) -> tuple[float, dict]:
    """Pick the D in ``grid`` with the smallest median error at a pilot point.

    The pilot uses its own seed namespace so it does not reuse the
    replications of the experiment being calibrated.
    """
    n = n or spec.ns[0]
    scores = {}
    for D in grid:
        s = replace(spec, epsilon=None, epsilon_D=float(D), ns=(n,), seed=(spec.seed + 0x5EED) % 2**64)
        rows = run_recovery(s, workers=workers)
        scores[float(D)] = float(np.median([r.metrics[metric] for r in rows]))
    return min(scores, key=scores.get), scores


# --- matrix Bernstein --------------------------------------------------------


@dataclass
class BernsteinTable:
    t: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    allowance: np.ndarray
    violations: int
    sigma_X: float
    U: float


def run_bernstein_suite(dist: DesignDistribution, n: int, reps: int, t_grid=None,
                        rng: np.random.Generator | int = 0) -> BernsteinTable:
    """Empirical tail of ||sum_i (X_i - EX)|| / n against 2m exp(-s^2/(2 sigma^2 n + 2 U s/3)).

    The bound is evaluated at s = n t (the sum scale).  sigma_X and U are
    exact for the centered summands.  A violation is an empirical frequency
    above bound + 3 sqrt(bound (1 - bound) / reps) where the bound is <= 1.
    """
    if not dist.is_basis:
        raise ValueError("the bounded Bernstein check needs a finite-support design")
    rng = np.random.default_rng(rng)
    m = dist.dim
    ex = np.einsum("k,kij->ij", dist.probs, dist.support)
    cent = dist.support - ex
    sigma = math.sqrt(op_norm(np.einsum("k,kij,kjl->il", dist.probs, cent, cent)))
    U = max(op_norm(c) for c in cent)
    counts = rng.multinomial(n, dist.probs, size=reps).astype(float)
    sums = np.einsum("rk,kij->rij", counts, dist.support) - n * ex
    dev = np.abs(np.linalg.eigvalsh(sums)).max(axis=1) / n
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.1 * dev.max(), 21)[1:]
    t_grid = np.asarray(t_grid, dtype=float)
    emp = np.array([np.mean(dev >= t) for t in t_grid])
    bound = np.array([bernstein_tail(n * t, n, m, sigma, U) for t in t_grid])
    pb = np.clip(bound, 0.0, 1.0)
    allow = 3.0 * np.sqrt(pb * (1.0 - pb) / reps)
    viol = int(np.sum((bound <= 1.0) & (emp > bound + allow)))
    return BernsteinTable(t_grid, emp, bound, allow, viol, sigma, U)


# --- population solution checks ---------------------------------------------


@dataclass
class PopulationRow:
    epsilon: float
    error_sq: float
    penalty_norm_rhs: float
    kl_sym: float
    alignment_lhs: float
    alignment_rhs: float
    low_rank_ratio: float
    gibbs_ratio: float
    iterations: int
    residual: float
    converged: bool

    @property
    def penalty_norm_ok(self) -> bool:
        return self.error_sq <= self.penalty_norm_rhs + 1e-6

    @property
    def alignment_ok(self) -> bool:
        return self.alignment_lhs <= self.alignment_rhs + 1e-6


def run_population_props(dist: DesignDistribution, rho: np.ndarray, eps_grid, *, r: int | None = None,
                         cfg: SolverConfig | None = None) -> list[PopulationRow]:
    """Solve the population problem along ``eps_grid`` and compare with the
    constant-free approximation bounds; the constant-carrying ones are
    reported as ratios (with C = 1).

    ``rho`` must be full rank.  The Gibbs comparison uses H = -log(rho),
    truncated to its ``r`` lowest energies (default m // 2).
    """
    m = dist.dim
    w, v = np.linalg.eigh(rho)
    if w[0] <= 0:
        raise DomainError("population checks need a full-rank state")
    log_rho = (v * np.log(w)) @ v.conj().T
    ln = op_norm(log_rho)
    a_log = alignment_coefficient(dist, log_rho)
    lam_full = lambda_coefficient(dist, np.eye(m))
    e_norm = float(np.dot(dist.probs, [op_norm(x) ** 2 for x in dist.support])) if dist.is_basis else \
        _constants(dist.kind, m, dist.qubits).E_norm_sq
    r = m // 2 if r is None else r
    h = -log_rho
    h_low, _ = gibbs_truncate(h, r)
    a_h = alignment_coefficient(dist, h_low)
    moment = max(l2_pi_norm(dist, np.outer(v[:, j], v[:, j].conj())) ** 2 for j in range(m))
    delta = gibbs_tail(h, r)
    ctx = RateContext(m=m, n=1)
    k = reference_gram(dist)
    out = []
    for eps in eps_grid:
        res = solve_population(rho, dist, float(eps), cfg)
        d = hvec(res.estimate - rho)
        err = float(d @ k @ d)
        try:
            ks = symmetrized_kl(res.estimate, rho)
        except DomainError:
            ks = math.inf
        lhs43 = float(err + 0.5 * eps * ks)
        rhs41 = approx_rhs(ctx, "penalty-norm", {"epsilon": eps, "log_S_norm": ln})
        rhs43 = approx_rhs(ctx, "alignment", {"epsilon": eps, "a_log_S": a_log})
        rhs44 = approx_rhs(ctx, "low-rank", {"epsilon": eps, "Lambda": lam_full, "rank": m, "E_norm_sq": e_norm})
        rhs45 = approx_rhs(ctx, "gibbs", {"epsilon": eps, "diag_moment": moment, "delta_r": delta, "a_H": a_h})
        out.append(PopulationRow(float(eps), err, rhs41, ks, lhs43, rhs43, err / rhs44, err / rhs45,
                                 res.iterations, res.stationarity_residual, res.converged))
    return out


# --- output ------------------------------------------------------------------


def _columns(rows, metrics=None):
    if metrics is None:
        metrics = [m for m in METRICS if rows and m in rows[0].metrics] if rows else list(METRICS)
    return list(BASE_COLUMNS) + list(metrics) + list(TAIL_COLUMNS)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def row_values(row: ResultRow, columns) -> list[str]:
    d = {**{f.name: getattr(row, f.name) for f in fields(row)}, **row.metrics}
    return [_fmt(d[c]) for c in columns]


def emit_csv(rows: list[ResultRow], path, metrics=None) -> Path:
    """Write rows with a fixed column order; empty input gives a header-only file."""
    path = Path(path)
    cols = _columns(rows, metrics)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow(row_values(r, cols))
    except OSError as exc:
        raise OSError(f"could not write results to {path}: {exc}") from exc
    return path


def read_csv(path) -> list[ResultRow]:
    """Parse a file written by :func:`emit_csv` back into rows."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            metrics = [c for c in reader.fieldnames if c in METRICS]
            recs = list(reader)
    except OSError as exc:
        raise OSError(f"could not read results from {path}: {exc}") from exc
    out = []
    for d in recs:
        out.append(ResultRow(
            d["spec_hash"], d["axis"], float(d["x"]), int(d["n"]), int(d["rank"]), float(d["sigma"]),
            int(d["m"]), int(d["rep"]), int(d["seed"]), float(d["epsilon"]),
            {k: float(d[k]) for k in metrics}, int(d["iterations"]), float(d["residual"]),
            float(d["tol_stat"]), d["converged"] == "true", d["monotone"] == "true", float(d["wall_time"]),
        ))
    return out


def emit_plotdata(rows: list[ResultRow], path, metric: str = "l2pi") -> Path:
    """Per axis point: x, median, q25, q75 of ``metric``."""
    path = Path(path)
    xs = sorted({r.x for r in rows})
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["axis", "x", "median", "q25", "q75"])
            for x in xs:
                vals = np.array([r.metrics[metric] for r in rows if r.x == x])
                axis = next(r.axis for r in rows if r.x == x)
                q25, med, q75 = np.percentile(vals, [25, 50, 75])
                w.writerow([axis, repr(x), repr(float(med)), repr(float(q25)), repr(float(q75))])
    except OSError as exc:
        raise OSError(f"could not write plot data to {path}: {exc}") from exc
    return path


# --- config files ------------------------------------------------------------


def _coerce(name: str, raw: str):
    if name in ("ns", "metrics"):
        parts = [p.strip() for p in raw.replace(";", ",").split(",") if p.strip()]
        return tuple(int(p) for p in parts) if name == "ns" else tuple(parts)
    if name in ("m", "k", "rank", "reps", "seed", "max_iter"):
        return int(raw)
    if name in ("sigma", "epsilon", "epsilon_D", "t"):
        return float(raw)
    if name == "known_design":
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw.strip()


def load_config(path) -> dict:
    """Read an INI file whose ``[experiment]`` section mirrors ExperimentSpec fields.

    Other sections are returned verbatim (e.g. ``[sweep]`` with ``axis`` and
    ``values``).
    """
    path = Path(path)
    cp = configparser.ConfigParser()
    try:
        with path.open() as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise OSError(f"could not read config {path}: {exc}") from exc
    names = {f.name for f in fields(ExperimentSpec)}
    out = {"experiment": {}}
    for sec in cp.sections():
        if sec == "experiment":
            for key, raw in cp[sec].items():
                if key not in names:
                    raise ValueError(f"{path}: unknown experiment field {key!r}")
                out["experiment"][key] = _coerce(key, raw)
        else:
            out[sec] = dict(cp[sec])
    return out
