"""Entropy-penalized least squares over density matrices and baselines.

All objectives handled here share one shape: a quadratic in the real
coordinates ``s = hvec(S)``,

    q(s) = s @ Q @ s - 2 b @ s + c0,

plus ``epsilon * tr(S log S)``.  The empirical risk, the known-design risk and
the population risk only differ in (Q, b, c0), so one solver covers them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .designs import DesignDistribution, hunvec, hvec, reference_gram
from .hermitian import EIG_FLOOR, from_spectrum
from .noise import Dataset
from .states import entropy_penalty


class SolverError(RuntimeError):
    pass


@dataclass
class SolverConfig:
    """Solver settings; ``tol_stat=None`` means 1e-6 * (1 + data scale)."""

    epsilon: float
    max_iter: int = 5000
    tol_obj: float = 1e-10
    tol_stat: float | None = None
    step_init: float = 1.0
    backtrack_factor: float = 0.5
    eig_floor: float = EIG_FLOOR

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.tol_obj <= 0 or (self.tol_stat is not None and self.tol_stat <= 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.step_init <= 0:
            raise ValueError("max_iter and step_init must be positive")


@dataclass
class EstimateResult:
    estimate: np.ndarray
    objective_trace: list = field(default_factory=list)
    stationarity_residual: float = float("nan")
    iterations: int = 0
    converged: bool = False
    tol_stat: float = float("nan")
    epsilon: float = 0.0


@dataclass(frozen=True)
class QuadraticModel:
    """q(s) = s @ Q @ s - 2 b @ s + c0 on coordinates of m x m Hermitian matrices."""

    Q: np.ndarray
    b: np.ndarray
    c0: float
    m: int

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.c0)) if self.c0 > 0 else float(np.linalg.norm(self.b))

    def value(self, s: np.ndarray) -> float:
        return float(s @ self.Q @ s - 2.0 * self.b @ s + self.c0)

    def grad(self, s: np.ndarray) -> np.ndarray:
        return 2.0 * (self.Q @ s - self.b)


def empirical_model(data: Dataset) -> QuadraticModel:
    phi = data.coords()
    y = data.responses
    n = data.n
    return QuadraticModel(phi.T @ phi / n, phi.T @ y / n, float(y @ y / n), data.dim)


def known_design_model(data: Dataset, dist: DesignDistribution) -> QuadraticModel:
    phi = data.coords()
    return QuadraticModel(reference_gram(dist), phi.T @ data.responses / data.n, 0.0, data.dim)


def population_model(rho: np.ndarray, dist: DesignDistribution) -> QuadraticModel:
    k = reference_gram(dist)
    r = hvec(rho)
    return QuadraticModel(k, k @ r, float(r @ k @ r), dist.dim)


# --- objectives and gradients ------------------------------------------------


def empirical_objective(s: np.ndarray, data: Dataset, epsilon: float) -> float:
    """n^-1 sum_j (Y_j - tr(S X_j))^2 + epsilon tr(S log S)."""
    fit = data.coords() @ hvec(s)
    val = float(np.mean((data.responses - fit) ** 2))
    return val + epsilon * entropy_penalty(s) if epsilon else val


def population_objective(s: np.ndarray, dist: DesignDistribution, data: Dataset, epsilon: float) -> float:
    """||S||^2_L2(Pi) - (2/n) sum_j Y_j tr(S X_j) + epsilon tr(S log S)."""
    val = known_design_model(data, dist).value(hvec(s))
    return val + epsilon * entropy_penalty(s) if epsilon else val


def _entropy_grad(s: np.ndarray, floor: float) -> np.ndarray:
    w, v = np.linalg.eigh(np.asarray(s, dtype=complex))
    return from_spectrum(np.log(np.maximum(w, floor)) + 1.0, v)


def model_gradient(s: np.ndarray, model: QuadraticModel, epsilon: float, floor: float = EIG_FLOOR) -> np.ndarray:
    g = hunvec(model.grad(hvec(s)), model.m)
    if epsilon:
        g = g + epsilon * _entropy_grad(s, floor)
    return g


def gradient_empirical(s: np.ndarray, data: Dataset, epsilon: float, floor: float = EIG_FLOOR) -> np.ndarray:
    """(2/n) sum_j (<S, X_j> - Y_j) X_j + epsilon (log S + I), eigenvalues floored."""
    return model_gradient(s, empirical_model(data), epsilon, floor)


def stationarity_residual(s: np.ndarray, grad: np.ndarray) -> float:
    """Operator norm of the traceless part of the gradient."""
    g = np.asarray(grad)
    m = g.shape[0]
    t = g - np.real(np.trace(g)) / m * np.eye(m)
    return float(np.abs(np.linalg.eigvalsh(0.5 * (t + t.conj().T))).max())


def variational_gap(s: np.ndarray, grad: np.ndarray) -> float:
    """max over pure states v v* of <G, S - v v*>, clipped at zero."""
    g = 0.5 * (grad + np.asarray(grad).conj().T)
    return max(0.0, float(np.real(np.vdot(g, s)) - np.linalg.eigvalsh(g)[0]))


# --- solvers -----------------------------------------------------------------


def _normalized_exp(mlog: np.ndarray):
    """Return (S, log S, tr(S log S)) for S = exp(M) / tr exp(M)."""
    mu, v = np.linalg.eigh(mlog)
    top = mu.max()
    lse = top + np.log(np.sum(np.exp(mu - top)))
    logw = mu - lse
    w = np.exp(logw)
    s = from_spectrum(w, v)
    return s, from_spectrum(logw, v), float(np.sum(w * logw))


def _tol(cfg: SolverConfig, model: QuadraticModel) -> float:
    return cfg.tol_stat if cfg.tol_stat is not None else 1e-6 * (1.0 + model.scale)


def mirror_descent(model: QuadraticModel, cfg: SolverConfig, start: np.ndarray | None = None) -> EstimateResult:
    """Extrapolated entropic mirror descent with backtracking and restarts.

    The iterate is carried as its logarithm M = log S, so eigenvalues far
    below the floating-point floor stay exact.  Each step extrapolates
    Y = M + beta (M - M_prev), then takes S' = exp(Y - eta G(Y)) / tr(...).
    The trial step doubles after every iteration and halves until the
    objective lies under its relative-entropy majorizer at Y.  A step that
    would raise the objective is discarded and the momentum reset, so the
    recorded objective never increases.  Without extrapolation the null
    directions of a rank-deficient target decay only like 1/t.
    """
    eps = cfg.epsilon
    m = model.m
    tol = _tol(cfg, model)
    eye = np.eye(m)
    slack = 1e-13

    if start is None:
        mlog = -np.log(m) * np.eye(m, dtype=complex)
    else:
        w, v = np.linalg.eigh(start)
        mlog = from_spectrum(np.log(np.maximum(w, cfg.eig_floor)), v)

    def evaluate(mlog):
        s, mlog, ent = _normalized_exp(mlog)
        sv = hvec(s)
        f = model.value(sv) + eps * ent
        if not np.isfinite(f):
            raise SolverError("objective became non-finite")
        return s, mlog, sv, f

    def gradient(sv, mlog):
        return hunvec(model.grad(sv), m) + eps * (mlog + eye)

    s, mlog, sv, f = evaluate(mlog)
    trace = [f]
    g = gradient(sv, mlog)
    res = stationarity_residual(s, g)
    prev = mlog
    eta = cfg.step_init
    k = 0
    it = 0
    while res > tol and it < cfg.max_iter:
        it += 1
        k += 1
        beta = (k - 1.0) / (k + 2.0)
        if beta > 0:
            sy, ylog, yv, fy = evaluate(mlog + beta * (mlog - prev))
            gy = gradient(yv, ylog)
        else:
            sy, ylog, fy, gy = s, mlog, f, g
        eta = min(2.0 * eta, 1e12)
        for _ in range(80):
            s_new, mlog_new, sv_new, f_new = evaluate(ylog - eta * gy)
            # Bregman majorization: f(S') <= f(Y) + <G(Y), S'-Y> + KL(S'||Y) / eta
            lin = float(np.real(np.vdot(gy, s_new - sy)))
            kl = float(np.real(np.vdot(mlog_new - ylog, s_new)))
            if f_new - fy <= lin + kl / eta + slack * max(1.0, abs(fy)):
                break
            eta *= cfg.backtrack_factor
        else:
            break
        if f_new > f + slack * max(1.0, abs(f)):
            if beta == 0:
                break
            k = 0
            prev = mlog
            continue
        prev = mlog
        s, mlog, sv, f = s_new, mlog_new, sv_new, f_new
        trace.append(f)
        g = gradient(sv, mlog)
        res = stationarity_residual(s, g)
    return EstimateResult(s, trace, res, it, res <= tol, tol, eps)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    r = np.nonzero(u - css / k > 0)[0][-1]
    return np.maximum(v - css[r] / (r + 1.0), 0.0)


def project_density(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest density matrix: eigenvalues projected onto the simplex."""
    w, v = np.linalg.eigh(0.5 * (a + np.asarray(a).conj().T))
    return from_spectrum(_project_simplex(w), v)


def projected_gradient(model: QuadraticModel, cfg: SolverConfig) -> EstimateResult:
    """Projected gradient for the unpenalized problem, certified by the variational gap."""
    m = model.m
    tol = _tol(cfg, model)
    s = np.eye(m, dtype=complex) / m
    sv = hvec(s)
    f = model.value(sv)
    trace = [f]
    lip = 2.0 * max(np.linalg.eigvalsh(model.Q).max(), 1e-300)
    eta = cfg.step_init / lip
    gv = model.grad(sv)
    res = variational_gap(s, hunvec(gv, m))
    it = 0
    while res > tol and it < cfg.max_iter:
        it += 1
        eta = min(2.0 * eta, 1e3 / lip)
        for _ in range(80):
            s_new = project_density(s - eta * hunvec(gv, m))
            sv_new = hvec(s_new)
            f_new = model.value(sv_new)
            d = sv_new - sv
            if f_new <= f + gv @ d + d @ d / (2.0 * eta) + 1e-13 * max(1.0, abs(f)):
                break
            eta *= cfg.backtrack_factor
        s, sv = s_new, sv_new
        f = min(f, f_new)
        trace.append(f)
        gv = model.grad(sv)
        res = variational_gap(s, hunvec(gv, m))
    return EstimateResult(s, trace, res, it, res <= tol, tol, 0.0)


def solve_model(model: QuadraticModel, cfg: SolverConfig) -> EstimateResult:
    if cfg.epsilon > 0:
        return mirror_descent(model, cfg)
    return projected_gradient(model, cfg)


def solve_entropy_penalized(data: Dataset, dist: DesignDistribution | None, cfg: SolverConfig) -> EstimateResult:
    """Penalized least squares over density matrices.

    With ``dist`` given, the empirical quadratic term is replaced by the exact
    ||S||^2_L2(Pi) of the known design.
    """
    model = empirical_model(data) if dist is None else known_design_model(data, dist)
    return solve_model(model, cfg)


def solve_population(rho: np.ndarray, dist: DesignDistribution, epsilon: float,
                     cfg: SolverConfig | None = None) -> EstimateResult:
    """argmin over density matrices of ||S - rho||^2_L2(Pi) + epsilon tr(S log S)."""
    if cfg is None:
        cfg = SolverConfig(epsilon=epsilon)
    elif cfg.epsilon != epsilon:
        cfg = SolverConfig(**{**cfg.__dict__, "epsilon": epsilon})
    return solve_model(population_model(rho, dist), cfg)


def soft_threshold(a: np.ndarray, tau: float) -> np.ndarray:
    """Prox of tau * ||.||_1 on Hermitian matrices: shrink eigenvalues toward zero."""
    w, v = np.linalg.eigh(0.5 * (a + np.asarray(a).conj().T))
    return from_spectrum(np.sign(w) * np.maximum(np.abs(w) - tau, 0.0), v)


def solve_nuclear_baseline(data: Dataset, epsilon_nuc: float, cfg: SolverConfig | None = None) -> EstimateResult:
    """Proximal gradient for n^-1 sum (Y_j - tr(S X_j))^2 + eps ||S||_1 over Hermitian S.

    Step 1/L with L = 2 max_j ||X_j||_2^2.  The residual is the scaled
    fixed-point gap L * ||S - prox(S - grad / L)||_2.
    """
    cfg = cfg or SolverConfig(epsilon=epsilon_nuc)
    model = empirical_model(data)
    m = data.dim
    tol = _tol(cfg, model)
    lip = 2.0 * float(np.max(np.sum(np.abs(data.designs) ** 2, axis=(1, 2))))
    s = np.zeros((m, m), dtype=complex)

    def objective(s):
        return model.value(hvec(s)) + epsilon_nuc * float(np.abs(np.linalg.eigvalsh(s)).sum())

    f = objective(s)
    trace = [f]
    res = float("inf")
    it = 0
    while it < cfg.max_iter:
        g = hunvec(model.grad(hvec(s)), m)
        s_new = soft_threshold(s - g / lip, epsilon_nuc / lip)
        res = lip * float(np.linalg.norm(s_new - s))
        if res <= tol:
            break
        it += 1
        s = s_new
        f = objective(s)
        trace.append(f)
    return EstimateResult(s, trace, res, it, res <= tol, tol, epsilon_nuc)


# --- serialization -----------------------------------------------------------

ESTIMATE_META = ("epsilon", "iterations", "stationarity_residual", "tol_stat", "converged")


def write_estimate(result: EstimateResult, path, extra: dict | None = None) -> Path:
    """CSV with a ``# key=value`` metadata block, then ``i,j,re,im`` per entry."""
    path = Path(path)
    meta = {k: getattr(result, k) for k in ESTIMATE_META}
    meta.update(extra or {})
    s = np.asarray(result.estimate)
    try:
        with path.open("w", newline="") as fh:
            for k, v in meta.items():
                fh.write(f"# {k}={v!r}\n" if isinstance(v, float) else f"# {k}={v}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "re", "im"])
            for i in range(s.shape[0]):
                for j in range(s.shape[1]):
                    w.writerow([i, j, repr(float(s[i, j].real)), repr(float(s[i, j].imag))])
    except OSError as exc:
        raise OSError(f"could not write estimate to {path}: {exc}") from exc
    return path


def read_estimate(path) -> tuple[np.ndarray, dict]:
    """Inverse of :func:`write_estimate`; metadata values come back as strings."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(f"could not read estimate {path}: {exc}") from exc
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        else:
            body.append(line)
    recs = list(csv.DictReader(body))
    m = int(round(np.sqrt(len(recs))))
    if m * m != len(recs):
        raise ValueError(f"{path}: expected m*m entries, found {len(recs)}")
    s = np.zeros((m, m), dtype=complex)
    for r in recs:
        s[int(r["i"]), int(r["j"])] = float(r["re"]) + 1j * float(r["im"])
    return s, meta
