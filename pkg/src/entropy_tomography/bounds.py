"""Closed-form rate quantities, concentration bounds and error-bound evaluators.

Every bound has the shape ``offset + scale * max(branches)``: ``offset`` is
the approximation-error term of an oracle inequality (0 for rough bounds),
``scale`` is ``C``, ``C / lambda`` or ``C / epsilon``, and the branches are
the terms joined by a maximum.  :class:`BoundReport` exposes all three so
the value can be recombined exactly.

The numerical constants ``C``, ``D`` and ``c`` are unknown; they live on
:class:`RateContext` and default to 1.  Logarithms are natural except
inside ``tau_n``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

E = math.e


class MissingSymbolError(ValueError):
    """A bound was evaluated without one of the symbols it needs."""


@dataclass(frozen=True)
class RateContext:
    """Sample size, confidence level, noise and design constants of one setting."""

    m: int
    n: int
    t: float = 1.0
    sigma_xi: float | None = None
    c_xi: float | None = None
    psi1_xi: float | None = None
    sigma_X: float | None = None
    sigma_XX: float | None = None
    U: float | None = None
    E_norm_sq: float | None = None
    EX_norm: float | None = None
    C: float = 1.0
    D: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError(f"m and n must be positive, got m={self.m}, n={self.n}")
        if not self.t > 0:
            raise ValueError(f"t must be positive, got {self.t}")
        if min(self.C, self.D, self.c) <= 0:
            raise ValueError("constants C, D, c must be positive")

    @property
    def t_m(self) -> float:
        return self.t + math.log(2 * self.m)

    @property
    def tau_n(self) -> float:
        return self.t + math.log(math.log2(2 * self.n))

    @property
    def t_nm(self) -> float:
        return max(self.tau_n * math.log(self.n), self.t_m)

    def need(self, display: str, *names: str) -> list[float]:
        out = []
        for name in names:
            v = getattr(self, name)
            if v is None:
                raise MissingSymbolError(f"{display} needs {name}, which is not set on the rate context")
            out.append(float(v))
        return out

    def with_design(self, consts) -> RateContext:
        """Copy with sigma_X, sigma_XX, U, E||X||^2 and ||EX|| taken from a constants record."""
        d = asdict(self)
        d.update(sigma_X=consts.sigma_X, sigma_XX=consts.sigma_XX, U=consts.U,
                 E_norm_sq=consts.E_norm_sq, EX_norm=consts.EX_norm)
        return RateContext(**d)


@dataclass
class BoundReport:
    name: str
    value: float
    offset: float
    scale: float
    components: dict
    inputs: dict = field(default_factory=dict)

    def recombine(self) -> float:
        return self.offset + self.scale * max(self.components.values())

    def csv_header(self) -> list[str]:
        return ["name", "value", "offset", "scale", *self.components]

    def csv_row(self) -> list:
        return [self.name, self.value, self.offset, self.scale, *self.components.values()]


def _report(name, offset, scale, components, inputs) -> BoundReport:
    comps = {k: float(v) for k, v in components.items()}
    return BoundReport(name, offset + scale * max(comps.values()), float(offset), float(scale), comps, inputs)


def _log_ratio(num: float, den: float) -> float:
    """log(num / den) with the ratio floored at e, so the factor is >= 1."""
    if den <= 0:
        return 1.0 if num <= 0 else math.inf
    return math.log(max(num / den, E))


# --- matrix Bernstein --------------------------------------------------------

BERNSTEIN_FLAVORS = ("bounded", "sigma-tilde-bounded", "sigma-tilde-psi1")


def bernstein_tail(t: float, n: int, m: int, sigma_X: float, U: float) -> float:
    """2m exp(-t^2 / (2 sigma_X^2 n + 2 U t / 3)): tail of ||X_1 + ... + X_n||
    for independent centered Hermitian X_i with ||X_i|| <= U."""
    if t <= 0:
        return 2.0 * m
    return 2.0 * m * math.exp(-t * t / (2.0 * sigma_X**2 * n + 2.0 * U * t / 3.0))


def bernstein_level(t: float, n: int, m: int, sigma_X: float, U: float, *, flavor: str = "bounded",
                    sigma_tilde: float | None = None, C: float = 1.0, U_1: float | None = None) -> float:
    """Deviation level for ||(X_1 + ... + X_n) / n|| at confidence 1 - e^{-t}.

    ``bounded``: 2 (sigma_X sqrt(t_m/n) v U t_m/n), t_m = t + log 2m.
    ``sigma-tilde-bounded``: C (sigma_X sqrt(log 2m / n) v sigma_tilde sqrt(t/n)
    v U log 2m / n v U t / n).
    ``sigma-tilde-psi1``: as above with the U-terms replaced by
    U_1 log(U_1/sigma_X) log 2m / n and U_1 t log n / n.
    """
    tm = t + math.log(2 * m)
    if flavor == "bounded":
        return 2.0 * max(sigma_X * math.sqrt(tm / n), U * tm / n)
    if sigma_tilde is None:
        raise MissingSymbolError(f"bernstein flavor {flavor!r} needs sigma_tilde")
    l2m = math.log(2 * m)
    head = max(sigma_X * math.sqrt(l2m / n), sigma_tilde * math.sqrt(t / n))
    if flavor == "sigma-tilde-bounded":
        return C * max(head, U * l2m / n, U * t / n)
    if flavor == "sigma-tilde-psi1":
        if U_1 is None:
            raise MissingSymbolError("bernstein flavor 'sigma-tilde-psi1' needs U_1")
        return C * max(head, U_1 * _log_ratio(U_1, sigma_X) * l2m / n, U_1 * t * math.log(n) / n)
    raise ValueError(f"unknown bernstein flavor {flavor!r}; choose from {BERNSTEIN_FLAVORS}")


def bernstein_psi_level(t: float, n: int, m: int, sigma_X: float, U_alpha: float, alpha: float,
                        C: float = 1.0) -> float:
    """C max(sigma_X sqrt(t_m/n), U_a log(U_a/sigma_X)^{1/a} t_m/n), ratio floored at e."""
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    tm = t + math.log(2 * m)
    factor = _log_ratio(U_alpha, sigma_X) ** (1.0 / alpha)
    return C * max(sigma_X * math.sqrt(tm / n), U_alpha * factor * tm / n)


# --- regularization thresholds -----------------------------------------------

EPSILON_FLAVORS = ("bounded", "completion", "pauli", "subgaussian")


def _noise_u_term(ctx: RateContext, display: str, unbounded: bool) -> float:
    """c_xi U, or its psi_1 replacement psi1 U log(psi1 U / (sigma_xi sigma_X)) for unbounded noise."""
    if unbounded:
        psi1, s, U, sx = ctx.need(display, "psi1_xi", "sigma_xi", "U", "sigma_X")
        return psi1 * U * _log_ratio(psi1 * U, s * sx)
    c, U = ctx.need(display, "c_xi", "U")
    return c * U


def epsilon_components(ctx: RateContext, flavor: str, *, unbounded_noise: bool = False) -> dict:
    r = ctx.t_m / ctx.n
    m = ctx.m
    name = f"epsilon threshold ({flavor})"
    if flavor == "bounded":
        s, sx, sxx, ex, U = ctx.need(name, "sigma_xi", "sigma_X", "sigma_XX", "EX_norm", "U")
        return {
            "sqrt_term": max(s * sx, s * ex, sxx) * math.sqrt(r),
            "linear_term": max(_noise_u_term(ctx, name, unbounded_noise), U * U) * r,
        }
    if flavor == "completion":
        s, c = ctx.need(name, "sigma_xi", "c_xi")
        return {"sqrt_term": max(s, 1.0) * m**-0.5 * math.sqrt(r), "linear_term": max(c, 1.0) * r}
    if flavor == "pauli":
        s, c = ctx.need(name, "sigma_xi", "c_xi")
        return {
            "sqrt_term": max(s * m**-0.5, 1.0 / m) * math.sqrt(r),
            "linear_term": max(c * m**-0.5, 1.0 / m) * r,
        }
    if flavor == "subgaussian":
        s, c = ctx.need(name, "sigma_xi", "c_xi")
        return {"sqrt_term": s * math.sqrt(m * r), "linear_term": c * math.sqrt(m) * r}
    raise ValueError(f"unknown epsilon flavor {flavor!r}; choose from {EPSILON_FLAVORS}")


def epsilon_threshold(ctx: RateContext, flavor: str, *, unbounded_noise: bool = False) -> float:
    """The rate eps_{n,m} below which the sharp oracle inequalities are not claimed.

    ``bounded``: (s sX v s ||EX|| v sXX) sqrt(t_m/n) v (c U v U^2) t_m/n.
    ``completion``: (s m^-1/2 v m^-1/2) sqrt(t_m/n) v (c v 1) t_m/n.
    ``pauli``: (s m^-1/2 v m^-1) sqrt(t_m/n) v (c m^-1/2 v m^-1) t_m/n.
    ``subgaussian``: s sqrt(m t_m/n) v c sqrt(m) t_m/n.
    Here s = sigma_xi and c = c_xi.
    """
    return max(epsilon_components(ctx, flavor, unbounded_noise=unbounded_noise).values())


def gamma_factor(ctx: RateContext, epsilon: float) -> float:
    """Gamma = m E^{1/2}||X||^2 / sqrt(eps) v m."""
    (e2,) = ctx.need("Gamma", "E_norm_sq")
    if epsilon <= 0:
        return math.inf
    return max(ctx.m * math.sqrt(e2) / math.sqrt(epsilon), float(ctx.m))


# --- oracle inequalities -----------------------------------------------------


@dataclass
class OracleInfo:
    """Properties of the comparison state S (or Gibbs oracle) and the run.

    ``approx_error_sq`` is ||S - rho||^2_L2(Pi) (0 for S = rho); ``rank``
    doubles as dim(L); ``log_S_norm`` / ``log_S_hs`` are the operator and
    Hilbert-Schmidt norms of log S (inf for rank-deficient S).
    """

    approx_error_sq: float = 0.0
    epsilon: float | None = None
    rank: int | None = None
    a_log_S: float | None = None
    tail_norm: float | None = None
    log_S_norm: float | None = None
    log_S_hs: float | None = None
    beta: float | None = None
    lam: float = 1.0
    pop_error_l2: float | None = None
    pop_error_trace: float | None = None
    delta_r: float | None = None
    gamma_r: float | None = None

    def need(self, display: str, *names: str) -> list[float]:
        out = []
        for name in names:
            v = getattr(self, name)
            if v is None:
                raise MissingSymbolError(f"{display} needs {name}, which is not set on the oracle info")
            out.append(float(v))
        return out


def _penalty_term(eps: float, log_norm: float, cap: float) -> float:
    """eps (||log S|| ^ cap), with 0 at eps = 0."""
    if eps == 0:
        return 0.0
    return eps * min(log_norm, cap)


def _lmn(ctx):
    return math.log(ctx.m * ctx.n) ** 2


def _sg_rough(ctx, info, tag):
    s, = ctx.need(tag, "sigma_xi")
    eps, ln = info.need(tag, "epsilon", "log_S_norm")
    m, n = ctx.m, ctx.n
    cap = math.log(m / eps) if eps > 0 else math.inf
    return 0.0, ctx.C, {
        "penalty": _penalty_term(eps, ln, cap),
        "noise": s * math.sqrt(m * ctx.t_m / n),
        "design": max(s, math.sqrt(m)) * math.sqrt(m) * max(ctx.tau_n * math.log(n), ctx.t_m) / n,
    }


def _sg_oracle(ctx, info, tag):
    s, = ctx.need(tag, "sigma_xi")
    eps, lhs, r, tail = info.need(tag, "epsilon", "log_S_hs", "rank", "tail_norm")
    m, n = ctx.m, ctx.n
    return 2.0 * info.approx_error_sq, ctx.C, {
        "penalty": 0.0 if eps == 0 else (eps * lhs) ** 2,
        "variance": s * s * (m * r + ctx.tau_n) / n,
        "tail": s * tail * math.sqrt(m * ctx.t_m / n),
        "design": max(s, math.sqrt(m)) * math.sqrt(m) * max(ctx.tau_n * math.log(n), ctx.t_m) / n,
    }


def _sg_low_rank(ctx, info, tag):
    s, = ctx.need(tag, "sigma_xi")
    r, = info.need(tag, "rank")
    m, n = ctx.m, ctx.n
    return 2.0 * info.approx_error_sq, ctx.C, {
        "variance": s * s * r * m * ctx.t_m * _lmn(ctx) / n,
        "design": m * max(ctx.tau_n * math.log(n), ctx.t_m) / n,
    }


def _sg_kl(ctx, info, tag):
    off, _, comps = _sg_oracle(ctx, info, tag)
    eps, = info.need(tag, "epsilon")
    if eps <= 0:
        raise ValueError(f"{tag} needs epsilon > 0")
    return 0.0, ctx.C / eps, comps


def _pauli_rough(ctx, info, tag):
    s, = ctx.need(tag, "sigma_xi")
    eps, ln = info.need(tag, "epsilon", "log_S_norm")
    m, n = ctx.m, ctx.n
    cap = math.log(m / eps) if eps > 0 else math.inf
    return 0.0, ctx.C, {
        "penalty": _penalty_term(eps, ln, cap),
        "noise": max(s, m**-0.5) * math.sqrt(ctx.t_m / (n * m)),
    }


def _pauli_low_rank(ctx, info, tag):
    s, = ctx.need(tag, "sigma_xi")
    r, = info.need(tag, "rank")
    m, n = ctx.m, ctx.n
    return 2.0 * info.approx_error_sq, ctx.C, {
        "variance": max(s * s, 1.0 / m) * r * m * ctx.t_m * _lmn(ctx) / n,
    }


def _pauli_hellinger(ctx, info, tag):
    s, = ctx.need(tag, "sigma_xi")
    r, = info.need(tag, "rank")
    m, n = ctx.m, ctx.n
    return 0.0, ctx.C, {
        "variance": max(s, m**-0.5) * r * math.sqrt(m * ctx.t_m) * _lmn(ctx) / math.sqrt(n),
    }


def _bd_random_block(ctx, tag):
    s, sx, ex, sxx, U = ctx.need(tag, "sigma_xi", "sigma_X", "EX_norm", "sigma_XX", "U")
    return s, sx, ex, sxx, U


def _bd_rough(ctx, info, tag, unbounded=False):
    s, sx, ex, sxx, U = _bd_random_block(ctx, tag)
    eps, ln = info.need(tag, "epsilon", "log_S_norm")
    r = ctx.t_m / ctx.n
    cap = math.log(gamma_factor(ctx, eps)) if eps > 0 else math.inf
    return info.approx_error_sq, ctx.C, {
        "penalty": _penalty_term(eps, ln, cap),
        "approx_cross": math.sqrt(info.approx_error_sq) * U * math.sqrt(r),
        "noise": max(s * sx, s * ex, sxx) * math.sqrt(r),
        "linear": max(_noise_u_term(ctx, tag, unbounded), U * U) * r,
    }


def _bd_rough_truth(ctx, info, tag, unbounded=False):
    _, scale, comps = _bd_rough(ctx, OracleInfo(**{**asdict(info), "approx_error_sq": 0.0}), tag, unbounded)
    comps.pop("approx_cross")
    return 0.0, scale, comps


def _bd_noise_tail(ctx, tag, unbounded):
    """c_xi U (tau_n v t_m)/n, or its psi_1 replacement."""
    n = ctx.n
    if not unbounded:
        c, U = ctx.need(tag, "c_xi", "U")
        return {"noise_linear": c * U * max(ctx.tau_n, ctx.t_m) / n}
    psi1, s, U, sx = ctx.need(tag, "psi1_xi", "sigma_xi", "U", "sigma_X")
    return {
        "noise_linear": psi1 * U * ctx.tau_n * math.log(n) / n,
        "noise_log": psi1 * U * _log_ratio(psi1 * U, s * sx) * ctx.t_m / n,
    }


def _bd_oracle(ctx, info, tag, unbounded=False):
    s, sx, ex, _, U = _bd_random_block(ctx, tag)
    eps, a, beta, r, tail = info.need(tag, "epsilon", "a_log_S", "beta", "rank", "tail_norm")
    n = ctx.n
    comps = {
        "penalty": 0.0 if eps == 0 else (a * eps) ** 2,
        "variance": s * s * beta * beta * (ctx.m * r + ctx.tau_n) / n,
        "tail": s * max(sx, ex) * tail * math.sqrt(ctx.t_m / n),
        **_bd_noise_tail(ctx, tag, unbounded),
        "design": U * U * ctx.t_m / n,
    }
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, comps


def _bd_random_error(ctx, info, tag, unbounded=False):
    s, sx, ex, _, U = _bd_random_block(ctx, tag)
    beta, r, tail, d2, d1 = info.need(tag, "beta", "rank", "tail_norm", "pop_error_l2", "pop_error_trace")
    n = ctx.n
    q = ctx.t_m / n
    return 0.0, ctx.C, {
        "variance": s * s * beta * beta * (ctx.m * r + ctx.tau_n) / n,
        "tail": s * max(sx, ex) * tail * math.sqrt(q),
        "bias_l2": U * d2 * math.sqrt(q),
        "bias_trace": U * U * d1 * q,
        **_bd_noise_tail(ctx, tag, unbounded),
    }


def _oracle_common(ctx, tag, c_scale, last):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    n = ctx.n
    return {
        "noise_tau": s * s * ctx.tau_n / n,
        "noise_linear": c * c_scale * max(ctx.tau_n, ctx.t_m) / n,
        "design": last * ctx.t_m / n,
    }


def _completion_low_rank(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    r, = info.need(tag, "rank")
    m, n, tm, D = ctx.m, ctx.n, ctx.t_m, ctx.D
    comps = {
        "rank_sqrt": D * D * max(s * s, 1.0) * r * m * tm / n * _lmn(ctx),
        "rank_linear": D * D * max(c * c, 1.0) * r * m * m * tm * tm / (n * n) * _lmn(ctx),
        **_oracle_common(ctx, tag, 1.0, 1.0),
    }
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, comps


def _completion_gibbs(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    r, dr, gr = info.need(tag, "rank", "delta_r", "gamma_r")
    m, n, tm, D = ctx.m, ctx.n, ctx.t_m, ctx.D
    comps = {
        "gibbs_tail": dr * dr / (m * m),
        "gibbs_sqrt": D * D * max(s * s, 1.0) * gr * m * tm / n,
        "gibbs_linear": D * D * max(c * c, 1.0) * gr * m * m * tm * tm / (n * n),
        "variance": s * s * (m * r + ctx.tau_n) / n,
        **_oracle_common(ctx, tag, 1.0, 1.0),
    }
    comps.pop("noise_tau")
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, comps


def _pauli_rank_oracle(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    r, = info.need(tag, "rank")
    m, n, tm, D = ctx.m, ctx.n, ctx.t_m, ctx.D
    comps = {
        "rank_sqrt": D * D * max(s * s, 1.0 / m) * r * m * tm / n * _lmn(ctx),
        "rank_linear": D * D * max(c * c, 1.0 / m) * r * m * tm * tm / (n * n) * _lmn(ctx),
        **_oracle_common(ctx, tag, m**-0.5, 1.0 / m),
    }
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, comps


def _pauli_gibbs(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    r, dr, gr = info.need(tag, "rank", "delta_r", "gamma_r")
    m, n, tm, D = ctx.m, ctx.n, ctx.t_m, ctx.D
    comps = {
        "gibbs_tail": dr * dr / (m * m),
        "gibbs_sqrt": D * D * max(s * s, 1.0 / m) * gr * m * tm / n,
        "gibbs_linear": D * D * max(c * c, 1.0 / m) * gr * m * m * tm * tm / (n * n),
        "variance": s * s * (m * r + ctx.tau_n) / n,
        **_oracle_common(ctx, tag, m**-0.5, 1.0 / m),
    }
    comps.pop("noise_tau")
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, comps


def _sg_design_term(ctx, c):
    m = ctx.m
    return max(c, math.sqrt(m)) * math.sqrt(m) * ctx.t_nm / ctx.n


def _sg_general_rough(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    eps, ln = info.need(tag, "epsilon", "log_S_norm")
    m, n, lam = ctx.m, ctx.n, info.lam
    cap = math.log(m / eps) if eps > 0 else math.inf
    return (1.0 + lam) * info.approx_error_sq, ctx.C, {
        "penalty": _penalty_term(eps, ln, cap),
        "noise": s * math.sqrt(m * ctx.t_m / n),
        "curvature": m * ctx.t_m / (n * lam),
        "design": _sg_design_term(ctx, c),
    }


def _sg_general_rough_truth(ctx, info, tag):
    _, scale, comps = _sg_general_rough(ctx, info, tag)
    comps.pop("curvature")
    return 0.0, scale, comps


def _sg_general_oracle(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    eps, a, r, tail = info.need(tag, "epsilon", "a_log_S", "rank", "tail_norm")
    beta = 1.0 if info.beta is None else info.beta
    m, n = ctx.m, ctx.n
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, {
        "penalty": 0.0 if eps == 0 else (a * eps) ** 2,
        "variance": s * s * beta * beta * (m * r + ctx.tau_n) / n,
        "tail": s * tail * math.sqrt(m * ctx.t_m / n),
        "design": _sg_design_term(ctx, c),
    }


def _sg_general_random_error(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    r, tail, d2 = info.need(tag, "rank", "tail_norm", "pop_error_l2")
    beta = 1.0 if info.beta is None else info.beta
    m, n = ctx.m, ctx.n
    q = math.sqrt(m * ctx.t_m / n)
    return 0.0, ctx.C, {
        "variance": s * s * beta * beta * (m * r + ctx.tau_n) / n,
        "tail": s * tail * q,
        "bias_l2": d2 * q,
        "design": _sg_design_term(ctx, c),
    }


def _sg_general_low_rank(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    r, = info.need(tag, "rank")
    m, n, tm, D = ctx.m, ctx.n, ctx.t_m, ctx.D
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, {
        "rank_sqrt": D * D * s * s * r * m * tm / n * _lmn(ctx),
        "rank_linear": D * D * c * c * r * m * tm * tm / (n * n) * _lmn(ctx),
        "noise_tau": s * s * ctx.tau_n / n,
        "design": _sg_design_term(ctx, c),
    }


def _sg_general_gibbs(ctx, info, tag):
    s, c = ctx.need(tag, "sigma_xi", "c_xi")
    r, dr, gr = info.need(tag, "rank", "delta_r", "gamma_r")
    m, n, tm, D = ctx.m, ctx.n, ctx.t_m, ctx.D
    return (1.0 + info.lam) * info.approx_error_sq, ctx.C / info.lam, {
        "gibbs_tail": dr * dr,
        "gibbs_sqrt": D * D * s * s * gr * m * tm / n,
        "gibbs_linear": D * D * c * c * gr * m * tm * tm / (n * n),
        "variance": s * s * (m * r + ctx.tau_n) / n,
        "design": _sg_design_term(ctx, c),
    }


# tag -> (evaluator, supports the unbounded-noise variant, description)
DISPLAYS = {
    "sg-rough": (_sg_rough, False, "subgaussian design, Gaussian noise: rough bound, any epsilon in [0, 1]"),
    "sg-oracle": (_sg_oracle, False, "subgaussian design, Gaussian noise: oracle inequality with subspace L"),
    "sg-low-rank": (_sg_low_rank, False, "subgaussian design, Gaussian noise: low-rank oracle inequality"),
    "sg-kl": (_sg_kl, False, "subgaussian design: symmetrized KL error of the estimator"),
    "pauli-rough": (_pauli_rough, False, "Pauli sampling: rough bound, any epsilon in [0, 1]"),
    "pauli-low-rank": (_pauli_low_rank, False, "Pauli sampling: low-rank oracle inequality"),
    "pauli-hellinger": (_pauli_hellinger, False, "Pauli sampling: squared Hellinger error"),
    "bd-rough": (_bd_rough, True, "bounded design: rough oracle bound for ||hat rho - S|| and ||hat rho - rho||"),
    "bd-rough-truth": (_bd_rough_truth, True, "bounded design: rough bound with S = rho"),
    "bd-oracle": (_bd_oracle, True, "bounded design: sharp oracle inequality, epsilon >= D eps_nm"),
    "bd-random-error": (_bd_random_error, True, "bounded design: distance to the population solution"),
    "completion-low-rank": (_completion_low_rank, False, "matrix completion sampling: low-rank oracles"),
    "completion-gibbs": (_completion_gibbs, False, "matrix completion sampling: Gibbs oracles"),
    "pauli-rank-oracle": (_pauli_rank_oracle, False, "Pauli sampling, bounded noise: low-rank oracles"),
    "pauli-gibbs": (_pauli_gibbs, False, "Pauli sampling, bounded noise: Gibbs oracles"),
    "sg-general-rough": (_sg_general_rough, False, "subgaussian design: rough oracle bound with lambda"),
    "sg-general-rough-truth": (_sg_general_rough_truth, False, "subgaussian design: rough bound with S = rho"),
    "sg-general-oracle": (_sg_general_oracle, False, "subgaussian design: sharp oracle inequality"),
    "sg-general-random-error": (_sg_general_random_error, False, "subgaussian design: distance to population solution"),
    "sg-general-low-rank": (_sg_general_low_rank, False, "subgaussian design: low-rank oracles"),
    "sg-general-gibbs": (_sg_general_gibbs, False, "subgaussian design: Gibbs oracles"),
}


def oracle_rhs(ctx: RateContext, display: str, info: OracleInfo, *, unbounded_noise: bool = False) -> BoundReport:
    """Right-hand side of one error bound; see ``DISPLAYS`` for the tags."""
    if display not in DISPLAYS:
        raise ValueError(f"unknown bound {display!r}; choose from {sorted(DISPLAYS)}")
    fn, has_unbounded, _ = DISPLAYS[display]
    if unbounded_noise and not has_unbounded:
        raise ValueError(f"{display} has no unbounded-noise variant")
    if info.lam <= 0:
        raise ValueError("lambda must be positive")
    args = (ctx, info, display) + ((unbounded_noise,) if has_unbounded else ())
    offset, scale, comps = fn(*args)
    inputs = {**asdict(ctx), **asdict(info), "unbounded_noise": unbounded_noise}
    return _report(display, offset, scale, comps, inputs)


# --- approximation error of the penalized population solution -----------------

APPROX_DISPLAYS = ("penalty-norm", "alignment", "low-rank", "gibbs")


def approx_rhs(ctx: RateContext, display: str, info: dict) -> float:
    """Upper bound on ||rho^eps - rho||^2_L2(Pi) (and friends) for the population solution.

    ``penalty-norm``: (2 d + sqrt(eps ||log S||))^2, d = ||S - rho||_L2(Pi).
    ``alignment``: (d + (eps/2) a(log S))^2; bounds ||rho^eps - S||^2 + (eps/2) K(rho^eps; S).
    ``low-rank``: 2 d^2 + C eps^2 [Lambda^2 r log^2(1 + m/(eps ^ 1)) + E||X||^2].
    ``gibbs``: 2 d^2 + 24 max_k E<X e_k, e_k>^2 delta_r^2 + a^2(H_<=r) eps^2, with d the
    distance of the Gibbs oracle.
    ``d`` defaults to 0 (S = rho).
    """

    def need(*names):
        missing = [k for k in names if info.get(k) is None]
        if missing:
            raise MissingSymbolError(f"{display} needs {', '.join(missing)}")
        return [float(info[k]) for k in names]

    d = float(info.get("distance", 0.0))
    (eps,) = need("epsilon")
    if display == "penalty-norm":
        (ln,) = need("log_S_norm")
        return (2.0 * d + math.sqrt(eps * ln)) ** 2
    if display == "alignment":
        (a,) = need("a_log_S")
        return (d + 0.5 * eps * a) ** 2
    if display == "low-rank":
        lam_l, r, e2 = need("Lambda", "rank", "E_norm_sq")
        return 2.0 * d * d + ctx.C * eps**2 * (lam_l**2 * r * math.log1p(ctx.m / min(eps, 1.0)) ** 2 + e2)
    if display == "gibbs":
        mom, dr, a = need("diag_moment", "delta_r", "a_H")
        return 2.0 * d * d + 24.0 * mom * dr * dr + a * a * eps * eps
    raise ValueError(f"unknown approximation bound {display!r}; choose from {APPROX_DISPLAYS}")
