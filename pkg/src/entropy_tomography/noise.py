"""Noise models, measurement simulation and dataset serialization."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, special

from .designs import DesignDistribution, hvec, make_design, sample_designs
from .hermitian import hs_inner

NOISE_KINDS = ("gaussian", "uniform", "two-point")


@dataclass(frozen=True)
class NoiseModel:
    """Mean-zero noise: ``gaussian`` (scale = sigma), ``uniform`` on [-c, c]
    or ``two-point`` at +-c.  ``gaussian`` with scale 0 is the noiseless case."""

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; choose from {NOISE_KINDS}")
        if self.scale < 0 or (self.scale == 0 and self.kind != "gaussian"):
            raise ValueError(f"noise scale must be positive, got {self.scale}")

    @property
    def variance(self) -> float:
        if self.kind == "uniform":
            return self.scale**2 / 3.0
        return self.scale**2

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian":
            return self.scale * rng.standard_normal(n)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size=n)
        return self.scale * rng.choice([-1.0, 1.0], size=n)


@dataclass
class NoiseConstants:
    sigma_xi: float
    c_xi_bound: float
    psi1: float
    psi2: float
    c_xi_log: float


def _solve_orlicz(moment, scale: float) -> float:
    """Smallest C with moment(C) = 2, for a moment function decreasing in C."""
    lo, hi = scale * 1e-3, scale
    while moment(hi) > 2.0:
        hi *= 2.0
    while moment(lo) < 2.0:
        lo /= 2.0
    return float(optimize.brentq(lambda c: moment(c) - 2.0, lo, hi, xtol=1e-14 * scale, rtol=1e-14))


def psi_norms(noise: NoiseModel) -> tuple[float, float]:
    """(psi_1, psi_2) Orlicz norms with psi_a(t) = exp(t**a) - 1."""
    c = noise.scale
    if c == 0:
        return 0.0, 0.0
    if noise.kind == "two-point":
        return float(c / np.log(2.0)), float(c / np.sqrt(np.log(2.0)))
    if noise.kind == "gaussian":
        psi2 = c * np.sqrt(8.0 / 3.0)

        def m1(C):
            a = c / C
            return 2.0 * np.exp(min(a * a / 2.0 + special.log_ndtr(a), 700.0))

        return _solve_orlicz(m1, c), float(psi2)

    def m1(C):
        return C / c * np.expm1(min(c / C, 700.0))

    def m2(C):
        a = min(c / C, 26.0)
        return np.sqrt(np.pi) / (2.0 * a) * special.erfi(a)

    return _solve_orlicz(m1, c), _solve_orlicz(m2, c)


def noise_constants(noise: NoiseModel) -> NoiseConstants:
    """Standard deviation, almost-sure bound and Orlicz-norm constants.

    ``c_xi_log`` is ||xi||_psi2 * max(log(||xi||_psi2 / sigma), 1).
    """
    sigma = float(np.sqrt(noise.variance))
    psi1, psi2 = psi_norms(noise)
    bound = float("inf") if noise.kind == "gaussian" else float(noise.scale)
    if noise.kind == "gaussian" and noise.scale == 0:
        bound = 0.0
    c_log = psi2 * max(np.log(psi2 / sigma), 1.0) if sigma > 0 else 0.0
    return NoiseConstants(sigma, bound, psi1, psi2, float(c_log))


# --- datasets ----------------------------------------------------------------


@dataclass
class Dataset:
    """Observations (X_j, Y_j) with origin metadata.

    ``design_index`` holds the support index of each draw for basis designs,
    else ``None``.
    """

    designs: np.ndarray
    responses: np.ndarray
    design_index: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.designs = np.asarray(self.designs, dtype=complex)
        self.responses = np.asarray(self.responses, dtype=float)
        if self.designs.ndim != 3 or self.designs.shape[1] != self.designs.shape[2]:
            raise ValueError(f"designs must have shape (n, m, m), got {self.designs.shape}")
        if len(self.designs) != len(self.responses) or len(self.responses) < 1:
            raise ValueError("designs and responses must have the same positive length")

    @property
    def n(self) -> int:
        return len(self.responses)

    @property
    def dim(self) -> int:
        return self.designs.shape[1]

    def coords(self) -> np.ndarray:
        return hvec(self.designs)


def design_hash(x: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(x, dtype=complex).tobytes()).hexdigest()[:16]


def stream_generators(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent design and noise generators derived from one seed."""
    ss = np.random.SeedSequence(seed)
    d, e = ss.spawn(2)
    return np.random.default_rng(d), np.random.default_rng(e)


def simulate_measurements(rho: np.ndarray, dist: DesignDistribution, noise: NoiseModel, n: int,
                          rng: np.random.Generator | int, *, noise_rng: np.random.Generator | None = None,
                          state_id: str = "") -> Dataset:
    """Draw Y_j = tr(rho X_j) + xi_j, j = 1..n.

    ``rng`` may be a generator (designs and noise then share it unless
    ``noise_rng`` is given) or an integer seed, in which case separate design
    and noise streams are derived so the designs can be replayed from the seed.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dist.dim, dist.dim):
        raise ValueError(f"state has shape {rho.shape} but design dimension is {dist.dim}")
    if n < 1:
        raise ValueError("n must be positive")
    seed = None
    if isinstance(rng, (int, np.integer)):
        seed = int(rng)
        rng, noise_rng = stream_generators(seed)
    noise_rng = rng if noise_rng is None else noise_rng
    idx, xs = sample_designs(dist, n, rng)
    clean = hvec(xs) @ hvec(rho)
    y = clean + noise.sample(n, noise_rng)
    meta = {
        "design": dist.kind,
        "m": dist.dim,
        "k": dist.qubits,
        "n": n,
        "noise": noise.kind,
        "noise_scale": noise.scale,
        "seed": seed,
        "state": state_id,
    }
    return Dataset(xs, y, idx, meta)


def write_dataset(data: Dataset, path: str | Path) -> tuple[Path, Path]:
    """Write ``j,design_index_or_hash,y`` CSV plus a ``.json`` metadata sidecar."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "design_index_or_hash", "y"])
            for j in range(data.n):
                key = int(data.design_index[j]) if data.design_index is not None else design_hash(data.designs[j])
                w.writerow([j, key, repr(float(data.responses[j]))])
        side = path.with_suffix(path.suffix + ".json")
        side.write_text(json.dumps(data.meta, indent=2, sort_keys=True))
    except OSError as exc:
        raise OSError(f"could not write dataset to {path}: {exc}") from exc
    return path, side


def read_dataset(path: str | Path) -> Dataset:
    """Inverse of :func:`write_dataset`.

    Basis designs are rebuilt from their indices.  Continuous designs are
    replayed from the recorded seed and checked against the stored hashes.
    """
    path = Path(path)
    side = path.with_suffix(path.suffix + ".json")
    try:
        meta = json.loads(side.read_text())
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"could not read dataset {path}: {exc}") from exc
    dist = make_design(meta["design"], m=meta["m"], k=meta.get("k"))
    y = np.array([float(r["y"]) for r in rows])
    keys = [r["design_index_or_hash"] for r in rows]
    if dist.is_basis:
        idx = np.array([int(k) for k in keys])
        return Dataset(dist.support[idx], y, idx, meta)
    if meta.get("seed") is None:
        raise ValueError(f"{path}: continuous designs need a recorded seed to be replayed")
    design_rng, _ = stream_generators(int(meta["seed"]))
    _, xs = sample_designs(dist, len(rows), design_rng)
    for j, (x, k) in enumerate(zip(xs, keys)):
        if design_hash(x) != k:
            raise ValueError(f"{path}: replayed design {j} does not match stored hash {k}")
    return Dataset(xs, y, None, meta)


def response_mean(data: Dataset, rho: np.ndarray) -> np.ndarray:
    """Noise-free responses tr(rho X_j)."""
    return np.array([hs_inner(rho, x) for x in data.designs])
