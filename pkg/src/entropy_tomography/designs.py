"""Design distributions for the random observables and their L2(Pi) geometry.

Hermitian matrices are mapped to real coordinate vectors of length m**2 in
the matrix-completion basis (diagonal units, then symmetric and
antisymmetric off-diagonal pairs in lexicographic (i, j) order).  The map is
an isometry, so Hilbert-Schmidt inner products become dot products and the
L2(Pi) norm becomes a quadratic form ``a @ K @ a`` with the reference Gram
matrix ``K``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hermitian import DomainError, op_norm

KINDS = ("mc-uniform", "mc-entry", "pauli", "gauss", "rademacher")
BASIS_KINDS = ("mc-uniform", "mc-entry", "pauli")
ISOTROPIC_KINDS = ("gauss", "rademacher")

_SQRT2 = np.sqrt(2.0)

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
        [[1, 0], [0, 1]],
    ],
    dtype=complex,
)


# --- coordinates -----------------------------------------------------------


@lru_cache(maxsize=None)
def _upper(m: int):
    return np.triu_indices(m, 1)


def hvec(a: np.ndarray) -> np.ndarray:
    """Real coordinates of a Hermitian matrix (or a stack of them)."""
    a = np.asarray(a)
    m = a.shape[-1]
    iu, ju = _upper(m)
    diag = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    off = a[..., iu, ju]
    return np.concatenate([diag, _SQRT2 * off.real, _SQRT2 * off.imag], axis=-1)


def hunvec(v: np.ndarray, m: int) -> np.ndarray:
    """Inverse of :func:`hvec`."""
    v = np.asarray(v, dtype=float)
    iu, ju = _upper(m)
    p = iu.size
    out = np.zeros(v.shape[:-1] + (m, m), dtype=complex)
    idx = np.arange(m)
    out[..., idx, idx] = v[..., :m]
    off = (v[..., m : m + p] + 1j * v[..., m + p :]) / _SQRT2
    out[..., iu, ju] = off
    out[..., ju, iu] = off.conj()
    return out


# --- bases -----------------------------------------------------------------


def basis_matrix_completion(m: int) -> np.ndarray:
    """The m**2 matrix-completion basis elements, shape (m**2, m, m)."""
    if m < 1:
        raise ValueError("m must be positive")
    return hunvec(np.eye(m * m), m)


def basis_pauli(k: int) -> np.ndarray:
    """All k-fold tensor products of normalized Pauli matrices, shape (4**k, 2**k, 2**k).

    Ordering is lexicographic in (i_1, ..., i_k) with the identity last in
    each factor.
    """
    if k < 1:
        raise ValueError("k must be positive")
    w = PAULI / _SQRT2
    out = []
    for idx in itertools.product(range(4), repeat=k):
        mat = np.ones((1, 1), dtype=complex)
        for i in idx:
            mat = np.kron(mat, w[i])
        out.append(mat)
    return np.array(out)


def basis_entry_sampling(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Entry-revealing elements and their sampling weights.

    Diagonal units get probability m**-2, the m(m-1)/2 matrices
    (e_ij + e_ji)/2 + i(e_ij - e_ji)/2 get 2 m**-2 each.
    """
    mats = [np.diag(np.eye(m)[i]).astype(complex) for i in range(m)]
    probs = [1.0 / m**2] * m
    for i, j in zip(*_upper(m)):
        e = np.zeros((m, m), dtype=complex)
        e[i, j] = 0.5 + 0.5j
        e[j, i] = 0.5 - 0.5j
        mats.append(e)
        probs.append(2.0 / m**2)
    return np.array(mats), np.array(probs)


# --- distributions -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DesignDistribution:
    """Law of the random observable X.

    Basis kinds sample from a finite ``support`` with weights ``probs``;
    isotropic kinds are real symmetric random matrices with unit-variance
    diagonal and variance-1/2 off-diagonal entries.
    """

    kind: str
    dim: int
    qubits: int | None = None
    support: np.ndarray | None = field(default=None, repr=False)
    probs: np.ndarray | None = field(default=None, repr=False)

    support_coords: np.ndarray | None = field(default=None, repr=False, init=False)

    def __post_init__(self):
        if self.support is not None:
            object.__setattr__(self, "support_coords", hvec(self.support))

    @property
    def is_basis(self) -> bool:
        return self.kind in BASIS_KINDS


def make_design(kind: str, m: int | None = None, k: int | None = None) -> DesignDistribution:
    """Build a design by its stable name ("mc-uniform", "pauli", ...)."""
    if kind not in KINDS:
        raise ValueError(f"unknown design kind {kind!r}; choose from {KINDS}")
    if kind == "pauli":
        if k is None:
            if m is None or m < 2 or m & (m - 1):
                raise ValueError(f"pauli design needs m = 2**k, got m={m}")
            k = int(np.log2(m))
        if m is not None and m != 2**k:
            raise ValueError(f"pauli design needs m = 2**k, got m={m}, k={k}")
        support = basis_pauli(k)
        return DesignDistribution(kind, 2**k, k, support, np.full(len(support), 1.0 / len(support)))
    if m is None or m < 1:
        raise ValueError(f"design {kind!r} needs a positive dimension m")
    if kind == "mc-uniform":
        support = basis_matrix_completion(m)
        return DesignDistribution(kind, m, None, support, np.full(m * m, 1.0 / (m * m)))
    if kind == "mc-entry":
        support, probs = basis_entry_sampling(m)
        return DesignDistribution(kind, m, None, support, probs)
    return DesignDistribution(kind, m)


def sample_designs(dist: DesignDistribution, n: int, rng: np.random.Generator):
    """Draw ``n`` design matrices.

    Returns:
        ``(indices, matrices)``; ``indices`` is the support index of each draw
        for basis kinds and ``None`` for isotropic kinds.
    """
    m = dist.dim
    if dist.is_basis:
        idx = rng.choice(len(dist.probs), size=n, p=dist.probs)
        return idx, dist.support[idx]
    iu, ju = _upper(m)
    out = np.zeros((n, m, m), dtype=complex)
    d = np.arange(m)
    if dist.kind == "gauss":
        diag = rng.standard_normal((n, m))
        off = rng.standard_normal((n, iu.size)) / _SQRT2
    else:
        diag = rng.choice([-1.0, 1.0], size=(n, m))
        off = rng.choice([-1.0, 1.0], size=(n, iu.size)) / _SQRT2
    out[:, d, d] = diag
    out[:, iu, ju] = off
    out[:, ju, iu] = off
    return None, out


def sample_design(dist: DesignDistribution, rng: np.random.Generator) -> np.ndarray:
    return sample_designs(dist, 1, rng)[1][0]


# --- L2(Pi) geometry ---------------------------------------------------------


def reference_gram(dist: DesignDistribution) -> np.ndarray:
    """E[x x^T] for the coordinate vector x of X, shape (m**2, m**2).

    For the real isotropic designs the imaginary (antisymmetric) coordinates
    are never excited, so those rows and columns are zero.
    """
    m = dist.dim
    if dist.is_basis:
        c = dist.support_coords
        return (c.T * dist.probs) @ c
    d = np.zeros(m * m)
    d[: m + _upper(m)[0].size] = 1.0
    return np.diag(d)


def l2_pi_norm(dist: DesignDistribution, a: np.ndarray) -> float:
    """sqrt(E <A, X>^2), evaluated exactly from the design law."""
    v = hvec(a)
    if dist.is_basis:
        return float(np.sqrt(np.dot(dist.probs, (dist.support_coords @ v) ** 2)))
    return float(np.sqrt(v @ reference_gram(dist) @ v))


@dataclass(frozen=True)
class GramOperator:
    """Gram matrix of the linear functionals <E_j, .> in L2(Pi)."""

    basis: np.ndarray
    matrix: np.ndarray


def gram_operator(dist: DesignDistribution, basis: np.ndarray | None = None) -> GramOperator:
    if basis is None:
        basis = dist.support if dist.kind in ("mc-uniform", "pauli") else basis_matrix_completion(dist.dim)
    b = hvec(basis)
    g = b @ reference_gram(dist) @ b.T
    return GramOperator(np.asarray(basis), 0.5 * (g + g.T))


def _split_range(k: np.ndarray, rtol: float = 1e-10):
    w, v = np.linalg.eigh(0.5 * (k + k.T))
    keep = w > rtol * max(w.max(), 0.0)
    return w[keep], v[:, keep], v[:, ~keep]


def alignment_coefficient(dist: DesignDistribution, w: np.ndarray) -> float:
    """a(W) = sup <W, U> over traceless Hermitian U with ||U||_L2(Pi) = 1.

    Solved in closed form: with K the Gram matrix, w and t the coordinates of
    W and of the identity, a(W)^2 = w K^-1 w - (w K^-1 t)^2 / (t K^-1 t).
    When K is singular the supremum runs over its range, and a component of W
    outside that range makes it infinite, which raises :class:`DomainError`.
    """
    m = dist.dim
    k = reference_gram(dist)
    evals, vr, vn = _split_range(k)
    wv = hvec(w)
    tv = hvec(np.eye(m))
    if vn.shape[1]:
        leak = np.linalg.norm(vn.T @ wv)
        if leak > 1e-10 * max(1.0, np.linalg.norm(wv)):
            raise DomainError(
                f"Gram operator of design {dist.kind!r} is singular and W has a "
                f"component of size {leak:.3e} in its null space"
            )
    wr = (vr.T @ wv) / np.sqrt(evals)
    tr = (vr.T @ tv) / np.sqrt(evals)
    val = wr @ wr - (wr @ tr) ** 2 / (tr @ tr)
    return float(np.sqrt(max(val, 0.0)))


def compression_matrix(p: np.ndarray) -> np.ndarray:
    """Coordinate matrix of A -> P A P."""
    m = p.shape[0]
    e = basis_matrix_completion(m)
    return hvec(p @ e @ p).T


def pinch_matrix(p: np.ndarray) -> np.ndarray:
    """Coordinate matrix of A -> A - P_perp A P_perp."""
    m = p.shape[0]
    q = np.eye(m) - p
    e = basis_matrix_completion(m)
    return hvec(e - q @ e @ q).T


def restricted_top(num: np.ndarray, k: np.ndarray, rng: np.random.Generator | None = None,
                   iters: int = 500, rtol: float = 1e-10, restarts: int = 3) -> float:
    """sup of a^T N a over a^T K a <= 1 by power iteration (N, K PSD).

    Returns ``inf`` if N does not vanish on the null space of K.
    """
    evals, vr, vn = _split_range(k)
    if vn.shape[1]:
        nn = vn.T @ num @ vn
        if np.abs(nn).max() > 1e-10 * max(1.0, np.abs(num).max()):
            return float("inf")
    s = vr / np.sqrt(evals)
    op = s.T @ num @ s
    op = 0.5 * (op + op.T)
    rng = np.random.default_rng(0) if rng is None else rng
    best = 0.0
    for _ in range(restarts):
        x = rng.standard_normal(op.shape[0])
        x /= np.linalg.norm(x)
        val = 0.0
        for _ in range(iters):
            y = op @ x
            nrm = np.linalg.norm(y)
            if nrm == 0.0:
                break
            new = float(x @ y)
            x = y / nrm
            if abs(new - val) <= rtol * max(abs(new), 1e-300):
                val = new
                break
            val = new
        best = max(best, val)
    return best


def lambda_coefficient(dist: DesignDistribution, p: np.ndarray, method: str = "auto",
                       rng: np.random.Generator | None = None) -> float:
    """sup over ||A||_L2(Pi) <= 1 of ||P A P||_2.

    ``method="auto"`` returns m for uniform sampling from an orthonormal basis
    and uses power iteration otherwise.
    """
    if method == "auto" and dist.kind in ("mc-uniform", "pauli"):
        return float(dist.dim)
    t = compression_matrix(p)
    return float(np.sqrt(restricted_top(t.T @ t, reference_gram(dist), rng)))


def beta_coefficient(dist: DesignDistribution, p: np.ndarray, method: str = "auto",
                     rng: np.random.Generator | None = None) -> float:
    """sup over ||A||_L2(Pi) <= 1 of ||A - P_perp A P_perp||_L2(Pi).

    Equal to one whenever the L2(Pi) norm is a multiple of the
    Hilbert-Schmidt norm.
    """
    if method == "auto" and dist.kind in ("mc-uniform", "pauli"):
        return 1.0
    k = reference_gram(dist)
    t = pinch_matrix(p)
    return float(np.sqrt(restricted_top(t.T @ k @ t, k, rng)))


# --- design constants --------------------------------------------------------


@dataclass
class DesignConstants:
    sigma_X: float
    sigma_XX: float
    sigma_tilde: float
    U: float
    E_norm_sq: float
    EX_norm: float
    psi2_norm: float = float("nan")
    se: dict = field(default_factory=dict)
    exact: bool = True
    analytic_bounds: dict = field(default_factory=dict)


def _op_norm_sym(a):
    return float(np.abs(np.linalg.eigvalsh(0.5 * (a + a.conj().T))).max())


def _sigma_tilde_sq(mats: np.ndarray, weights: np.ndarray, rng: np.random.Generator,
                    restarts: int = 5, iters: int = 200) -> float:
    """sup_{|u|,|v|<=1} E |<X u, v>|^2 by alternating top-eigenvector updates."""
    m = mats.shape[-1]
    best = 0.0
    for _ in range(restarts):
        u = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        u /= np.linalg.norm(u)
        val = 0.0
        for _ in range(iters):
            xu = mats @ u
            a = np.einsum("k,ki,kj->ij", weights, xu, xu.conj())
            w, vv = np.linalg.eigh(a)
            v = vv[:, -1]
            xhv = np.einsum("kji,j->ki", mats.conj(), v)
            b = np.einsum("k,ki,kj->ij", weights, xhv, xhv.conj())
            w, uu = np.linalg.eigh(b)
            u = uu[:, -1]
            new = float(w[-1])
            if abs(new - val) < 1e-13:
                val = new
                break
            val = new
        best = max(best, val)
    return best


def _moment_constants(mats: np.ndarray, weights: np.ndarray):
    ex = np.einsum("k,kij->ij", weights, mats)
    c = mats - ex
    sx2 = _op_norm_sym(np.einsum("k,kij,kjl->il", weights, c, c))
    m = mats.shape[-1]
    kron = np.einsum("kij,kab->kiajb", mats, mats).reshape(len(mats), m * m, m * m)
    ekron = np.einsum("k,kij->ij", weights, kron)
    ck = kron - ekron
    sxx2 = _op_norm_sym(np.einsum("k,kij,kjl->il", weights, ck, ck))
    norms = np.array([op_norm(x) for x in mats])
    return ex, sx2, sxx2, norms


def orlicz_norm(samples: np.ndarray, alpha: float = 2.0) -> float:
    """Empirical psi_alpha norm: inf{C : mean(exp((|x|/C)^alpha)) - 1 <= 1}, by bisection."""
    x = np.abs(np.asarray(samples, dtype=float))
    if not np.any(x > 0):
        return 0.0

    def excess(c):
        with np.errstate(over="ignore"):
            return np.mean(np.expm1((x / c) ** alpha)) - 1.0

    lo, hi = 1e-12, max(x.max(), 1e-12)
    while excess(hi) > 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def design_constants(dist: DesignDistribution, rng: np.random.Generator | None = None,
                     n_mc: int = 10**4) -> DesignConstants:
    """sigma_X, sigma_{X(x)X}, sigma-tilde, U = sup ||X||, E||X||^2 and ||EX||.

    Basis kinds are evaluated exactly by enumerating the support.  Isotropic
    kinds use ``n_mc`` Monte-Carlo draws; standard errors come from 20 batch
    means and are stored in ``se``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    m = dist.dim
    if dist.is_basis:
        mats, w = dist.support, dist.probs
        ex, sx2, sxx2, norms = _moment_constants(mats, w)
        out = DesignConstants(
            sigma_X=float(np.sqrt(sx2)),
            sigma_XX=float(np.sqrt(sxx2)),
            sigma_tilde=float(np.sqrt(_sigma_tilde_sq(mats, w, rng))),
            U=float(norms.max()),
            E_norm_sq=float(np.dot(w, norms**2)),
            EX_norm=op_norm(ex),
        )
        out.psi2_norm = float(norms.max() / np.sqrt(np.log(2.0))) if np.ptp(norms) == 0 else float("nan")
        if dist.kind == "mc-uniform":
            out.analytic_bounds = {"U": 1.0, "sigma_X": np.sqrt(3.0 / m), "sigma_XX": 4.0 / np.sqrt(m)}
        elif dist.kind == "pauli":
            out.analytic_bounds = {"U": m**-0.5}
        return out

    _, mats = sample_designs(dist, n_mc, rng)
    norms = np.abs(np.linalg.eigvalsh(mats)).max(axis=1)
    batches = np.array_split(np.arange(n_mc), 20)

    def sig_x(sel):
        x = mats[sel]
        c = x - x.mean(axis=0)
        return np.sqrt(_op_norm_sym(np.einsum("kij,kjl->il", c, c) / len(sel)))

    def sig_xx(sel):
        x = mats[sel]
        kr = np.einsum("kij,kab->kiajb", x, x).reshape(len(sel), m * m, m * m)
        c = kr - kr.mean(axis=0)
        return np.sqrt(_op_norm_sym(np.einsum("kij,kjl->il", c, c) / len(sel)))

    sx = sig_x(np.arange(n_mc))
    sxx = sig_xx(np.arange(n_mc)) if m <= 8 else float("nan")
    bx = np.array([sig_x(b) for b in batches])
    se = {
        "sigma_X": float(bx.std(ddof=1) / np.sqrt(len(batches))),
        "E_norm_sq": float((norms**2).std(ddof=1) / np.sqrt(n_mc)),
    }
    if m <= 8:
        bxx = np.array([sig_xx(b) for b in batches])
        se["sigma_XX"] = float(bxx.std(ddof=1) / np.sqrt(len(batches)))
    return DesignConstants(
        sigma_X=float(sx),
        sigma_XX=float(sxx),
        sigma_tilde=1.0,
        U=float("inf"),
        E_norm_sq=float(np.mean(norms**2)),
        EX_norm=0.0,
        psi2_norm=orlicz_norm(norms, 2.0),
        se=se,
        exact=False,
    )
