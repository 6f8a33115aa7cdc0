"""Density matrices, entropy, distances between states and Gibbs oracles."""

from __future__ import annotations

import numpy as np

from .hermitian import (
    EIG_FLOOR,
    DomainError,
    as_hermitian,
    eig_hermitian,
    from_spectrum,
    random_unitary,
    schatten_norm,
    spectral_apply,
)

PSD_ATOL = 1e-10
TRACE_ATOL = 1e-10


def check_density(s, *, psd_atol: float = PSD_ATOL, trace_atol: float = TRACE_ATOL) -> np.ndarray:
    """Validate a density matrix and return it as a Hermitian array.

    Raises:
        ValueError: on a negative eigenvalue below ``-psd_atol`` or a trace
            farther than ``trace_atol`` from one.
    """
    s = as_hermitian(s)
    tr = np.real(np.trace(s))
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"density matrix must have unit trace, got {tr:.12g}")
    lmin = np.linalg.eigvalsh(s)[0]
    if lmin < -psd_atol:
        raise ValueError(f"density matrix has negative eigenvalue {lmin:.3e}")
    return s


def maximally_mixed(m: int) -> np.ndarray:
    return np.eye(m, dtype=complex) / m


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def projector(vectors) -> np.ndarray:
    """Orthogonal projection onto the span of the given columns."""
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[1] == 0:
        return np.zeros((v.shape[0], v.shape[0]), dtype=complex)
    q, _ = np.linalg.qr(v)
    p = q @ q.conj().T
    return 0.5 * (p + p.conj().T)


def random_projector(m: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(m, rng)
    return projector(u[:, :rank])


def entropy_penalty(s: np.ndarray) -> float:
    """tr(S log S), i.e. minus the von Neumann entropy (0 log 0 = 0)."""
    w = np.linalg.eigvalsh(np.asarray(s, dtype=complex))
    return float(np.sum(spectral_apply(w, "xlogx")))


def _log_pd(s: np.ndarray, name: str) -> np.ndarray:
    w, v = eig_hermitian(s)
    if w[-1] <= EIG_FLOOR:
        raise DomainError(f"{name} must be positive definite, smallest eigenvalue {w[-1]:.3e}")
    return from_spectrum(np.log(w), v)


def kl_divergence(s1: np.ndarray, s2: np.ndarray) -> float:
    """Quantum relative entropy tr(S1 (log S1 - log S2)).

    ``s2`` must be strictly positive definite; ``s1`` may be rank deficient.
    """
    log2 = _log_pd(s2, "second argument of kl_divergence")
    return float(entropy_penalty(s1) - np.real(np.vdot(log2, s1)))


def symmetrized_kl(s1: np.ndarray, s2: np.ndarray) -> float:
    """tr((S1 - S2)(log S1 - log S2)); both arguments positive definite."""
    d = _log_pd(s1, "first argument of symmetrized_kl") - _log_pd(s2, "second argument of symmetrized_kl")
    return float(np.real(np.vdot(d, np.asarray(s1) - np.asarray(s2))))


def _psd_sqrt(s: np.ndarray) -> np.ndarray:
    w, v = eig_hermitian(s)
    return from_spectrum(np.sqrt(np.clip(w, 0.0, None)), v)


def fidelity(s1: np.ndarray, s2: np.ndarray) -> float:
    """F(S1, S2) = tr sqrt(S1^{1/2} S2 S1^{1/2}) (not squared).

    Evaluated as the nuclear norm of S1^{1/2} S2^{1/2}, which is symmetric in
    its arguments and avoids square roots of tiny inner eigenvalues.
    """
    return float(np.linalg.svd(_psd_sqrt(s1) @ _psd_sqrt(s2), compute_uv=False).sum())


def hellinger_sq(s1: np.ndarray, s2: np.ndarray) -> float:
    return max(0.0, 2.0 * (1.0 - fidelity(s1, s2)))


def trace_distance(s1: np.ndarray, s2: np.ndarray) -> float:
    """Nuclear norm ||S1 - S2||_1 (no 1/2 factor)."""
    return schatten_norm(np.asarray(s1) - np.asarray(s2), 1)


def rank_transfer_check(s1: np.ndarray, s2: np.ndarray, p: np.ndarray) -> tuple[float, float]:
    """Both sides of ||P S1 P||_1 <= 2 ||P S2 P||_1 + 2 H^2(S1, S2)."""
    lhs = schatten_norm(p @ s1 @ p, 1)
    rhs = 2.0 * schatten_norm(p @ s2 @ p, 1) + 2.0 * hellinger_sq(s1, s2)
    return lhs, rhs


def _ascending(h: np.ndarray):
    w, v = np.linalg.eigh(np.asarray(h, dtype=complex))
    return w, v


def gibbs_state(h: np.ndarray) -> np.ndarray:
    """exp(-H) / tr exp(-H), computed with the spectrum shifted by its minimum."""
    w, v = _ascending(h)
    p = np.exp(-(w - w[0]))
    p /= p.sum()
    return from_spectrum(p, v)


def gibbs_tail(h: np.ndarray, r: int) -> float:
    """Gibbs weight outside the span of the ``r`` lowest-energy eigenvectors.

    Energies are sorted ascending here, the reverse of :class:`Spectrum`.
    """
    w, _ = _ascending(h)
    m = w.size
    if not 0 <= r <= m:
        raise ValueError(f"r must lie in [0, {m}], got {r}")
    p = np.exp(-(w - w[0]))
    return float(p[r:].sum() / p.sum())


def gibbs_truncate(h: np.ndarray, r: int) -> tuple[np.ndarray, float]:
    """Keep the ``r`` lowest energies of ``H``; return it and their sum of squares."""
    w, v = _ascending(h)
    m = w.size
    if not 0 <= r <= m:
        raise ValueError(f"r must lie in [0, {m}], got {r}")
    kept = np.where(np.arange(m) < r, w, 0.0)
    return from_spectrum(kept, v), float(np.sum(w[:r] ** 2))


def low_energy_projector(h: np.ndarray, r: int) -> np.ndarray:
    _, v = _ascending(h)
    return projector(v[:, :r])


def random_density(m: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    """Random state of exact rank ``rank``.

    Eigenvalues are normalized i.i.d. Exponential(1) draws, eigenvectors the
    columns of a Haar unitary.
    """
    if not 1 <= rank <= m:
        raise ValueError(f"rank must lie in [1, {m}], got {rank}")
    w = rng.exponential(1.0, size=rank)
    w = w / w.sum()
    u = random_unitary(m, rng)[:, :rank]
    s = (u * w) @ u.conj().T
    s = 0.5 * (s + s.conj().T)
    return s / np.real(np.trace(s))
