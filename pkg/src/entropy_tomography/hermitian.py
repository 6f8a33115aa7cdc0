"""Dense complex Hermitian matrix arithmetic.

Every matrix in the package is a plain ``numpy`` complex array; the helpers
here validate Hermitian symmetry, diagonalize, and apply scalar functions
spectrally.
"""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

HERMITIAN_ATOL = 1e-12
EIG_FLOOR = 1e-14


class DomainError(ValueError):
    """A matrix function was applied outside of its admissible domain."""


class Spectrum(NamedTuple):
    """Eigenvalues sorted in decreasing order with eigenvectors as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_hermitian(a, *, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Return ``a`` as a complex Hermitian array, symmetrizing round-off.

    Raises:
        ValueError: if ``a`` is not square or deviates from its adjoint by more
            than ``atol`` entrywise.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > atol * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"matrix is not Hermitian (max |A - A*| = {dev:.3e})")
    return 0.5 * (a + a.conj().T)


def eig_hermitian(a: np.ndarray) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending."""
    a = np.asarray(a, dtype=complex)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"eigendecomposition did not converge for a {a.shape[0]}x{a.shape[0]} matrix"
        ) from exc
    return Spectrum(w[::-1].copy(), v[:, ::-1].copy())


def from_spectrum(eigenvalues, eigenvectors) -> np.ndarray:
    """Assemble ``V diag(w) V*``."""
    v = np.asarray(eigenvectors)
    out = (v * np.asarray(eigenvalues)) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def _xlogx(w):
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    out[pos] = w[pos] * np.log(w[pos])
    return out


_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "xlogx": _xlogx,
}


def spectral_apply(w: np.ndarray, f: str, *, floor: float = EIG_FLOOR) -> np.ndarray:
    """Apply scalar function ``f`` to eigenvalues with the domain rules of
    :func:`matrix_func`."""
    if f not in _FUNCS:
        raise ValueError(f"unknown matrix function {f!r}; choose from {sorted(_FUNCS)}")
    w = np.asarray(w, dtype=float)
    if f in ("log", "xlogx"):
        bad = w < -floor
        if np.any(bad):
            raise DomainError(f"{f} needs nonnegative eigenvalues, found {w[bad].min():.3e}")
        if f == "log":
            w = np.maximum(w, floor)
        else:
            w = np.where(w < floor, 0.0, w)
    elif f == "sqrt":
        bad = w < -floor
        if np.any(bad):
            raise DomainError(f"sqrt needs nonnegative eigenvalues, found {w[bad].min():.3e}")
        w = np.maximum(w, 0.0)
    return _FUNCS[f](w)


def matrix_func(a: np.ndarray, f: str, *, floor: float = EIG_FLOOR) -> np.ndarray:
    """Apply ``f`` in {"log", "exp", "sqrt", "xlogx"} to a Hermitian matrix.

    Eigenvalues in ``[-floor, floor)`` are treated as numerical zeros: ``log``
    clamps them to ``floor`` and ``xlogx`` maps them to 0.  Anything more
    negative raises :class:`DomainError`.
    """
    w, v = eig_hermitian(a)
    return from_spectrum(spectral_apply(w, f, floor=floor), v)


def eigvalsh_desc(a: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(np.asarray(a, dtype=complex))[::-1]


def schatten_norm(a: np.ndarray, p: float = 2) -> float:
    """Schatten p-norm of a Hermitian matrix; ``p=np.inf`` is the operator norm."""
    if not p >= 1:
        raise ValueError(f"Schatten norm needs p >= 1, got {p}")
    s = np.abs(np.linalg.eigvalsh(np.asarray(a, dtype=complex)))
    if np.isinf(p):
        return float(s.max())
    if p == 1:
        return float(s.sum())
    if p == 2:
        return float(np.sqrt(np.sum(s * s)))
    return float(np.sum(s**p) ** (1.0 / p))


def op_norm(a: np.ndarray) -> float:
    return schatten_norm(a, np.inf)


def hs_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Hilbert-Schmidt inner product tr(A B*), real for Hermitian inputs."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.real(np.vdot(b, a)))


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def random_hermitian(m: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """GUE-like test matrix with Frobenius norm of order ``scale * m``."""
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return scale * 0.5 * (g + g.conj().T)


def random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
