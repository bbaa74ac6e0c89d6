"""Dense operator algebra on small Hilbert spaces.

Operators are plain complex ``numpy`` arrays of shape ``(d, d)`` and state
vectors are 1-D complex arrays.  The helpers in this module validate shapes,
compute commutators and moments, build tensor products with the first factor
as the slow index, and take partial means over an ancilla state.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, ValidationError
from .tolerances import Tolerances, resolve

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def hermitian_defect(X: np.ndarray) -> float:
    """Max-entry distance between ``X`` and its conjugate transpose."""
    return float(np.max(np.abs(X - X.conj().T))) if X.size else 0.0


def opnorm(X: np.ndarray) -> float:
    """Spectral (operator 2-) norm."""
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X, 2))


def as_operator(X, *, hermitian: bool = False, tol: Tolerances | None = None) -> np.ndarray:
    """Return ``X`` as a square complex matrix, optionally checking hermiticity."""
    tol = resolve(tol)
    X = np.asarray(X, dtype=complex)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or X.shape[0] == 0:
        raise DimensionError(f"operator must be a non-empty square matrix, got shape {X.shape}")
    if hermitian:
        defect = hermitian_defect(X)
        if defect > tol.hermitian:
            raise ValidationError(f"operator is not Hermitian (defect {defect:.3e})")
    return X


def as_state(psi, *, tol: Tolerances | None = None) -> np.ndarray:
    """Return ``psi`` as a normalized complex vector; raises if the norm is off."""
    tol = resolve(tol)
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size == 0:
        raise DimensionError(f"state vector must be 1-D and non-empty, got shape {psi.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol.normalization:
        raise ValidationError(f"state vector not normalized (norm {norm:.12g})")
    return psi


def as_density(rho, *, tol: Tolerances | None = None) -> np.ndarray:
    tol = resolve(tol)
    rho = as_operator(rho, hermitian=True, tol=tol)
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol.normalization:
        raise ValidationError(f"density matrix trace is {tr}")
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < -tol.psd:
        raise ValidationError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def normalize(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return psi / np.linalg.norm(psi)


def ketbra(psi: np.ndarray, phi: np.ndarray | None = None) -> np.ndarray:
    phi = psi if phi is None else phi
    return np.outer(psi, np.conj(phi))


def _same_dim(*ops: np.ndarray) -> int:
    dims = {op.shape[0] for op in ops}
    if len(dims) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def commutator(X, Y) -> np.ndarray:
    """Return ``XY - YX``."""
    X, Y = as_operator(X), as_operator(Y)
    _same_dim(X, Y)
    return X @ Y - Y @ X


def expectation(X, psi) -> complex:
    """Return ``<psi|X|psi>`` as a complex scalar (never silently cast to real)."""
    X = np.asarray(X, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    if X.shape != (psi.size, psi.size):
        raise DimensionError(f"operator shape {X.shape} does not act on vector of length {psi.size}")
    return complex(np.vdot(psi, X @ psi))


def real_expectation(X, psi, tol: Tolerances | None = None) -> float:
    """Expectation of a Hermitian operator; asserts the imaginary part vanishes."""
    tol = resolve(tol)
    val = expectation(X, psi)
    scale = max(1.0, float(np.max(np.abs(X))) * np.shape(X)[0])
    if abs(val.imag) > tol.hermitian * scale:
        raise ValidationError(f"expectation has imaginary part {val.imag:.3e}")
    return val.real


def clamp_variance(var: float, tol: Tolerances | None = None) -> float:
    tol = resolve(tol)
    if var < -tol.variance_floor:
        raise ValidationError(f"negative variance {var:.3e}; input not Hermitian or numerically broken")
    return max(var, 0.0)


def std_dev(X, psi, tol: Tolerances | None = None) -> float:
    """Standard deviation ``(<X^2> - <X>^2)^(1/2)`` of a Hermitian ``X`` in ``psi``."""
    tol = resolve(tol)
    X = as_operator(X, hermitian=True, tol=tol)
    Xpsi = X @ np.asarray(psi, dtype=complex)
    mean = real_expectation(X, psi, tol)
    second = float(np.vdot(Xpsi, Xpsi).real)
    return float(np.sqrt(clamp_variance(second - mean**2, tol)))


def tensor(*ops) -> np.ndarray:
    """Kronecker product; the first factor carries the slow index."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _split(dim: int, dim_k: int) -> int:
    if dim_k <= 0 or dim % dim_k:
        raise DimensionError(f"dimension {dim} is not divisible by ancilla dimension {dim_k}")
    return dim // dim_k


def partial_mean(X, xi) -> np.ndarray:
    """Partial mean of an operator on H (x) K over the ancilla vector ``xi``.

    The result ``m`` satisfies ``<psi|m|phi> = <psi (x) xi|X|phi (x) xi>``.
    """
    X = as_operator(X)
    xi = np.asarray(xi, dtype=complex)
    dim_h = _split(X.shape[0], xi.size)
    X4 = X.reshape(dim_h, xi.size, dim_h, xi.size)
    return np.einsum("k,ikjl,l->ij", xi.conj(), X4, xi)


def partial_trace_k(X, dim_k: int) -> np.ndarray:
    """Trace out the second (fast-index) factor of an operator on H (x) K."""
    X = as_operator(X)
    dim_h = _split(X.shape[0], dim_k)
    return np.einsum("ikjk->ij", X.reshape(dim_h, dim_k, dim_h, dim_k))


def embed_state(psi, xi) -> np.ndarray:
    return np.kron(np.asarray(psi, dtype=complex), np.asarray(xi, dtype=complex))


# ---------------------------------------------------------------------------
# spectral tools
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (ascending) and the matching orthogonal projectors."""

    eigenvalues: np.ndarray
    projectors: tuple[np.ndarray, ...]

    def reconstruct(self) -> np.ndarray:
        return sum(v * P for v, P in zip(self.eigenvalues, self.projectors))

    def projector_for(self, value: float, atol: float) -> np.ndarray | None:
        idx = np.flatnonzero(np.abs(self.eigenvalues - value) <= atol)
        if idx.size == 0:
            return None
        return self.projectors[int(idx[0])]

    def __len__(self) -> int:
        return len(self.eigenvalues)


def cluster_values(values: Sequence[float], atol: float) -> list[np.ndarray]:
    """Group indices of ``values`` into chains whose consecutive gaps are <= atol.

    Returns index arrays ordered by ascending value.
    """
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    groups: list[list[int]] = []
    prev = None
    for i in order:
        if prev is None or values[i] - prev > atol:
            groups.append([int(i)])
        else:
            groups[-1].append(int(i))
        prev = values[i]
    return [np.array(g) for g in groups]


def default_cluster_tol(eigenvalues: np.ndarray, tol: Tolerances | None = None) -> float:
    tol = resolve(tol)
    span = float(np.ptp(eigenvalues)) if eigenvalues.size else 0.0
    return max(tol.cluster_rel * span, tol.cluster_abs)


def eigh_hermitian(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``eigh`` with an exact shortcut for diagonal input."""
    off = X - np.diag(np.diag(X))
    if not np.any(off):
        vals = np.diag(X).real.copy()
        order = np.argsort(vals, kind="stable")
        return vals[order], np.eye(X.shape[0], dtype=complex)[:, order]
    return np.linalg.eigh(X)


def spectral(X, cluster_tol: float | None = None, tol: Tolerances | None = None) -> SpectralDecomposition:
    """Spectral decomposition with near-degenerate eigenvalues merged.

    Eigenvalues closer than ``cluster_tol`` (default: ``1e-8`` times the
    spectral range) form one eigenvalue, reported as the mean of the cluster,
    with the summed projector.
    """
    tol = resolve(tol)
    X = as_operator(X, hermitian=True, tol=tol)
    X = (X + X.conj().T) / 2
    try:
        vals, vecs = eigh_hermitian(X)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ValidationError(f"eigensolver failed: {exc}") from exc
    atol = default_cluster_tol(vals, tol) if cluster_tol is None else cluster_tol
    eigenvalues = []
    projectors = []
    for group in cluster_values(vals, atol):
        V = vecs[:, group]
        eigenvalues.append(float(np.mean(vals[group])))
        projectors.append(V @ V.conj().T)
    return SpectralDecomposition(np.array(eigenvalues), tuple(projectors))


def psd_sqrt(X, tol: Tolerances | None = None) -> np.ndarray:
    """Hermitian positive square root; round-off eigenvalues (either sign) clamp to 0."""
    tol = resolve(tol)
    X = as_operator(X, hermitian=True, tol=tol)
    vals, vecs = eigh_hermitian((X + X.conj().T) / 2)
    if vals.size and vals.min() < -tol.psd:
        raise ValidationError(f"operator is not positive semidefinite (min eigenvalue {vals.min():.3e})")
    # Eigenvalues at round-off level are zero; their square roots (~1e-8) would
    # otherwise leak into quantities such as the rms noise of a projector.
    floor = 64 * np.finfo(float).eps * max(1.0, float(np.abs(vals).max()))
    roots = np.sqrt(np.where(vals > floor, vals, 0.0))
    return (vecs * roots) @ vecs.conj().T


def is_unitary(U, atol: float) -> bool:
    U = np.asarray(U, dtype=complex)
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= atol)


# ---------------------------------------------------------------------------
# JSON encoding: complex entries as [re, im], matrices row-major
# ---------------------------------------------------------------------------

def encode_complex(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def encode_vector(v) -> list[list[float]]:
    return [encode_complex(z) for z in np.asarray(v).ravel()]


def encode_matrix(M) -> list[list[list[float]]]:
    return [[encode_complex(z) for z in row] for row in np.asarray(M)]


def _decode_entry(e) -> complex:
    if isinstance(e, (int, float)):
        return complex(e)
    if len(e) != 2:
        raise ValueError(f"complex entry must be [re, im], got {e!r}")
    return complex(float(e[0]), float(e[1]))


def decode_vector(data) -> np.ndarray:
    return np.array([_decode_entry(e) for e in data], dtype=complex)


def decode_matrix(data) -> np.ndarray:
    rows = [[_decode_entry(e) for e in row] for row in data]
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("ragged matrix")
    return np.array(rows, dtype=complex)
