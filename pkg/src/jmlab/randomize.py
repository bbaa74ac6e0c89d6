"""Seeded random instances: observables, states, processes and joint POVMs."""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from . import linalg as la
from .povm import JointPovm, OutcomeGrid
from .process import MeasuringProcess


def rng_from(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian(d: int, rng, scale: float = 1.0) -> np.ndarray:
    rng = rng_from(rng)
    G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return scale * (G + G.conj().T) / 2


def random_state(d: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    return la.normalize(rng.standard_normal(d) + 1j * rng.standard_normal(d))


def random_psd(d: int, rng, rank: int | None = None) -> np.ndarray:
    rng = rng_from(rng)
    r = d if rank is None else rank
    G = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    return G @ G.conj().T


def random_density(d: int, rng) -> np.ndarray:
    rho = random_psd(d, rng)
    return rho / np.trace(rho).real


def random_unitary(d: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    if d == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(d, random_state=rng)


def random_isometry(rows: int, cols: int, rng) -> np.ndarray:
    rng = rng_from(rng)
    G = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_values(n: int, rng, integer: bool = False) -> np.ndarray:
    """``n`` distinct sorted outcome labels."""
    rng = rng_from(rng)
    if integer:
        return np.sort(rng.choice(np.arange(-4, 5), size=n, replace=False)).astype(float)
    vals = np.sort(rng.uniform(-2, 2, size=n))
    while n > 1 and np.min(np.diff(vals)) < 1e-3:
        vals = np.sort(rng.uniform(-2, 2, size=n))
    return vals


def random_povm(d: int, nx: int, ny: int, rng, zero_fraction: float = 0.0) -> JointPovm:
    """Random joint POVM from a Haar-like isometry sliced into d x d blocks.

    With ``zero_fraction > 0`` some grid points are forced empty.
    """
    rng = rng_from(rng)
    n = nx * ny
    G = rng.standard_normal((n, d, d)) + 1j * rng.standard_normal((n, d, d))
    if zero_fraction > 0:
        mask = rng.random(n) < zero_fraction
        if mask.all():
            mask[rng.integers(n)] = False
        G[mask] = 0
    stacked = G.reshape(n * d, d)
    gram_inv_sqrt = la.psd_sqrt(np.linalg.inv(stacked.conj().T @ stacked))
    V = (stacked @ gram_inv_sqrt).reshape(n, d, d)
    el = np.einsum("kai,kaj->kij", V.conj(), V)
    el = (el + np.swapaxes(el, -1, -2).conj()) / 2
    grid = OutcomeGrid(random_values(nx, rng), random_values(ny, rng))
    return JointPovm(grid, el.reshape(nx, ny, d, d))


def random_commuting_pair(d: int, rng, degenerate: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Two Hermitian matrices diagonal in one random basis (with repeated eigenvalues)."""
    rng = rng_from(rng)
    W = random_unitary(d, rng)
    if degenerate:
        a = rng.integers(-2, 3, size=d).astype(float)
        b = rng.integers(-2, 3, size=d).astype(float)
    else:
        a, b = rng.standard_normal(d), rng.standard_normal(d)
    A = W @ np.diag(a) @ W.conj().T
    B = W @ np.diag(b) @ W.conj().T
    return (A + A.conj().T) / 2, (B + B.conj().T) / 2


def random_process(dim_h: int, dim_k: int, rng) -> MeasuringProcess:
    """Random unitary coupling with commuting (possibly degenerate) pointers."""
    rng = rng_from(rng)
    M1, M2 = random_commuting_pair(dim_k, rng)
    return MeasuringProcess(dim_h, random_state(dim_k, rng), random_unitary(dim_h * dim_k, rng), M1, M2)
