"""Numerical tolerances shared across the package.

Every check in the library takes an optional :class:`Tolerances` instance;
``None`` means :data:`DEFAULT`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    normalization: float = 1e-10
    psd: float = 1e-10
    variance_floor: float = 1e-12
    completeness: float = 1e-9
    precision: float = 1e-9
    commute: float = 1e-9
    unitary: float = 1e-9
    slack: float = 1e-9
    # relative to the spectral range of the operator being clustered
    cluster_rel: float = 1e-8
    # absolute floor for clustering when the spectral range is ~0
    cluster_abs: float = 1e-12
    # agreement of two computational routes for the same quantity
    route: float = 1e-8
    min_probability: float = 1e-12

    def with_(self, **changes) -> "Tolerances":
        return replace(self, **changes)


DEFAULT = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT if tol is None else tol
