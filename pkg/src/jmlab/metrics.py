"""Noise statistics of a joint POVM: mean noise operator, rms noise, spreads.

All metrics are computed from the POVM alone.  Passing an :class:`Ancilla`
additionally evaluates the same quantity through the noise operator
``N = C - A (x) I`` and raises :class:`InconsistencyError` if the two routes
disagree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import linalg as la
from .errors import DimensionError, InconsistencyError
from .povm import Axis, JointPovm, marginal, moment_operator
from .process import Ancilla, noise_operator
from .tolerances import Tolerances, resolve


def _observable(p: JointPovm, A, tol: Tolerances) -> np.ndarray:
    A = la.as_operator(A, hermitian=True, tol=tol)
    if A.shape[0] != p.dim:
        raise DimensionError(f"observable of size {A.shape[0]} does not match POVM dimension {p.dim}")
    return A


def _check_route(name: str, a: float | np.ndarray, b: float | np.ndarray, limit: float) -> None:
    gap = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    if gap > limit:
        raise InconsistencyError(f"{name}: routes disagree by {gap:.3e}")


def mean_noise_operator(p: JointPovm, A, axis: Axis = "A", ancilla: Ancilla | None = None,
                        tol: Tolerances | None = None) -> np.ndarray:
    """``n = O(Pi^A) - A``, checked against ``sum_x Pi^A(x) (x - A)``.

    With an ancilla, also checked against the partial mean ``<xi|N|xi>``.
    """
    tol = resolve(tol)
    A = _observable(p, A, tol)
    m = marginal(p, axis)
    n_moment = moment_operator(m, 1) - A
    n_sum = sum(Pi @ (x * np.eye(p.dim) - A) for x, Pi in zip(m.values, m.elements))
    _check_route("mean noise operator (moment vs sum form)", n_moment, n_sum, tol.route)
    if ancilla is not None:
        N = noise_operator(ancilla, A, axis).matrix
        _check_route("mean noise operator (POVM vs ancilla)", n_moment, la.partial_mean(N, ancilla.xi), tol.route)
    return (n_moment + n_moment.conj().T) / 2


def _sum_form_eps2(p: JointPovm, A: np.ndarray, psi: np.ndarray, axis: Axis) -> float:
    m = marginal(p, axis)
    Apsi = A @ psi
    total = 0.0
    for x, Pi in zip(m.values, m.elements):
        # Summing squared norms of Pi^(1/2) v keeps a precise marginal at eps ~ 1e-16;
        # the equivalent <v|Pi|v> cancels to ~1e-16 in eps^2, i.e. ~1e-8 in eps.
        w = la.psd_sqrt(Pi) @ (x * psi - Apsi)
        total += float(np.vdot(w, w).real)
    return total


def rms_noise(p: JointPovm, A, psi, axis: Axis = "A", ancilla: Ancilla | None = None,
              tol: Tolerances | None = None) -> float:
    """Root-mean-square noise ``eps`` of the ``axis`` output as a measurement of ``A``."""
    tol = resolve(tol)
    A = _observable(p, A, tol)
    psi = la.as_state(psi, tol=tol)
    eps2 = la.clamp_variance(_sum_form_eps2(p, A, psi, axis), tol)
    if ancilla is not None:
        N = noise_operator(ancilla, A, axis).matrix
        Npsi = N @ la.embed_state(psi, ancilla.xi)
        _check_route("rms noise (POVM vs ancilla)", eps2, float(np.vdot(Npsi, Npsi).real),
                     tol.completeness * max(1.0, la.opnorm(N)) ** 2)
    return float(np.sqrt(eps2))


def _mean_noise_value(n: np.ndarray, psi: np.ndarray, tol: Tolerances) -> float:
    return la.real_expectation(n, psi, tol)


def noise_std(p: JointPovm, A, psi, axis: Axis = "A", ancilla: Ancilla | None = None,
              tol: Tolerances | None = None) -> float:
    """Standard deviation of the noise: ``(eps^2 - <psi|n|psi>^2)^(1/2)``."""
    tol = resolve(tol)
    psi = la.as_state(psi, tol=tol)
    eps = rms_noise(p, A, psi, axis, ancilla, tol)
    n = mean_noise_operator(p, A, axis, ancilla, tol)
    value = float(np.sqrt(la.clamp_variance(eps**2 - _mean_noise_value(n, psi, tol) ** 2, tol)))
    if ancilla is not None:
        N = noise_operator(ancilla, A, axis).matrix
        _check_route("noise variance (POVM vs ancilla)", value**2,
                     la.std_dev(N, la.embed_state(psi, ancilla.xi), tol) ** 2,
                     tol.route * max(1.0, la.opnorm(N)) ** 2)
    return value


def output_std(p: JointPovm, psi, axis: Axis = "A", tol: Tolerances | None = None) -> float:
    """Standard deviation of the classical output distribution of one axis."""
    tol = resolve(tol)
    psi = la.as_state(psi, tol=tol)
    m = marginal(p, axis)
    first = la.real_expectation(moment_operator(m, 1), psi, tol)
    second = la.real_expectation(moment_operator(m, 2), psi, tol)
    return float(np.sqrt(la.clamp_variance(second - first**2, tol)))


class Check(NamedTuple):
    ok: bool
    value: float
    defect: float = 0.0


def is_unbiased(p: JointPovm, A, axis: Axis = "A", tol: Tolerances | None = None) -> Check:
    """``O(Pi^A) = A``; ``value`` is the defect ``||O(Pi^A) - A||``."""
    tol = resolve(tol)
    A = _observable(p, A, tol)
    defect = la.opnorm(moment_operator(marginal(p, axis), 1) - A)
    n_norm = la.opnorm(mean_noise_operator(p, A, axis, tol=tol))
    _check_route("unbiasedness (first moment vs mean noise)", defect, n_norm, tol.route)
    return Check(defect <= tol.precision, defect, defect)


def is_stat_independent(p: JointPovm, A, axis: Axis = "A", tol: Tolerances | None = None) -> Check:
    """Whether the mean noise operator is ``r I``; returns ``r = tr(n)/dim``."""
    tol = resolve(tol)
    n = mean_noise_operator(p, A, axis, tol=tol)
    r = float(np.trace(n).real) / p.dim
    residual = la.opnorm(n - r * np.eye(p.dim))
    return Check(residual <= tol.precision, r, residual)


def verify_independence_factorization(a: Ancilla, A, X, psi, axis: Axis = "A",
                                      tol: Tolerances | None = None) -> float:
    """``|<X~ N> - <psi|X|psi> <N>|`` in the state ``psi (x) xi``.

    Vanishes for every object observable ``X`` when the noise is
    statistically independent.
    """
    tol = resolve(tol)
    psi = la.as_state(psi, tol=tol)
    X = la.as_operator(X)
    N = noise_operator(a, A, axis).matrix
    Phi = la.embed_state(psi, a.xi)
    Xt = la.tensor(X, np.eye(a.dim_k))
    return abs(la.expectation(Xt @ N, Phi) - la.expectation(X, psi) * la.expectation(N, Phi))


@dataclass(frozen=True)
class NoiseReport:
    target: str
    mean_noise_op: np.ndarray = field(repr=False)
    rms_noise: float
    noise_std: float
    output_std: float
    unbiased: bool
    stat_independent: bool
    mean_noise_value: float
    independent_offset: float = 0.0

    SCALARS = ("rms_noise", "noise_std", "output_std", "mean_noise_value", "independent_offset")

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "rms_noise": self.rms_noise,
            "noise_std": self.noise_std,
            "output_std": self.output_std,
            "mean_noise_value": self.mean_noise_value,
            "unbiased": self.unbiased,
            "stat_independent": self.stat_independent,
            "independent_offset": self.independent_offset,
            "mean_noise_op": la.encode_matrix(self.mean_noise_op),
        }


def noise_report(p: JointPovm, A, psi, axis: Axis = "A", ancilla: Ancilla | None = None,
                 tol: Tolerances | None = None) -> NoiseReport:
    """All noise statistics of one axis, each computed once."""
    tol = resolve(tol)
    A = _observable(p, A, tol)
    psi = la.as_state(psi, tol=tol)
    n = mean_noise_operator(p, A, axis, ancilla, tol)
    eps = rms_noise(p, A, psi, axis, ancilla, tol)
    mean_value = _mean_noise_value(n, psi, tol)
    dn = float(np.sqrt(la.clamp_variance(eps**2 - mean_value**2, tol)))
    if ancilla is not None:
        N = noise_operator(ancilla, A, axis).matrix
        _check_route("noise variance (POVM vs ancilla)", dn**2,
                     la.std_dev(N, la.embed_state(psi, ancilla.xi), tol) ** 2,
                     tol.route * max(1.0, la.opnorm(N)) ** 2)
    r = float(np.trace(n).real) / p.dim
    return NoiseReport(
        target=axis,
        mean_noise_op=n,
        rms_noise=eps,
        noise_std=dn,
        output_std=output_std(p, psi, axis, tol),
        unbiased=la.opnorm(n) <= tol.precision,
        stat_independent=la.opnorm(n - r * np.eye(p.dim)) <= tol.precision,
        mean_noise_value=mean_value,
        independent_offset=r,
    )
