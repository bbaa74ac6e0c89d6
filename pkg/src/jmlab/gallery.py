"""Canonical joint-measurement models.

* the guess measurement: precise A, constant answer for B;
* smeared and unbiased noisy joint measurements;
* the difference/sum model on two clock-and-shift systems, a discrete
  stand-in for measuring ``Q - Q'`` and ``P + P'``;
* ancilla models with additive, state-independent noise;
* truncated harmonic oscillators and the position-versus-total-momentum
  bound they approximately obey.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .errors import ValidationError
from .povm import JointPovm, OutcomeGrid
from .process import Ancilla, commutation_defect
from .relations import RelationRecord
from .tolerances import Tolerances, resolve


# ---------------------------------------------------------------------------
# finite stand-ins for conjugate pairs
# ---------------------------------------------------------------------------

def dft_matrix(d: int) -> np.ndarray:
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


@dataclass(frozen=True)
class DiscretePair:
    """Clock observable ``X = diag(0..d-1)`` and its Fourier conjugate ``P = F X F^dag``."""

    d: int
    X: np.ndarray = field(init=False, repr=False)
    P: np.ndarray = field(init=False, repr=False)
    F: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("dimension must be at least 2")
        F = dft_matrix(self.d)
        X = np.diag(np.arange(self.d)).astype(complex)
        P = F @ X @ F.conj().T
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "P", (P + P.conj().T) / 2)


@dataclass(frozen=True)
class TruncatedOscillator:
    """Position and momentum built from a ladder operator cut off at ``N`` levels.

    ``[Q, P] = i hbar`` holds on every basis row except the last one.
    """

    N: int
    hbar: float = 1.0

    @property
    def lowering(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.N)), k=1).astype(complex)

    @property
    def Q(self) -> np.ndarray:
        a = self.lowering
        return np.sqrt(self.hbar / 2) * (a + a.conj().T)

    @property
    def P(self) -> np.ndarray:
        a = self.lowering
        return 1j * np.sqrt(self.hbar / 2) * (a.conj().T - a)

    def ccr_residual(self) -> np.ndarray:
        return la.commutator(self.Q, self.P) - 1j * self.hbar * np.eye(self.N)

    def truncation_estimate(self, psi) -> float:
        """``||([Q, P] - i hbar) psi||``; zero iff psi has no weight on the top level.

        Uses ``[a, a^dag] = I - N |N-1><N-1|``, which makes the residual
        ``-i hbar N |N-1><N-1|`` exactly.
        """
        psi = np.asarray(psi, dtype=complex)
        return float(self.hbar * self.N * abs(psi[self.N - 1]))

    # low-lying states
    def fock(self, n: int = 0) -> np.ndarray:
        psi = np.zeros(self.N, dtype=complex)
        psi[n] = 1.0
        return psi

    def coherent(self, alpha: complex) -> np.ndarray:
        n = np.arange(self.N)
        log_fact = np.cumsum(np.log(np.maximum(n, 1)))
        amp = np.exp(-abs(alpha) ** 2 / 2 - 0.5 * log_fact) * np.power(complex(alpha), n)
        return la.normalize(amp)

    def squeezed_vacuum(self, r: float) -> np.ndarray:
        """Squeezed vacuum; ``r > 0`` narrows the momentum distribution."""
        psi = np.zeros(self.N, dtype=complex)
        t = np.tanh(r)
        for m in range(0, (self.N + 1) // 2):
            n = 2 * m
            if n >= self.N:
                break
            log_c = 0.5 * np.sum(np.log(np.arange(1, n + 1))) - m * np.log(2) - np.sum(np.log(np.arange(1, m + 1)))
            psi[n] = np.exp(log_c) * t**m
        return la.normalize(psi)


# ---------------------------------------------------------------------------
# POVM-level models
# ---------------------------------------------------------------------------

def guess_model(A, B=None, y0: float = 0.0, tol: Tolerances | None = None) -> JointPovm:
    """Precise measurement of ``A`` with the constant answer ``y0`` for ``B``.

    ``Pi(x, y) = E^A(x)`` if ``y == y0`` and zero otherwise.  ``B`` only
    serves as a dimension check.
    """
    tol = resolve(tol)
    A = la.as_operator(A, hermitian=True, tol=tol)
    if B is not None and la.as_operator(B).shape != A.shape:
        raise ValueError("A and B must act on the same space")
    dec = la.spectral(A, tol=tol)
    el = np.stack(dec.projectors)[:, None, :, :]
    return JointPovm(OutcomeGrid(dec.eigenvalues, [y0]), el)


def smeared_model(A, eta: float, y0: float = 0.0, tol: Tolerances | None = None) -> JointPovm:
    """Guess model whose A output is mixed with white noise.

    ``Pi^A(x) = (1 - eta) E^A(x) + eta I / k`` over the ``k`` eigenvalues.
    """
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    tol = resolve(tol)
    A = la.as_operator(A, hermitian=True, tol=tol)
    dec = la.spectral(A, tol=tol)
    k = len(dec)
    eye = np.eye(A.shape[0])
    el = np.stack([(1 - eta) * P + eta * eye / k for P in dec.projectors])[:, None, :, :]
    return JointPovm(OutcomeGrid(dec.eigenvalues, [y0]), el)


def product_model(A, B, tol: Tolerances | None = None) -> JointPovm:
    """``Pi(x, y) = E^A(x) E^B(y)`` for commuting ``A`` and ``B``."""
    tol = resolve(tol)
    A = la.as_operator(A, hermitian=True, tol=tol)
    B = la.as_operator(B, hermitian=True, tol=tol)
    if commutation_defect(A, B) > tol.commute:
        raise ValidationError("product model requires commuting observables")
    sa, sb = la.spectral(A, tol=tol), la.spectral(B, tol=tol)
    el = np.einsum("xij,yjk->xyik", np.stack(sa.projectors), np.stack(sb.projectors))
    el = (el + np.swapaxes(el, -1, -2).conj()) / 2
    return JointPovm(OutcomeGrid(sa.eigenvalues, sb.eigenvalues), el)


def bloch_observable(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[0] * la.SIGMA_X + v[1] * la.SIGMA_Y + v[2] * la.SIGMA_Z


def unbiased_qubit_model(a, b, eta: float) -> JointPovm:
    """Unbiased noisy joint measurement of ``a.sigma`` and ``b.sigma``.

    ``Pi(s, t) = (I + eta (s a + t b).sigma) / 4`` with outcomes ``s/eta`` and
    ``t/eta``; the first moments reproduce the observables exactly, so both
    noises are statistically independent.  Requires
    ``eta * max|s a + t b| <= 1``.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if not np.isclose(np.linalg.norm(a), 1) or not np.isclose(np.linalg.norm(b), 1):
        raise ValueError("Bloch vectors must be unit length")
    if eta <= 0 or eta * max(np.linalg.norm(a + b), np.linalg.norm(a - b)) > 1 + 1e-12:
        raise ValueError(f"eta = {eta} gives a non-positive POVM")
    signs = (-1.0, 1.0)
    el = np.empty((2, 2, 2, 2), dtype=complex)
    for i, s in enumerate(signs):
        for j, t in enumerate(signs):
            el[i, j] = (np.eye(2) + eta * bloch_observable(s * a + t * b)) / 4
    vals = np.array(signs) / eta
    return JointPovm(OutcomeGrid(vals, vals), el)


# ---------------------------------------------------------------------------
# ancilla-level models
# ---------------------------------------------------------------------------

def epr_difference_sum_model(d: int, xi) -> Ancilla:
    """Difference-of-clocks / sum-of-shifts measurement on ``C^d (x) C^d``.

    ``C`` returns ``(j - k) mod d`` for clock values ``j`` (object) and ``k``
    (probe); ``D`` returns ``(p + p') mod d`` for the Fourier-conjugate
    values.  Both are functions of the commuting unitaries ``Z (x) Z^dag``
    and ``S (x) S``, so ``[C, D] = 0``.  The target observables are the
    clock ``X`` and its conjugate ``P`` of :class:`DiscretePair`; outcome
    labels are the integers ``0..d-1``, so the noise is an ordinary operator
    difference, not a modular one.
    """
    pair = DiscretePair(d)
    xi = la.as_state(xi)
    if xi.size != d:
        raise ValueError("probe state must live in C^d")
    j = np.arange(d)
    diff = np.mod(j[:, None] - j[None, :], d).ravel()
    total = np.mod(j[:, None] + j[None, :], d).ravel()
    C = np.diag(diff).astype(complex)
    FF = np.kron(pair.F, pair.F)
    D = FF @ np.diag(total) @ FF.conj().T
    D = (D + D.conj().T) / 2
    defect = commutation_defect(C, D)
    if defect > 1e-9:
        raise ValidationError(f"difference/sum pair does not commute (defect {defect:.3e})")
    return Ancilla(d, xi, C, D)


def sharpened_probe(d: int, width: float) -> np.ndarray:
    """Probe state peaked at clock value 0 with a wrapped Gaussian profile."""
    k = np.arange(d)
    centered = np.where(k <= d // 2, k, k - d)
    if width == np.inf:
        return la.normalize(np.ones(d))
    return la.normalize(np.exp(-(centered**2) / (4 * width**2)).astype(complex))


def independent_noise_model(A, B, G1, G2, xi, tol: Tolerances | None = None) -> Ancilla:
    """Ancilla with additive probe noise: ``C = A (x) I + I (x) G1``, ``D = B (x) I + I (x) G2``.

    The mean noise operators are ``<xi|G1|xi> I`` and ``<xi|G2|xi> I``, so both
    noises are statistically independent.  The construction is rejected
    unless ``[C, D] = 0``.
    """
    tol = resolve(tol)
    A = la.as_operator(A, hermitian=True, tol=tol)
    B = la.as_operator(B, hermitian=True, tol=tol)
    G1 = la.as_operator(G1, hermitian=True, tol=tol)
    G2 = la.as_operator(G2, hermitian=True, tol=tol)
    xi = la.as_state(xi, tol=tol)
    eye_h, eye_k = np.eye(A.shape[0]), np.eye(xi.size)
    C = la.tensor(A, eye_k) + la.tensor(eye_h, G1)
    D = la.tensor(B, eye_k) + la.tensor(eye_h, G2)
    defect = commutation_defect(C, D)
    if defect > tol.commute:
        raise ValidationError(f"[C, D] != 0 (defect {defect:.3e}); independent-noise model rejected")
    return Ancilla(A.shape[0], xi, C, D)


def disjoint_noise_model(A, B, G1, xi1, G2, xi2, tol: Tolerances | None = None) -> Ancilla:
    """Independent noise on two separate probe factors ``K1 (x) K2``."""
    G1 = la.as_operator(G1)
    G2 = la.as_operator(G2)
    return independent_noise_model(
        A, B,
        la.tensor(G1, np.eye(G2.shape[0])),
        la.tensor(np.eye(G1.shape[0]), G2),
        la.tensor(np.asarray(xi1)[:, None], np.asarray(xi2)[:, None]).ravel(),
        tol,
    )


# ---------------------------------------------------------------------------
# truncated continuous-variable demonstration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CCRStateResult:
    label: str
    eps_total_momentum: float
    eps_position: float
    std_total_momentum: float
    std_position: float
    std_P: float
    std_P_probe: float
    gur: RelationRecord
    closing_lhs: float
    closing_rhs: float
    closing_slack: float
    closing_tolerance: float
    truncation_estimate: float
    pair_commutator_defect: float

    @property
    def gur_ok(self) -> bool:
        return self.gur.slack >= -self.truncation_estimate

    @property
    def closing_ok(self) -> bool:
        return self.closing_slack >= -self.truncation_estimate

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "gur"}
        out["gur"] = self.gur.to_dict()
        out["gur_ok"] = self.gur_ok
        out["closing_ok"] = self.closing_ok
        return out


@dataclass(frozen=True)
class CCRDemoReport:
    N: int
    hbar: float
    results: tuple[CCRStateResult, ...]

    @property
    def all_ok(self) -> bool:
        return all(r.gur_ok and r.closing_ok for r in self.results)

    def to_dict(self) -> dict:
        return {"N": self.N, "hbar": self.hbar, "all_ok": self.all_ok,
                "results": [r.to_dict() for r in self.results]}


def default_ccr_states(osc: TruncatedOscillator) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    return {
        "ground x ground": (osc.fock(0), osc.fock(0)),
        "coherent(1) x coherent(0.5i)": (osc.coherent(1.0), osc.coherent(0.5j)),
        "squeezed(0.5) x ground": (osc.squeezed_vacuum(0.5), osc.fock(0)),
    }


def truncated_ccr_demo(N: int = 16, states: dict | None = None, hbar: float = 1.0,
                       tail_tol: float = 0.05, tol: Tolerances | None = None) -> CCRDemoReport:
    """Position-vs-total-momentum bound for two truncated oscillators.

    The apparatus reads ``Q - Q'`` as position and ``P + P'`` as total
    momentum, so ``eps(P + P') = 0`` and the position noise operator is
    ``-Q'``.  For each product state the generalized relation with
    ``A = P + P'``, ``B = Q`` and the closing bound
    ``eps(Q)^2 >= hbar^2 / (4 dP^2 + 4 dP'^2)`` are evaluated.  Truncation
    breaks the canonical commutator on the top level only; the estimate
    ``||([Q,P] - i hbar) psi1|| + ||([Q',P'] - i hbar) psi2||`` bounds the
    resulting error.
    """
    tol = resolve(tol)
    if N < 8:
        raise ValueError("cutoff N must be at least 8")
    osc = TruncatedOscillator(N, hbar)
    states = default_ccr_states(osc) if states is None else states
    Q, P = osc.Q, osc.P
    eye = np.eye(N)
    total_p = la.tensor(P, eye) + la.tensor(eye, P)
    position = la.tensor(Q, eye)
    diff_q = la.tensor(Q, eye) - la.tensor(eye, Q)
    noise_q = diff_q - position
    results = []
    for label, (psi1, psi2) in states.items():
        psi1, psi2 = la.as_state(psi1, tol=tol), la.as_state(psi2, tol=tol)
        for part in (psi1, psi2):
            tail = float(np.sum(np.abs(part[N // 2:]) ** 2))
            if tail > tail_tol:
                raise ValueError(f"state {label!r} has weight {tail:.3g} above level N/2; increase N")
        psi = la.tensor(psi1[:, None], psi2[:, None]).ravel()
        eps_a = 0.0
        eps_b = float(np.linalg.norm(noise_q @ psi))
        std_a = la.std_dev(total_p, psi, tol)
        std_b = la.std_dev(position, psi, tol)
        half = 0.5 * abs(la.expectation(la.commutator(total_p, position), psi))
        gur = RelationRecord.make(
            "gur", eps_a * eps_b + eps_a * std_b + std_a * eps_b, half, tol,
            eps_product=eps_a * eps_b, eps_A_std_B=eps_a * std_b, std_A_eps_B=std_a * eps_b,
        )
        std_p1 = la.std_dev(P, psi1, tol)
        std_p2 = la.std_dev(P, psi2, tol)
        est = osc.truncation_estimate(psi1) + osc.truncation_estimate(psi2)
        closing_rhs = hbar**2 / (4 * std_p1**2 + 4 * std_p2**2)
        results.append(CCRStateResult(
            label=label,
            eps_total_momentum=eps_a,
            eps_position=eps_b,
            std_total_momentum=std_a,
            std_position=std_b,
            std_P=std_p1,
            std_P_probe=std_p2,
            gur=gur,
            closing_lhs=eps_b**2,
            closing_rhs=closing_rhs,
            closing_slack=eps_b**2 - closing_rhs,
            closing_tolerance=hbar * est / (2 * (std_p1**2 + std_p2**2)),
            truncation_estimate=est,
            pair_commutator_defect=float(np.linalg.norm(la.commutator(diff_q, total_p) @ psi)),
        ))
    return CCRDemoReport(N, hbar, tuple(results))
