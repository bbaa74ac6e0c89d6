"""Measuring processes, ancillas, induced POVMs and Naimark dilation.

A measuring process couples the object (space H) to a probe (space K)
prepared in ``xi`` through a unitary ``U`` and then reads two commuting
pointer observables ``M1``, ``M2`` on the probe.  Conjugating the pointers
back gives the ancilla pair ``C, D`` on H (x) K whose joint spectral measure,
averaged over ``xi``, is the joint POVM.  The noise of the A channel is the
operator ``C - A (x) I``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Union

import numpy as np

from . import linalg as la
from .errors import DimensionError, InconsistencyError, ValidationError
from .povm import Axis, JointPovm, OutcomeGrid, _check_axis, validate
from .tolerances import Tolerances, resolve


def _commute_scale(X: np.ndarray, Y: np.ndarray) -> float:
    return max(1.0, la.opnorm(X) * la.opnorm(Y))


def commutation_defect(X: np.ndarray, Y: np.ndarray) -> float:
    """Max-entry size of ``[X, Y]`` relative to ``max(1, ||X|| ||Y||)``."""
    comm = X @ Y - Y @ X
    return float(np.max(np.abs(comm))) / _commute_scale(X, Y)


@dataclass(frozen=True)
class MeasuringProcess:
    dim_h: int
    xi: np.ndarray = field(repr=False)
    U: np.ndarray = field(repr=False)
    M1: np.ndarray = field(repr=False)
    M2: np.ndarray = field(repr=False)

    def __post_init__(self):
        tol = resolve(None)
        xi = la.as_state(self.xi, tol=tol)
        dk = xi.size
        U = la.as_operator(self.U)
        M1 = la.as_operator(self.M1, hermitian=True, tol=tol)
        M2 = la.as_operator(self.M2, hermitian=True, tol=tol)
        if U.shape[0] != self.dim_h * dk:
            raise DimensionError(f"U has size {U.shape[0]}, expected {self.dim_h} * {dk}")
        if M1.shape[0] != dk or M2.shape[0] != dk:
            raise DimensionError("pointer observables must act on the probe space")
        if not la.is_unitary(U, tol.unitary):
            raise ValidationError("U is not unitary")
        if commutation_defect(M1, M2) > tol.commute:
            raise ValidationError("pointer observables M1, M2 do not commute")
        for name, val in (("xi", xi), ("U", U), ("M1", M1), ("M2", M2)):
            object.__setattr__(self, name, _ro(val))

    @property
    def dim_k(self) -> int:
        return self.xi.size

    def to_dict(self) -> dict:
        return {
            "dimH": self.dim_h,
            "dimK": self.dim_k,
            "xi": la.encode_vector(self.xi),
            "U": la.encode_matrix(self.U),
            "M1": la.encode_matrix(self.M1),
            "M2": la.encode_matrix(self.M2),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasuringProcess":
        mp = cls(
            int(data["dimH"]),
            la.decode_vector(data["xi"]),
            la.decode_matrix(data["U"]),
            la.decode_matrix(data["M1"]),
            la.decode_matrix(data["M2"]),
        )
        if "dimK" in data and int(data["dimK"]) != mp.dim_k:
            raise DimensionError("dimK does not match xi")
        return mp


@dataclass(frozen=True)
class Ancilla:
    """The quadruple (K, xi, C, D): commuting observables on H (x) K and a probe state."""

    dim_h: int
    xi: np.ndarray = field(repr=False)
    C: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)

    def __post_init__(self):
        tol = resolve(None)
        xi = la.as_state(self.xi, tol=tol)
        C = la.as_operator(self.C, hermitian=True, tol=tol)
        D = la.as_operator(self.D, hermitian=True, tol=tol)
        if C.shape != D.shape or C.shape[0] != self.dim_h * xi.size:
            raise DimensionError("C and D must act on H (x) K")
        if commutation_defect(C, D) > tol.commute:
            raise ValidationError(f"C and D do not commute (defect {commutation_defect(C, D):.3e})")
        for name, val in (("xi", xi), ("C", C), ("D", D)):
            object.__setattr__(self, name, _ro(val))

    @property
    def dim_k(self) -> int:
        return self.xi.size

    def observable(self, axis: Axis) -> np.ndarray:
        return self.C if _check_axis(axis) == "A" else self.D

    def to_dict(self) -> dict:
        return {
            "dimH": self.dim_h,
            "dimK": self.dim_k,
            "xi": la.encode_vector(self.xi),
            "C": la.encode_matrix(self.C),
            "D": la.encode_matrix(self.D),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Ancilla":
        return cls(
            int(data["dimH"]),
            la.decode_vector(data["xi"]),
            la.decode_matrix(data["C"]),
            la.decode_matrix(data["D"]),
        )


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


class NoiseOperator(NamedTuple):
    target: str
    matrix: np.ndarray


# ---------------------------------------------------------------------------
# process -> ancilla -> POVM
# ---------------------------------------------------------------------------

def ancilla_from_process(mp: MeasuringProcess, tol: Tolerances | None = None) -> Ancilla:
    """``C = U^dag (I (x) M1) U`` and ``D = U^dag (I (x) M2) U``."""
    tol = resolve(tol)
    eye = np.eye(mp.dim_h)
    C = mp.U.conj().T @ la.tensor(eye, mp.M1) @ mp.U
    D = mp.U.conj().T @ la.tensor(eye, mp.M2) @ mp.U
    C = (C + C.conj().T) / 2
    D = (D + D.conj().T) / 2
    defect = commutation_defect(C, D)
    if defect > tol.route:
        raise ValidationError(f"induced C, D fail to commute (defect {defect:.3e})")
    return Ancilla(mp.dim_h, mp.xi, C, D)


def _probe_embedding(dim_h: int, xi: np.ndarray) -> np.ndarray:
    """Matrix of psi -> psi (x) xi."""
    return np.kron(np.eye(dim_h), np.asarray(xi, dtype=complex)[:, None])


def povm_from_process(mp: MeasuringProcess, tol: Tolerances | None = None) -> JointPovm:
    """Induced joint POVM ``<xi| U^dag [I (x) E^M1(x) E^M2(y)] U |xi>``.

    The grid is spectrum(M1) x spectrum(M2).
    """
    tol = resolve(tol)
    s1 = la.spectral(mp.M1, tol=tol)
    s2 = la.spectral(mp.M2, tol=tol)
    V = mp.U @ _probe_embedding(mp.dim_h, mp.xi)
    # pointer projectors acting on the fast index only
    V3 = V.reshape(mp.dim_h, mp.dim_k, mp.dim_h)
    el = np.empty((len(s1), len(s2), mp.dim_h, mp.dim_h), dtype=complex)
    for i, P1 in enumerate(s1.projectors):
        for j, P2 in enumerate(s2.projectors):
            P = P1 @ P2
            el[i, j] = np.einsum("akb,kl,alc->bc", V3.conj(), P, V3)
    el = (el + np.swapaxes(el, -1, -2).conj()) / 2
    return JointPovm(OutcomeGrid(s1.eigenvalues, s2.eigenvalues), el)


class JointSpectrum(NamedTuple):
    x_values: np.ndarray
    y_values: np.ndarray
    # projectors[i, j] = E^C(x_i) E^D(y_j)
    projectors: np.ndarray


def joint_spectral(C, D, tol: Tolerances | None = None, seed: int = 0, max_tries: int = 8) -> JointSpectrum:
    """Joint spectral projectors of commuting Hermitian ``C`` and ``D``.

    Diagonalizes ``C + gamma * D`` for a generic real ``gamma``; a collision
    (one eigenspace of the combination on which ``C`` or ``D`` is not scalar)
    triggers a retry with a fresh ``gamma``.
    """
    tol = resolve(tol)
    C = la.as_operator(C, hermitian=True, tol=tol)
    D = la.as_operator(D, hermitian=True, tol=tol)
    if commutation_defect(C, D) > tol.route:
        raise ValidationError("C and D do not commute; no joint spectral measure")
    n = C.shape[0]
    scale_c = max(la.opnorm(C), 1.0)
    scale_d = max(la.opnorm(D), 1.0)
    rng = np.random.default_rng(seed)
    gamma = (1 + 5**0.5) / 2
    for _ in range(max_tries):
        H = C / scale_c + gamma * D / scale_d
        vals, vecs = np.linalg.eigh((H + H.conj().T) / 2)
        atol = la.default_cluster_tol(vals, tol)
        pairs = []
        ok = True
        for group in la.cluster_values(vals, atol):
            Vg = vecs[:, group]
            cg = Vg.conj().T @ C @ Vg
            dg = Vg.conj().T @ D @ Vg
            c = float(np.trace(cg).real) / len(group)
            d = float(np.trace(dg).real) / len(group)
            eye = np.eye(len(group))
            if (np.max(np.abs(cg - c * eye)) > 1e3 * atol * scale_c
                    or np.max(np.abs(dg - d * eye)) > 1e3 * atol * scale_d):
                ok = False
                break
            pairs.append((c, d, Vg))
        if ok:
            break
        gamma = float(rng.uniform(0.3, 3.0))
    else:
        raise InconsistencyError("simultaneous diagonalization failed: eigenvalue collisions persist")

    cs = np.array([p[0] for p in pairs])
    ds = np.array([p[1] for p in pairs])
    xs_groups = la.cluster_values(cs, la.default_cluster_tol(np.linalg.eigvalsh(C), tol))
    ys_groups = la.cluster_values(ds, la.default_cluster_tol(np.linalg.eigvalsh(D), tol))
    x_values = np.array([cs[g].mean() for g in xs_groups])
    y_values = np.array([ds[g].mean() for g in ys_groups])
    x_of = {int(k): i for i, g in enumerate(xs_groups) for k in g}
    y_of = {int(k): j for j, g in enumerate(ys_groups) for k in g}
    proj = np.zeros((x_values.size, y_values.size, n, n), dtype=complex)
    for k, (_, _, Vg) in enumerate(pairs):
        proj[x_of[k], y_of[k]] += Vg @ Vg.conj().T
    return JointSpectrum(x_values, y_values, proj)


def povm_from_ancilla(a: Ancilla, tol: Tolerances | None = None) -> JointPovm:
    """Joint POVM ``<xi| E^C(x) E^D(y) |xi>`` of an ancilla."""
    js = joint_spectral(a.C, a.D, tol)
    W = _probe_embedding(a.dim_h, a.xi)
    el = np.einsum("ai,xyab,bj->xyij", W.conj(), js.projectors, W)
    el = (el + np.swapaxes(el, -1, -2).conj()) / 2
    return JointPovm(OutcomeGrid(js.x_values, js.y_values), el)


def noise_operator(a: Ancilla, A, target: Axis = "A") -> NoiseOperator:
    """``N_A = C - A (x) I`` (or ``D - B (x) I`` for target ``"B"``)."""
    A = la.as_operator(A, hermitian=True)
    if A.shape[0] != a.dim_h:
        raise DimensionError(f"observable of size {A.shape[0]} does not act on H of size {a.dim_h}")
    N = a.observable(target) - la.tensor(A, np.eye(a.dim_k))
    return NoiseOperator(target, N)


def conditional_output_state(
    mp: MeasuringProcess,
    rho,
    x: float,
    y: float,
    tol: Tolerances | None = None,
    form: Literal["sandwich", "literal"] = "sandwich",
) -> np.ndarray:
    """Post-measurement object state given outcome ``(x, y)``.

    ``form="sandwich"`` uses ``Tr_K{[I (x) E] U (rho (x) xi xi^dag) U^dag [I (x) E]}``,
    which is manifestly positive.  ``form="literal"`` multiplies by the pointer
    projector on the right only; the partial trace over K is cyclic for
    operators acting on K alone, so both forms agree.
    """
    tol = resolve(tol)
    rho = la.as_density(rho, tol=tol)
    if rho.shape[0] != mp.dim_h:
        raise DimensionError("state does not act on the object space")
    s1 = la.spectral(mp.M1, tol=tol)
    s2 = la.spectral(mp.M2, tol=tol)
    E1 = s1.projector_for(x, 1e-9 * max(1.0, abs(x)))
    E2 = s2.projector_for(y, 1e-9 * max(1.0, abs(y)))
    if E1 is None or E2 is None:
        raise KeyError(f"outcome ({x}, {y}) is not in the pointer spectrum")
    E = la.tensor(np.eye(mp.dim_h), E1 @ E2)
    joint = mp.U @ la.tensor(rho, la.ketbra(mp.xi)) @ mp.U.conj().T
    if form == "sandwich":
        post = E @ joint @ E
    elif form == "literal":
        post = joint @ E
    else:
        raise ValueError(f"unknown form {form!r}")
    out = la.partial_trace_k(post, mp.dim_k)
    prob = float(np.trace(out).real)
    if prob <= tol.min_probability:
        raise ValidationError(f"outcome ({x}, {y}) has probability {prob:.3e}; conditional state undefined")
    out = out / prob
    return (out + out.conj().T) / 2


# ---------------------------------------------------------------------------
# dilation
# ---------------------------------------------------------------------------

def naimark_dilate(p: JointPovm, seed: int | np.random.Generator = 0, tol: Tolerances | None = None) -> MeasuringProcess:
    """Construct a measuring process realizing ``p``.

    The probe has one basis vector per grid outcome (row-major, x-major).
    The isometry ``V psi = sum_k sqrt(Pi_k) psi (x) |k>`` fixes ``U`` on
    ``H (x) |0>``; the rest of ``U`` is an orthonormal completion drawn from
    the seeded generator.  Pointers are diagonal with the x and y labels.
    """
    tol = resolve(tol)
    report = validate(p, tol)
    if report.completeness_defect > tol.completeness or report.min_eigenvalues.min() < -tol.psd:
        raise ValidationError(f"cannot dilate an invalid POVM: {report.to_dict()}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    d = p.dim
    n = p.grid.size
    roots = [la.psd_sqrt((op + op.conj().T) / 2, tol) for _, op in p.items()]
    V = np.stack(roots, axis=1).reshape(d * n, d)  # row index a * n + k
    gram = V.conj().T @ V
    if np.max(np.abs(gram - np.eye(d))) > 10 * tol.completeness:
        raise ValidationError("dilation isometry is not isometric; POVM incomplete")
    complement = _orthonormal_complement(V, rng)
    U = np.empty((d * n, d * n), dtype=complex)
    probe_cols = np.arange(d) * n
    other_cols = np.setdiff1d(np.arange(d * n), probe_cols)
    U[:, probe_cols] = V
    U[:, other_cols] = complement
    if not la.is_unitary(U, tol.unitary):
        raise InconsistencyError("unitary extension failed")
    xs = np.array([x for _, _, x, _ in p.grid.pairs()])
    ys = np.array([y for _, _, _, y in p.grid.pairs()])
    xi = np.zeros(n, dtype=complex)
    xi[0] = 1.0
    return MeasuringProcess(d, xi, U, np.diag(xs).astype(complex), np.diag(ys).astype(complex))


def _orthonormal_complement(V: np.ndarray, rng: np.random.Generator, tries: int = 5) -> np.ndarray:
    m, r = V.shape
    if m == r:
        return np.zeros((m, 0), dtype=complex)
    for _ in range(tries):
        G = rng.standard_normal((m, m - r)) + 1j * rng.standard_normal((m, m - r))
        for _ in range(2):
            G = G - V @ (V.conj().T @ G)
        Q, R = np.linalg.qr(G)
        if np.min(np.abs(np.diag(R))) > 1e-8:
            Q = Q - V @ (V.conj().T @ Q)
            Q, _ = np.linalg.qr(Q)
            return Q
    raise InconsistencyError("unitary extension failed: random completion is rank deficient")


# ---------------------------------------------------------------------------
# model normalization
# ---------------------------------------------------------------------------

Model = Union[JointPovm, Ancilla, MeasuringProcess]


def resolve_model(model: Model, tol: Tolerances | None = None) -> tuple[JointPovm, Ancilla | None]:
    """Return the joint POVM of a model together with an ancilla, if one exists."""
    if isinstance(model, JointPovm):
        return model, None
    if isinstance(model, MeasuringProcess):
        return povm_from_process(model, tol), ancilla_from_process(model, tol)
    if isinstance(model, Ancilla):
        return povm_from_ancilla(model, tol), model
    raise TypeError(f"unsupported model type {type(model).__name__}")


def model_to_dict(model: Model) -> dict:
    kind = {JointPovm: "povm", Ancilla: "ancilla", MeasuringProcess: "process"}[type(model)]
    return {"kind": kind, **model.to_dict()}


def model_from_dict(data: dict) -> Model:
    kind = data.get("kind")
    if kind is None:
        if "elements" in data:
            kind = "povm"
        elif "U" in data:
            kind = "process"
        elif "C" in data:
            kind = "ancilla"
    if kind == "povm":
        return JointPovm.from_dict(data)
    if kind == "process":
        return MeasuringProcess.from_dict(data)
    if kind == "ancilla":
        return Ancilla.from_dict(data)
    raise ValueError(f"unknown model kind {kind!r}")
