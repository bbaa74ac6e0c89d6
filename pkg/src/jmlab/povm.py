"""Joint POVMs on a finite outcome grid, their marginals and moment operators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Literal, NamedTuple

import numpy as np

from . import linalg as la
from .errors import DimensionError, ValidationError
from .tolerances import Tolerances, resolve

Axis = Literal["A", "B"]


def _check_axis(axis: str) -> str:
    if axis not in ("A", "B"):
        raise ValueError(f"axis must be 'A' or 'B', got {axis!r}")
    return axis


def _strictly_increasing(values, name: str) -> np.ndarray:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValidationError(f"{name} must be non-empty")
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{name} must be finite")
    if np.any(np.diff(values) <= 0):
        raise ValidationError(f"{name} must be strictly increasing without duplicates")
    return values


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def _lookup(values: np.ndarray, v: float, atol: float) -> int | None:
    idx = np.flatnonzero(np.abs(values - v) <= atol)
    return int(idx[0]) if idx.size else None


@dataclass(frozen=True)
class OutcomeGrid:
    x_values: np.ndarray
    y_values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_values", _frozen(_strictly_increasing(self.x_values, "x_values")))
        object.__setattr__(self, "y_values", _frozen(_strictly_increasing(self.y_values, "y_values")))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x_values.size, self.y_values.size)

    @property
    def size(self) -> int:
        return self.x_values.size * self.y_values.size

    def index(self, x: float, y: float, atol: float = 1e-12) -> tuple[int, int]:
        i = _lookup(self.x_values, x, atol)
        j = _lookup(self.y_values, y, atol)
        if i is None or j is None:
            raise KeyError(f"outcome ({x}, {y}) is not on the grid")
        return i, j

    def pairs(self) -> Iterator[tuple[int, int, float, float]]:
        """Row-major (x-major) enumeration of grid points."""
        for i, x in enumerate(self.x_values):
            for j, y in enumerate(self.y_values):
                yield i, j, float(x), float(y)


@dataclass(frozen=True)
class JointPovm:
    """Operators ``elements[i, j]`` attached to outcome ``(x_values[i], y_values[j])``."""

    grid: OutcomeGrid
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        nx, ny = self.grid.shape
        if el.ndim != 4 or el.shape[:2] != (nx, ny) or el.shape[2] != el.shape[3]:
            raise DimensionError(f"elements must have shape ({nx}, {ny}, d, d), got {el.shape}")
        object.__setattr__(self, "elements", _frozen(el))

    @classmethod
    def from_mapping(cls, x_values, y_values, mapping: dict, dim: int) -> "JointPovm":
        """Build from ``{(x, y): operator}``; absent outcomes are zero operators."""
        grid = OutcomeGrid(x_values, y_values)
        el = np.zeros(grid.shape + (dim, dim), dtype=complex)
        for (x, y), op in mapping.items():
            i, j = grid.index(x, y)
            el[i, j] += la.as_operator(op)
        return cls(grid, el)

    @property
    def dim(self) -> int:
        return self.elements.shape[2]

    @property
    def x_values(self) -> np.ndarray:
        return self.grid.x_values

    @property
    def y_values(self) -> np.ndarray:
        return self.grid.y_values

    def element(self, x: float, y: float) -> np.ndarray:
        i, j = self.grid.index(x, y)
        return self.elements[i, j]

    def items(self):
        for i, j, x, y in self.grid.pairs():
            yield (x, y), self.elements[i, j]

    def scaled(self, factor: float) -> "JointPovm":
        return JointPovm(self.grid, self.elements * factor)

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "x_values": [float(v) for v in self.x_values],
            "y_values": [float(v) for v in self.y_values],
            "elements": [
                {"x": x, "y": y, "matrix": la.encode_matrix(op)}
                for (x, y), op in self.items()
                if np.any(op)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "JointPovm":
        dim = int(data["dim"])
        mapping: dict = {}
        for entry in data.get("elements", []):
            op = la.decode_matrix(entry["matrix"])
            if op.shape != (dim, dim):
                raise DimensionError(f"element matrix has shape {op.shape}, expected ({dim}, {dim})")
            key = (float(entry["x"]), float(entry["y"]))
            mapping[key] = mapping.get(key, 0) + op
        return cls.from_mapping(data["x_values"], data["y_values"], mapping, dim)


@dataclass(frozen=True)
class MarginalPovm:
    values: np.ndarray
    elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[0] != self.values.size:
            raise DimensionError("marginal elements must have shape (n, d, d)")
        object.__setattr__(self, "elements", _frozen(el))

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def completeness_defect(self) -> float:
        return float(np.linalg.norm(self.elements.sum(axis=0) - np.eye(self.dim), "nuc"))

    def min_eigenvalue(self) -> float:
        return float(min(np.linalg.eigvalsh(e).min() for e in self.elements))

    def is_valid(self, tol: Tolerances | None = None) -> bool:
        tol = resolve(tol)
        return self.completeness_defect() <= tol.completeness and self.min_eigenvalue() >= -tol.psd


class PovmValidity(NamedTuple):
    valid: bool
    min_eigenvalues: np.ndarray
    max_eigenvalues: np.ndarray
    hermitian_defect: float
    completeness_defect: float

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "min_eigenvalue": float(self.min_eigenvalues.min()),
            "max_eigenvalue": float(self.max_eigenvalues.max()),
            "hermitian_defect": self.hermitian_defect,
            "completeness_defect": self.completeness_defect,
        }


def validate(p: JointPovm, tol: Tolerances | None = None) -> PovmValidity:
    """Check ``0 <= Pi(x, y) <= I`` and ``sum Pi = I``; never raises on bad data.

    The completeness defect is the trace norm of ``sum Pi - I``.
    """
    tol = resolve(tol)
    nx, ny = p.grid.shape
    lo = np.empty((nx, ny))
    hi = np.empty((nx, ny))
    herm = 0.0
    for i in range(nx):
        for j in range(ny):
            op = p.elements[i, j]
            herm = max(herm, la.hermitian_defect(op))
            ev = np.linalg.eigvalsh((op + op.conj().T) / 2)
            lo[i, j], hi[i, j] = ev[0], ev[-1]
    total = p.elements.sum(axis=(0, 1))
    defect = float(np.linalg.norm(total - np.eye(p.dim), "nuc"))
    valid = (
        herm <= tol.hermitian
        and lo.min() >= -tol.psd
        and hi.max() <= 1 + tol.psd
        and defect <= tol.completeness
    )
    return PovmValidity(bool(valid), lo, hi, herm, defect)


def marginal(p: JointPovm, axis: Axis) -> MarginalPovm:
    """Sum out the other outcome: ``Pi^A(x) = sum_y Pi(x, y)`` or the B analogue."""
    _check_axis(axis)
    if axis == "A":
        return MarginalPovm(p.x_values, p.elements.sum(axis=1))
    return MarginalPovm(p.y_values, p.elements.sum(axis=0))


def probabilities(p: JointPovm, psi) -> np.ndarray:
    """Joint outcome distribution as an ``(nx, ny)`` array."""
    psi = np.asarray(psi, dtype=complex)
    if psi.size != p.dim:
        raise DimensionError("state dimension does not match POVM")
    return np.einsum("i,xyij,j->xy", psi.conj(), p.elements, psi).real


def joint_prob(p: JointPovm, psi, x: float, y: float) -> float:
    """Born-rule probability ``<psi|Pi(x, y)|psi>`` of one grid outcome."""
    op = p.element(x, y)
    return float(la.expectation(op, psi).real)


def moment_operator(m: MarginalPovm, order: int = 1) -> np.ndarray:
    """``sum_x x**order * Pi(x)``."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    weights = m.values**order
    return np.einsum("x,xij->ij", weights, m.elements)


class PrecisionCheck(NamedTuple):
    precise: bool
    defect: float
    note: str = ""


def _spectral_on_values(A: np.ndarray, values: np.ndarray, value_tol: float, tol: Tolerances):
    """Map each eigenvalue of ``A`` onto the value set; returns (projectors, missing)."""
    dec = la.spectral(A, tol=tol)
    proj = np.zeros((values.size,) + A.shape, dtype=complex)
    missing = []
    for lam, P in zip(dec.eigenvalues, dec.projectors):
        k = _lookup(values, lam, value_tol)
        if k is None:
            missing.append(float(lam))
        else:
            proj[k] += P
    return proj, missing


def is_precise_for(m: MarginalPovm, A, tol: Tolerances | None = None, value_tol: float = 1e-9) -> PrecisionCheck:
    """Whether the marginal coincides with the spectral measure of ``A``.

    The defect is ``max_x ||Pi(x) - E^A(x)||`` (operator norm), with
    ``E^A(x) = 0`` for values that are not eigenvalues.  Eigenvalues of ``A``
    that are missing from the value set make the check fail outright.
    """
    tol = resolve(tol)
    A = la.as_operator(A, hermitian=True, tol=tol)
    if A.shape[0] != m.dim:
        raise DimensionError("observable and POVM dimensions differ")
    proj, missing = _spectral_on_values(A, m.values, value_tol, tol)
    defect = max(la.opnorm(m.elements[k] - proj[k]) for k in range(m.values.size))
    if missing:
        return PrecisionCheck(False, max(defect, 1.0), f"eigenvalues {missing} are not on the outcome grid")
    return PrecisionCheck(defect <= tol.precision, float(defect))


class ProductCheck(NamedTuple):
    product_projective: bool
    defect: float
    commutator_norm: float
    # False only if the POVM is product-projective yet [A, B] != 0
    consistent: bool = True


def is_product_projective(p: JointPovm, A, B, tol: Tolerances | None = None, value_tol: float = 1e-9) -> ProductCheck:
    """Whether ``Pi(x, y) = E^A(x) E^B(y)`` for every grid point.

    When it holds, ``[A, B]`` must vanish; the commutator norm is reported and
    ``consistent`` flags the (impossible in exact arithmetic) opposite case.
    """
    tol = resolve(tol)
    A = la.as_operator(A, hermitian=True, tol=tol)
    B = la.as_operator(B, hermitian=True, tol=tol)
    EA, miss_a = _spectral_on_values(A, p.x_values, value_tol, tol)
    EB, miss_b = _spectral_on_values(B, p.y_values, value_tol, tol)
    target = np.einsum("xij,yjk->xyik", EA, EB)
    defect = max(
        la.opnorm(p.elements[i, j] - target[i, j]) for i, j, _, _ in p.grid.pairs()
    )
    comm = la.opnorm(la.commutator(A, B))
    ok = not miss_a and not miss_b and defect <= tol.precision
    consistent = not ok or comm <= 10 * tol.commute * max(1.0, la.opnorm(A) * la.opnorm(B))
    return ProductCheck(bool(ok), float(defect), comm, bool(consistent))


def max_element_distance(p: JointPovm, q: JointPovm, value_tol: float = 1e-8) -> float:
    """Largest operator-norm difference between two POVMs after aligning grids.

    Grid values are matched within ``value_tol``; outcomes present in only one
    POVM are compared against the zero operator.
    """
    if p.dim != q.dim:
        raise DimensionError("POVM dimensions differ")

    def merged(a, b):
        out = list(a)
        for v in b:
            if _lookup(np.asarray(out), v, value_tol) is None:
                out.append(v)
        return np.sort(np.asarray(out, dtype=float))

    xs = merged(p.x_values, q.x_values)
    ys = merged(p.y_values, q.y_values)
    zero = np.zeros((p.dim, p.dim), dtype=complex)

    def get(r: JointPovm, x, y):
        i = _lookup(r.x_values, x, value_tol)
        j = _lookup(r.y_values, y, value_tol)
        return zero if i is None or j is None else r.elements[i, j]

    return max(la.opnorm(get(p, x, y) - get(q, x, y)) for x in xs for y in ys)
