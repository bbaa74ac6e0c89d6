"""Scenario files: two observables, a state, and optionally a measurement model."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import linalg as la
from .errors import DimensionError
from .process import Model, model_from_dict, model_to_dict, resolve_model
from .tolerances import Tolerances, resolve


@dataclass(frozen=True)
class Scenario:
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    model: Model | None = None
    hbar: float | None = None
    name: str = ""

    def __post_init__(self):
        A = la.as_operator(self.A, hermitian=True)
        B = la.as_operator(self.B, hermitian=True)
        psi = la.as_state(self.psi)
        if not (A.shape == B.shape and A.shape[0] == psi.size):
            raise DimensionError("A, B and psi dimensions differ")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "psi", psi)

    @property
    def dim(self) -> int:
        return self.psi.size

    def with_model(self, model: Model | None) -> "Scenario":
        return Scenario(self.A, self.B, self.psi, model, self.hbar, self.name)

    def check_model(self, tol: Tolerances | None = None) -> None:
        if self.model is None:
            return
        p, _ = resolve_model(self.model, resolve(tol))
        if p.dim != self.dim:
            raise DimensionError(f"model acts on dimension {p.dim}, scenario on {self.dim}")

    def to_dict(self) -> dict:
        out = {
            "dim": self.dim,
            "A": la.encode_matrix(self.A),
            "B": la.encode_matrix(self.B),
            "psi": la.encode_vector(self.psi),
        }
        if self.name:
            out["name"] = self.name
        if self.hbar is not None:
            out["hbar"] = self.hbar
        if self.model is not None:
            out["model"] = model_to_dict(self.model)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        model = model_from_dict(data["model"]) if data.get("model") is not None else None
        sc = cls(
            la.decode_matrix(data["A"]),
            la.decode_matrix(data["B"]),
            la.decode_vector(data["psi"]),
            model,
            data.get("hbar"),
            data.get("name", ""),
        )
        if "dim" in data and int(data["dim"]) != sc.dim:
            raise DimensionError("declared dim does not match the matrices")
        return sc


def dumps(obj: dict) -> str:
    """JSON with round-trip-exact floats (Python's repr uses 17 significant digits at most)."""
    return json.dumps(obj, indent=1)


def load(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save(obj: dict, path: str | Path) -> None:
    Path(path).write_text(dumps(obj) + "\n")
